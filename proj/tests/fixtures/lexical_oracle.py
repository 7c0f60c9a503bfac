"""Reference BLEU-4 / ROUGE values for the desk pairs in lexical_pairs.json."""
import json
import math
import re
from collections import Counter
from pathlib import Path

HERE = Path(__file__).resolve().parent


def tokens(s):
    return re.findall(r"[a-z0-9\x80-\U0010ffff]+", s.lower())


def ngrams(t, n):
    return Counter(tuple(t[i:i + n]) for i in range(len(t) - n + 1))


def bleu(ref, hyp):
    r, h = tokens(ref), tokens(hyp)
    if not r and not h:
        return 1.0
    if not r or not h:
        return 0.0
    logs = 0.0
    for n in range(1, 5):
        hc, rc = ngrams(h, n), ngrams(r, n)
        total = sum(hc.values())
        match = sum(min(c, rc[g]) for g, c in hc.items())
        logs += math.log(match / total if match else 1.0 / (total + 1))
    bp = math.exp(1 - len(r) / len(h)) if len(h) < len(r) else 1.0
    return bp * math.exp(logs / 4)


def f1(m, a, b):
    if m == 0:
        return 0.0
    p, r = m / a, m / b
    return 2 * p * r / (p + r)


def rouge_n(ref, hyp, n):
    r, h = tokens(ref), tokens(hyp)
    if not r and not h:
        return 1.0
    if not r or not h:
        return 0.0
    hc, rc = ngrams(h, n), ngrams(r, n)
    if not hc and not rc:
        return 1.0 if r == h else 0.0
    if not hc or not rc:
        return 0.0
    return f1(sum((hc & rc).values()), sum(hc.values()), sum(rc.values()))


def rouge_l(ref, hyp):
    r, h = tokens(ref), tokens(hyp)
    if not r and not h:
        return 1.0
    if not r or not h:
        return 0.0
    dp = [[0] * (len(h) + 1) for _ in range(len(r) + 1)]
    for i in range(len(r)):
        for j in range(len(h)):
            dp[i + 1][j + 1] = dp[i][j] + 1 if r[i] == h[j] else max(dp[i][j + 1], dp[i + 1][j])
    return f1(dp[-1][-1], len(h), len(r))


if __name__ == "__main__":
    pairs = json.loads((HERE / "lexical_pairs.json").read_text())
    for ref, hyp in pairs:
        print(f"{{{bleu(ref, hyp):.10f}, {rouge_n(ref, hyp, 1):.10f}, "
              f"{rouge_n(ref, hyp, 2):.10f}, {rouge_l(ref, hyp):.10f}}},")
