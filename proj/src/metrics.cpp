#include "persum/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "persum/error.hpp"
#include "persum/utf8.hpp"

namespace persum {

PRF PRF::from(double precision, double recall) {
    const double sum = precision + recall;
    return PRF{precision, recall, sum == 0.0 ? 0.0 : 2.0 * precision * recall / sum};
}

namespace {

double ratio(double num, std::size_t den, bool other_side_empty) {
    if (den == 0) return other_side_empty ? 1.0 : 0.0;
    return num / static_cast<double>(den);
}

using Interval = std::pair<std::size_t, std::size_t>;

std::vector<Interval> merged(std::vector<Interval> v) {
    std::sort(v.begin(), v.end());
    std::vector<Interval> out;
    for (const auto& iv : v) {
        if (!out.empty() && iv.first <= out.back().second) {
            out.back().second = std::max(out.back().second, iv.second);
        } else {
            out.push_back(iv);
        }
    }
    return out;
}

std::size_t overlap(const Interval& a, const std::vector<Interval>& disjoint) {
    std::size_t n = 0;
    for (const auto& b : disjoint) {
        const std::size_t lo = std::max(a.first, b.first);
        const std::size_t hi = std::min(a.second, b.second);
        if (hi > lo) n += hi - lo;
    }
    return n;
}

std::string key_of(const std::string& thread, std::size_t answer) {
    return thread + '\x1f' + std::to_string(answer);
}

std::vector<AnswerPresence> blank_presence(const Thread& t) {
    std::vector<AnswerPresence> out;
    for (std::size_t a = 0; a < t.answers.size(); ++a) out.push_back({t.id, a, {}});
    return out;
}

double checked_mean(std::span<const std::optional<double>> m,
                    const std::array<std::string_view, 8>& names) {
    if (m.size() != names.size()) {
        throw ValidationError("overall score needs exactly 8 sub-metrics, got " + std::to_string(m.size()));
    }
    double sum = 0.0;
    for (std::size_t i = 0; i < m.size(); ++i) {
        const std::string name(names[i]);
        if (!m[i]) throw ValidationError("overall score: missing " + name);
        if (!std::isfinite(*m[i]) || *m[i] < 0.0 || *m[i] > 1.0) {
            throw ValidationError("overall score: " + name + " must be a finite value in [0, 1]");
        }
        sum += *m[i];
    }
    return sum / static_cast<double>(m.size());
}

}  // namespace

std::vector<AnswerPresence> presence_from_gold(const Thread& t) {
    auto out = blank_presence(t);
    for (const GoldSpan& g : t.gold_spans) {
        if (g.answer_index < out.size()) out[g.answer_index].labels[index_of(g.label)] = true;
    }
    return out;
}

std::vector<AnswerPresence> presence_from_predictions(const Thread& t, std::span<const LabeledSpan> spans) {
    auto out = blank_presence(t);
    for (const LabeledSpan& s : spans) {
        if (s.answer_index && *s.answer_index < out.size()) out[*s.answer_index].labels[index_of(s.label)] = true;
    }
    return out;
}

ClassificationScores classification_scores(std::span<const AnswerPresence> gold,
                                           std::span<const AnswerPresence> pred) {
    std::map<std::string, const AnswerPresence*> gold_by_key;
    for (const auto& g : gold) {
        if (!gold_by_key.emplace(key_of(g.thread_id, g.answer_index), &g).second) {
            throw ValidationError("classification: duplicate gold entry for thread " + g.thread_id +
                                  " answer " + std::to_string(g.answer_index));
        }
    }
    std::map<std::string, const AnswerPresence*> pred_by_key;
    for (const auto& p : pred) {
        const std::string key = key_of(p.thread_id, p.answer_index);
        if (!gold_by_key.count(key)) {
            throw ValidationError("classification: prediction for thread " + p.thread_id + " answer " +
                                  std::to_string(p.answer_index) + " has no gold counterpart");
        }
        if (!pred_by_key.emplace(key, &p).second) {
            throw ValidationError("classification: duplicate prediction for thread " + p.thread_id);
        }
    }
    if (pred_by_key.size() != gold_by_key.size()) {
        throw ValidationError("classification: " + std::to_string(gold_by_key.size() - pred_by_key.size()) +
                              " gold answers have no prediction entry");
    }

    ClassificationScores s;
    for (const auto& [key, g] : gold_by_key) {
        const AnswerPresence* p = pred_by_key.at(key);
        for (std::size_t c = 0; c < kPerspectiveCount; ++c) {
            ClassScore& cs = s.per_class[c];
            if (g->labels[c]) ++cs.support;
            if (p->labels[c]) ++cs.predicted;
            if (g->labels[c] && p->labels[c]) ++cs.true_positives;
        }
    }
    std::size_t total_support = 0;
    double weighted = 0.0;
    bool any_pred = false;
    for (ClassScore& cs : s.per_class) {
        if (!cs.active()) {
            cs.f1 = 1.0;
        } else {
            cs.f1 = 2.0 * static_cast<double>(cs.true_positives) /
                    static_cast<double>(cs.support + cs.predicted);
        }
        total_support += cs.support;
        weighted += cs.f1 * static_cast<double>(cs.support);
        any_pred = any_pred || cs.predicted > 0;
    }
    s.macro_f1 = macro_f1(s.per_class);
    if (total_support == 0) {
        s.weighted_f1 = any_pred ? 0.0 : 1.0;
    } else {
        s.weighted_f1 = weighted / static_cast<double>(total_support);
    }
    return s;
}

double macro_f1(std::span<const ClassScore> classes, bool active_only) {
    double sum = 0.0;
    std::size_t n = 0;
    for (const ClassScore& c : classes) {
        if (active_only && !c.active()) continue;
        sum += c.f1;
        ++n;
    }
    return n == 0 ? 1.0 : sum / static_cast<double>(n);
}

SpanCounts& SpanCounts::operator+=(const SpanCounts& o) {
    predicted += o.predicted;
    gold += o.gold;
    strict_tp += o.strict_tp;
    credit_sum += o.credit_sum;
    coverage_sum += o.coverage_sum;
    return *this;
}

PRF SpanCounts::strict() const {
    return PRF::from(ratio(static_cast<double>(strict_tp), predicted, gold == 0),
                     ratio(static_cast<double>(strict_tp), gold, predicted == 0));
}

PRF SpanCounts::proportional() const {
    return PRF::from(ratio(credit_sum, predicted, gold == 0), ratio(coverage_sum, gold, predicted == 0));
}

SpanCounts SpanTally::total() const {
    SpanCounts t;
    for (const auto& c : per_class) t += c;
    return t;
}

SpanTally& SpanTally::operator+=(const SpanTally& o) {
    for (std::size_t c = 0; c < kPerspectiveCount; ++c) per_class[c] += o.per_class[c];
    return *this;
}

std::string normalize_span_text(std::string_view text) {
    return utf8::to_lower_ascii(utf8::collapse_whitespace(utf8::normalize_quotes(text)));
}

SpanTally span_tally(std::span<const GoldSpan> gold, std::span<const LabeledSpan> pred,
                     UngroundedPolicy ungrounded) {
    if (ungrounded == UngroundedPolicy::Error) {
        std::string missing;
        for (const auto& p : pred) {
            if (!p.grounded()) missing += (missing.empty() ? "\"" : ", \"") + p.text + "\"";
        }
        if (!missing.empty()) throw ValidationError("proportional matching needs grounded spans; ungrounded: " + missing);
    }

    SpanTally tally;
    for (const auto& g : gold) ++tally.per_class[index_of(g.label)].gold;
    for (const auto& p : pred) ++tally.per_class[index_of(p.label)].predicted;

    // Strict: offset matches first, then the text fallback for ungrounded predictions.
    std::vector<bool> consumed(gold.size(), false);
    for (const auto& p : pred) {
        if (!p.grounded()) continue;
        for (std::size_t i = 0; i < gold.size(); ++i) {
            const GoldSpan& g = gold[i];
            if (consumed[i] || g.label != p.label || g.answer_index != *p.answer_index ||
                g.start != *p.start || g.end != *p.end) {
                continue;
            }
            consumed[i] = true;
            ++tally.per_class[index_of(p.label)].strict_tp;
            break;
        }
    }
    for (const auto& p : pred) {
        if (p.grounded()) continue;
        const std::string norm = normalize_span_text(p.text);
        for (std::size_t i = 0; i < gold.size(); ++i) {
            if (consumed[i] || gold[i].label != p.label || normalize_span_text(gold[i].text) != norm) continue;
            consumed[i] = true;
            ++tally.per_class[index_of(p.label)].strict_tp;
            break;
        }
    }

    // Proportional overlap per (answer, label).
    using Key = std::pair<std::size_t, Perspective>;
    std::map<Key, std::vector<Interval>> gold_iv;
    std::map<Key, std::vector<Interval>> pred_iv;
    for (const auto& g : gold) gold_iv[{g.answer_index, g.label}].emplace_back(g.start, g.end);
    for (const auto& p : pred) {
        if (p.grounded()) pred_iv[{*p.answer_index, p.label}].emplace_back(*p.start, *p.end);
    }
    for (auto& [k, v] : gold_iv) v = merged(std::move(v));
    for (auto& [k, v] : pred_iv) v = merged(std::move(v));

    for (const auto& p : pred) {
        if (!p.grounded() || *p.end <= *p.start) continue;
        auto it = gold_iv.find({*p.answer_index, p.label});
        if (it == gold_iv.end()) continue;
        const Interval iv{*p.start, *p.end};
        tally.per_class[index_of(p.label)].credit_sum +=
            static_cast<double>(overlap(iv, it->second)) / static_cast<double>(iv.second - iv.first);
    }
    for (const auto& g : gold) {
        if (g.end <= g.start) continue;
        auto it = pred_iv.find({g.answer_index, g.label});
        if (it == pred_iv.end()) continue;
        const Interval iv{g.start, g.end};
        tally.per_class[index_of(g.label)].coverage_sum +=
            static_cast<double>(overlap(iv, it->second)) / static_cast<double>(iv.second - iv.first);
    }
    return tally;
}

PRF span_match(std::span<const GoldSpan> gold, std::span<const LabeledSpan> pred, SpanMode mode) {
    const SpanTally t = span_tally(gold, pred, mode == SpanMode::Proportional ? UngroundedPolicy::Error
                                                                              : UngroundedPolicy::ZeroCredit);
    return mode == SpanMode::Strict ? t.total().strict() : t.total().proportional();
}

PRF span_prf(const SpanTally& tally, SpanMode mode, SpanAveraging averaging) {
    auto pick = [mode](const SpanCounts& c) { return mode == SpanMode::Strict ? c.strict() : c.proportional(); };
    if (averaging == SpanAveraging::Micro) return pick(tally.total());
    PRF sum;
    std::size_t n = 0;
    for (const SpanCounts& c : tally.per_class) {
        if (c.gold == 0 && c.predicted == 0) continue;
        const PRF prf = pick(c);
        sum.precision += prf.precision;
        sum.recall += prf.recall;
        sum.f1 += prf.f1;
        ++n;
    }
    if (n == 0) return pick(tally.total());
    const double d = static_cast<double>(n);
    return PRF{sum.precision / d, sum.recall / d, sum.f1 / d};
}

std::size_t ConfusionMatrix::total() const {
    std::size_t n = 0;
    for (const auto& row : cells) {
        for (std::size_t v : row) n += v;
    }
    return n;
}

ConfusionMatrix& ConfusionMatrix::operator+=(const ConfusionMatrix& o) {
    for (std::size_t r = 0; r < kPerspectiveCount; ++r) {
        for (std::size_t c = 0; c < kPerspectiveCount; ++c) cells[r][c] += o.cells[r][c];
    }
    misses += o.misses;
    return *this;
}

ConfusionMatrix confusion_matrix(std::span<const GoldSpan> gold, std::span<const LabeledSpan> pred) {
    ConfusionMatrix m;
    for (const GoldSpan& g : gold) {
        const LabeledSpan* best = nullptr;
        std::size_t best_overlap = 0;
        for (const LabeledSpan& p : pred) {
            if (!p.grounded() || *p.answer_index != g.answer_index) continue;
            const std::size_t lo = std::max(g.start, *p.start);
            const std::size_t hi = std::min(g.end, *p.end);
            const std::size_t ov = hi > lo ? hi - lo : 0;
            if (ov > best_overlap) {
                best_overlap = ov;
                best = &p;
            }
        }
        if (best) {
            ++m.cells[index_of(g.label)][index_of(best->label)];
        } else {
            ++m.misses;
        }
    }
    return m;
}

double task_a_overall(std::span<const std::optional<double>> m) { return checked_mean(m, kTaskAColumns); }
double task_b_overall(std::span<const std::optional<double>> m) { return checked_mean(m, kTaskBColumns); }

double task_a_overall(std::span<const double> m) {
    std::vector<std::optional<double>> v(m.begin(), m.end());
    return task_a_overall(std::span<const std::optional<double>>(v));
}

double task_b_overall(std::span<const double> m) {
    std::vector<std::optional<double>> v(m.begin(), m.end());
    return task_b_overall(std::span<const std::optional<double>>(v));
}

}  // namespace persum
