#include "persum/lexical.hpp"

#include <algorithm>
#include <cmath>
#include <map>

namespace persum {

namespace {

using Ngram = std::vector<std::string>;

std::map<Ngram, std::size_t> ngram_counts(const std::vector<std::string>& tokens, std::size_t n) {
    std::map<Ngram, std::size_t> counts;
    if (tokens.size() < n) return counts;
    for (std::size_t i = 0; i + n <= tokens.size(); ++i) {
        ++counts[Ngram(tokens.begin() + static_cast<std::ptrdiff_t>(i),
                       tokens.begin() + static_cast<std::ptrdiff_t>(i + n))];
    }
    return counts;
}

std::size_t clipped_matches(const std::map<Ngram, std::size_t>& hyp, const std::map<Ngram, std::size_t>& ref) {
    std::size_t m = 0;
    for (const auto& [g, c] : hyp) {
        auto it = ref.find(g);
        if (it != ref.end()) m += std::min(c, it->second);
    }
    return m;
}

std::size_t total(const std::map<Ngram, std::size_t>& counts) {
    std::size_t n = 0;
    for (const auto& [g, c] : counts) n += c;
    return n;
}

double f1(double matches, std::size_t hyp_total, std::size_t ref_total) {
    if (matches == 0.0 || hyp_total == 0 || ref_total == 0) return 0.0;
    const double p = matches / static_cast<double>(hyp_total);
    const double r = matches / static_cast<double>(ref_total);
    return 2.0 * p * r / (p + r);
}

std::size_t lcs_length(const std::vector<std::string>& a, const std::vector<std::string>& b) {
    std::vector<std::size_t> prev(b.size() + 1, 0);
    std::vector<std::size_t> cur(b.size() + 1, 0);
    for (std::size_t i = 1; i <= a.size(); ++i) {
        for (std::size_t j = 1; j <= b.size(); ++j) {
            cur[j] = a[i - 1] == b[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], cur[j - 1]);
        }
        std::swap(prev, cur);
    }
    return prev[b.size()];
}

bool is_word_byte(unsigned char c) {
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c >= 0x80;
}

}  // namespace

std::vector<std::string> metric_tokens(std::string_view text) {
    std::vector<std::string> tokens;
    std::string cur;
    for (char ch : text) {
        const auto c = static_cast<unsigned char>(ch);
        if (is_word_byte(c)) {
            cur.push_back((c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : ch);
        } else if (!cur.empty()) {
            tokens.push_back(std::move(cur));
            cur.clear();
        }
    }
    if (!cur.empty()) tokens.push_back(std::move(cur));
    return tokens;
}

double rouge(std::string_view reference, std::string_view hypothesis, RougeVariant variant) {
    const auto ref = metric_tokens(reference);
    const auto hyp = metric_tokens(hypothesis);
    if (ref.empty() && hyp.empty()) return 1.0;
    if (ref.empty() || hyp.empty()) return 0.0;
    if (variant == RougeVariant::L) {
        return f1(static_cast<double>(lcs_length(ref, hyp)), hyp.size(), ref.size());
    }
    const std::size_t n = variant == RougeVariant::One ? 1 : 2;
    const auto hc = ngram_counts(hyp, n);
    const auto rc = ngram_counts(ref, n);
    // Texts too short for any n-gram: equal token sequences still score 1.
    if (hc.empty() && rc.empty()) return ref == hyp ? 1.0 : 0.0;
    return f1(static_cast<double>(clipped_matches(hc, rc)), total(hc), total(rc));
}

double bleu(std::string_view reference, std::string_view hypothesis) {
    const auto ref = metric_tokens(reference);
    const auto hyp = metric_tokens(hypothesis);
    if (ref.empty() && hyp.empty()) return 1.0;
    if (ref.empty() || hyp.empty()) return 0.0;
    double log_sum = 0.0;
    for (std::size_t n = 1; n <= 4; ++n) {
        const auto hc = ngram_counts(hyp, n);
        const std::size_t candidates = total(hc);
        const std::size_t matches = clipped_matches(hc, ngram_counts(ref, n));
        const double p = matches > 0 ? static_cast<double>(matches) / static_cast<double>(candidates)
                                     : 1.0 / static_cast<double>(candidates + 1);
        log_sum += std::log(p);
    }
    const double c = static_cast<double>(hyp.size());
    const double r = static_cast<double>(ref.size());
    const double bp = c < r ? std::exp(1.0 - r / c) : 1.0;
    return bp * std::exp(log_sum / 4.0);
}

double meteor(std::string_view reference, std::string_view hypothesis, const MeteorParams& params) {
    const auto ref = metric_tokens(reference);
    const auto hyp = metric_tokens(hypothesis);
    if (ref.empty() || hyp.empty()) return 0.0;

    std::vector<int> hyp_to_ref(hyp.size(), -1);
    std::vector<bool> ref_used(ref.size(), false);
    auto align = [&](auto&& same) {
        for (std::size_t i = 0; i < hyp.size(); ++i) {
            if (hyp_to_ref[i] >= 0) continue;
            for (std::size_t j = 0; j < ref.size(); ++j) {
                if (ref_used[j] || !same(i, j)) continue;
                hyp_to_ref[i] = static_cast<int>(j);
                ref_used[j] = true;
                break;
            }
        }
    };
    align([&](std::size_t i, std::size_t j) { return hyp[i] == ref[j]; });
    std::vector<std::string> hyp_stem;
    std::vector<std::string> ref_stem;
    for (const auto& t : hyp) hyp_stem.push_back(porter_stem(t));
    for (const auto& t : ref) ref_stem.push_back(porter_stem(t));
    align([&](std::size_t i, std::size_t j) { return hyp_stem[i] == ref_stem[j]; });

    std::size_t matches = 0;
    std::size_t chunks = 0;
    int prev_ref = -2;
    bool prev_matched = false;
    for (std::size_t i = 0; i < hyp.size(); ++i) {
        const int j = hyp_to_ref[i];
        if (j < 0) {
            prev_matched = false;
            continue;
        }
        ++matches;
        if (!prev_matched || j != prev_ref + 1) ++chunks;
        prev_ref = j;
        prev_matched = true;
    }
    if (matches == 0) return 0.0;

    const double m = static_cast<double>(matches);
    const double precision = m / static_cast<double>(hyp.size());
    const double recall = m / static_cast<double>(ref.size());
    const double fmean = precision * recall / (params.alpha * precision + (1.0 - params.alpha) * recall);
    const double penalty = params.gamma * std::pow(static_cast<double>(chunks) / m, params.beta);
    return fmean * (1.0 - penalty);
}

}  // namespace persum
