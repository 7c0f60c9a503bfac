#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace persum {

// Lowercased ASCII letters/digits runs; bytes of multi-byte UTF-8 characters count as word
// characters so non-English words stay whole.
std::vector<std::string> metric_tokens(std::string_view text);

enum class RougeVariant { One, Two, L };

// F1 of clipped n-gram overlap (One, Two) or of the longest common subsequence (L).
// Both texts empty gives 1, exactly one empty gives 0.
double rouge(std::string_view reference, std::string_view hypothesis, RougeVariant variant);

// Sentence BLEU-4: geometric mean of clipped n-gram precisions, a precision with zero matches
// replaced by 1 / (candidates + 1), times the brevity penalty.
double bleu(std::string_view reference, std::string_view hypothesis);

struct MeteorParams {
    double alpha = 0.9;
    double beta = 3.0;
    double gamma = 0.5;
};

// Unigram alignment by exact match, then by Porter stem; penalty from the chunk count.
double meteor(std::string_view reference, std::string_view hypothesis, const MeteorParams& params = {});

// Porter (1980) suffix-stripping stemmer for lowercase ASCII words.
std::string porter_stem(std::string_view word);

}  // namespace persum
