#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "persum/corpus.hpp"

namespace persum {

// A token with codepoint offsets [start, end) into the source text.
struct TokenSpan {
    std::string text;
    std::size_t start = 0;
    std::size_t end = 0;

    bool operator==(const TokenSpan&) const = default;
};

// Maximal alphanumeric runs plus single punctuation characters; whitespace is dropped.
std::vector<TokenSpan> tokenize_with_offsets(std::string_view text);

struct BioTag {
    enum class Kind { O, B, I };
    Kind kind = Kind::O;
    Perspective label = Perspective::Information;  // ignored for O

    static BioTag outside() { return {}; }
    static BioTag begin(Perspective p) { return {Kind::B, p}; }
    static BioTag inside(Perspective p) { return {Kind::I, p}; }

    bool operator==(const BioTag& o) const {
        return kind == o.kind && (kind == Kind::O || label == o.label);
    }
};

inline constexpr std::size_t kBioTagCount = 1 + 2 * kPerspectiveCount;

std::string to_string(const BioTag& tag);
// Throws ValidationError on anything but O, B-<LABEL>, I-<LABEL>.
BioTag parse_bio_tag(std::string_view s);
// 0 for O, then B-tags and I-tags in perspective declaration order.
std::size_t tag_index(const BioTag& tag);

// Tokens entirely inside a span are tagged B (first) then I; others O. Spans claim tokens in
// order of earliest start, then longest. Throws ValidationError on offsets past text_length.
std::vector<BioTag> bio_align(std::span<const TokenSpan> tokens, std::span<const GoldSpan> spans,
                              std::size_t text_length);

// Every I-X follows B-X or I-X.
bool is_bio_valid(std::span<const BioTag> tags);

struct TaggedSegment {
    Perspective label = Perspective::Information;
    std::size_t first_token = 0;
    std::size_t last_token = 0;  // inclusive

    bool operator==(const TaggedSegment&) const = default;
};

// Segments of a tag sequence; an I-X without a matching predecessor opens a new segment.
std::vector<TaggedSegment> bio_decode(std::span<const BioTag> tags);

struct ClassWeights {
    std::map<std::string, double> weights;
    std::size_t total = 0;

    // Throws ValidationError for a class without a weight.
    double at(const std::string& tag_class) const;
};

// T = sum of counts, w_c = T / n_c. Throws ValidationError on an empty map or a zero count.
ClassWeights class_weights(const std::map<std::string, std::size_t>& counts);

// Mean over rows of weights[label] * -log softmax(logits)[label]. Throws ValidationError on
// inconsistent dimensions or an out-of-range label.
double weighted_cross_entropy(const std::vector<std::vector<double>>& logits,
                              std::span<const std::size_t> labels, std::span<const double> weights);

struct BioSequence {
    std::string thread_id;
    std::size_t answer_index = 0;
    std::vector<TokenSpan> tokens;
    std::vector<BioTag> tags;
};

// One sequence per answer, tagged with that answer's gold spans.
std::vector<BioSequence> bio_sequences(const std::vector<Thread>& threads);

// Per-tag counts over all sequences.
std::map<std::string, std::size_t> tag_counts(std::span<const BioSequence> sequences);

// "token<TAB>tag" lines, a blank line after each sequence.
std::string to_conll(std::span<const BioSequence> sequences);

}  // namespace persum
