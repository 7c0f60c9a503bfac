#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "persum/corpus.hpp"
#include "persum/perspective.hpp"

namespace persum {

// A predicted span. Offsets are present once the text has been grounded in an answer.
struct LabeledSpan {
    std::string text;
    Perspective label = Perspective::Information;
    std::optional<std::size_t> answer_index;
    std::optional<std::size_t> start;
    std::optional<std::size_t> end;

    bool grounded() const { return answer_index && start && end; }
    bool operator==(const LabeledSpan&) const = default;
};

LabeledSpan to_labeled(const GoldSpan& g);

using PerspectiveSummaries = std::map<Perspective, std::string>;

enum class ParsePolicy { Strict, Lenient };

struct SpanParse {
    std::vector<LabeledSpan> spans;
    std::vector<std::string> warnings;
};

struct SummaryParse {
    PerspectiveSummaries summaries;
    std::vector<std::string> warnings;
};

// Extracts `span: "...", label: "..."` items from a completion and grounds each one in the
// thread's answers (first occurrence, answers searched in order). Never throws.
SpanParse parse_spans(std::string_view raw, const Thread& thread,
                      ParsePolicy policy = ParsePolicy::Lenient);

// Same extraction without grounding; offsets stay empty.
SpanParse parse_spans(std::string_view raw, ParsePolicy policy = ParsePolicy::Lenient);

// Recognises `<LABEL> Summary: <text>` lines and `Summary: <text>` lines under a label
// heading. Duplicate labels keep the first occurrence. Never throws.
SummaryParse parse_summaries(std::string_view raw);

// Grounds spans lacking offsets; returns a warning per span that could not be grounded.
std::vector<std::string> ground_spans(std::vector<LabeledSpan>& spans, const Thread& thread,
                                      bool normalize_quotes);

// One `span: "...", label: "..."` line per item, stable-sorted into output perspective order.
std::string serialize_spans(std::span<const LabeledSpan> spans);
std::string serialize_spans(std::span<const GoldSpan> spans);

// One `<LABEL> Summary: "..."` line per perspective, in output perspective order.
std::string serialize_summaries(const PerspectiveSummaries& summaries);

}  // namespace persum
