#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "persum/corpus.hpp"
#include "persum/parsing.hpp"

namespace persum {

struct PRF {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;

    // f1 = 0 when precision + recall = 0, else the harmonic mean.
    static PRF from(double precision, double recall);
};

// ---- answer-level classification -------------------------------------------------------

// Perspectives present in one answer of one thread.
struct AnswerPresence {
    std::string thread_id;
    std::size_t answer_index = 0;
    std::array<bool, kPerspectiveCount> labels{};
};

struct ClassScore {
    std::size_t true_positives = 0;
    std::size_t support = 0;     // gold positives
    std::size_t predicted = 0;   // predicted positives
    double f1 = 0.0;

    bool active() const { return support > 0 || predicted > 0; }
};

struct ClassificationScores {
    double macro_f1 = 0.0;
    double weighted_f1 = 0.0;
    std::array<ClassScore, kPerspectiveCount> per_class{};
};

// One entry per answer of each thread; grounded spans mark their answer.
std::vector<AnswerPresence> presence_from_gold(const Thread& thread);
std::vector<AnswerPresence> presence_from_predictions(const Thread& thread,
                                                      std::span<const LabeledSpan> spans);

// Per-perspective binary F1 over answers. A class with neither gold nor predicted positives
// scores F1 = 1. Weighted F1 weights by gold support. Throws ValidationError when the two
// inputs cover different (thread, answer) universes.
ClassificationScores classification_scores(std::span<const AnswerPresence> gold,
                                           std::span<const AnswerPresence> pred);

// Mean F1 over classes; active_only restricts it to classes with gold or predicted positives.
double macro_f1(std::span<const ClassScore> classes, bool active_only = false);

// ---- span matching ---------------------------------------------------------------------

enum class SpanMode { Strict, Proportional };
enum class UngroundedPolicy { Error, ZeroCredit };

// Sufficient statistics of both matching schemes; additive across threads.
struct SpanCounts {
    std::size_t predicted = 0;
    std::size_t gold = 0;
    std::size_t strict_tp = 0;
    double credit_sum = 0.0;    // proportional precision numerator
    double coverage_sum = 0.0;  // proportional recall numerator

    SpanCounts& operator+=(const SpanCounts& o);
    PRF strict() const;
    PRF proportional() const;
};

struct SpanTally {
    std::array<SpanCounts, kPerspectiveCount> per_class{};

    SpanCounts total() const;
    SpanTally& operator+=(const SpanTally& o);
};

// Strict: one-to-one greedy matching in prediction order. Grounded predictions need the same
// answer, label and offsets; ungrounded ones fall back to label plus normalised text.
// Proportional: assignment-free character overlap with same-label gold in the same answer.
SpanTally span_tally(std::span<const GoldSpan> gold, std::span<const LabeledSpan> pred,
                     UngroundedPolicy ungrounded = UngroundedPolicy::Error);

// Throws ValidationError listing ungrounded predictions in proportional mode.
PRF span_match(std::span<const GoldSpan> gold, std::span<const LabeledSpan> pred, SpanMode mode);

enum class SpanAveraging { Micro, Macro };
PRF span_prf(const SpanTally& tally, SpanMode mode, SpanAveraging averaging);

// Normalisation used by the strict text fallback.
std::string normalize_span_text(std::string_view text);

// ---- confusion matrix ------------------------------------------------------------------

struct ConfusionMatrix {
    // cells[gold][pred], indexed by index_of(Perspective).
    std::array<std::array<std::size_t, kPerspectiveCount>, kPerspectiveCount> cells{};
    std::size_t misses = 0;

    std::size_t total() const;
    ConfusionMatrix& operator+=(const ConfusionMatrix& o);
};

// Each gold span pairs with the same-answer prediction of largest character overlap (at
// least one character, earliest prediction on ties); unpaired gold spans count as misses.
ConfusionMatrix confusion_matrix(std::span<const GoldSpan> gold, std::span<const LabeledSpan> pred);

// ---- overall scores --------------------------------------------------------------------

inline constexpr std::array<std::string_view, 8> kTaskAColumns = {
    "M-F1", "W-F1", "St-P", "St-R", "St-F1", "Pr-P", "Pr-R", "Pr-F1"};
inline constexpr std::array<std::string_view, 8> kTaskBColumns = {
    "R-1", "R-2", "R-L", "BLEU", "MET", "BS", "AS", "SC"};

// Arithmetic mean of the eight sub-metrics. Throws ValidationError naming a missing,
// non-finite or out-of-range value.
double task_a_overall(std::span<const std::optional<double>> metrics);
double task_b_overall(std::span<const std::optional<double>> metrics);
double task_a_overall(std::span<const double> metrics);
double task_b_overall(std::span<const double> metrics);

}  // namespace persum
