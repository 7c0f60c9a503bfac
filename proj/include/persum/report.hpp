#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "persum/external_scorer.hpp"
#include "persum/metrics.hpp"
#include "persum/parsing.hpp"

namespace persum {

// One line of a predictions file: {"thread_id", "task", "spans"?, "summaries"?, "warnings"}.
struct Prediction {
    std::string thread_id;
    std::string task;
    std::optional<std::vector<LabeledSpan>> spans;
    std::optional<PerspectiveSummaries> summaries;
    std::vector<std::string> warnings;
};

nlohmann::json to_json(const LabeledSpan& span);
LabeledSpan labeled_span_from_json(const nlohmann::json& j);
nlohmann::json to_json(const Prediction& p);
Prediction prediction_from_json(const nlohmann::json& j);

// Throws ValidationError naming the line on malformed records or repeated thread ids.
std::vector<Prediction> load_predictions(const std::filesystem::path& path);
void append_prediction(const std::filesystem::path& path, const Prediction& p);

struct TaskAReport {
    double macro_f1 = 0.0;
    double weighted_f1 = 0.0;
    PRF strict;
    PRF proportional;
    double overall = 0.0;
    ConfusionMatrix confusion;
    SpanAveraging averaging = SpanAveraging::Micro;
    std::size_t threads = 0;

    std::array<double, 8> columns() const;
};

struct TaskBReport {
    double rouge1 = 0.0;
    double rouge2 = 0.0;
    double rougeL = 0.0;
    double bleu = 0.0;
    double meteor = 0.0;
    std::optional<double> bertscore;
    std::optional<double> alignscore;
    std::optional<double> summac;
    std::optional<double> overall;
    std::size_t threads = 0;
    std::size_t instances = 0;

    std::array<std::optional<double>, 8> columns() const;
    std::size_t present() const;
};

struct EvalOptions {
    SpanAveraging averaging = SpanAveraging::Micro;
    // URL or file for the neural metrics; none leaves them empty.
    std::optional<std::string> scorer;
};

// Predictions keyed by thread id; threads without an entry count as empty predictions.
// Ungrounded predicted spans are grounded against the thread first; leftovers get no
// proportional credit.
TaskAReport evaluate_task_a(const std::vector<Thread>& gold,
                            const std::map<std::string, std::vector<LabeledSpan>>& predictions,
                            const EvalOptions& options = {});

// Instances are (thread, perspective) pairs present in gold or prediction, averaged per
// thread and then over threads.
TaskBReport evaluate_task_b(const std::vector<Thread>& gold,
                            const std::map<std::string, PerspectiveSummaries>& predictions,
                            const EvalOptions& options = {});

// Pairs sent to the external scorer, in evaluation order.
std::vector<ScorerRequest> scorer_requests(const std::vector<Thread>& gold,
                                           const std::map<std::string, PerspectiveSummaries>& predictions);

struct MetricReport {
    std::string run;
    std::optional<TaskAReport> task_a;
    std::optional<TaskBReport> task_b;
    std::vector<std::string> warnings;

    nlohmann::json to_json() const;
    // Markdown tables with the published column order.
    std::string render_table() const;
};

inline constexpr std::string_view kTaskATableHeader =
    "| Run | M-F1 | W-F1 | St-P | St-R | St-F1 | Pr-P | Pr-R | Pr-F1 | Overall |";
inline constexpr std::string_view kTaskBTableHeader =
    "| Run | R-1 | R-2 | R-L | BLEU | MET | BS | AS | SC | Overall |";

// Rows are gold labels, columns predicted labels, both in output order, then a misses column.
std::string confusion_csv(const ConfusionMatrix& m);

// Matches predictions to gold ids. Throws ValidationError listing prediction ids absent from
// gold; gold ids without predictions produce warnings.
MetricReport evaluate_predictions(const std::vector<Prediction>& predictions,
                                  const std::vector<Thread>& gold, const std::string& run,
                                  const EvalOptions& options = {});

// report.json, report.txt and (with Task A) confusion.csv.
void write_report(const MetricReport& report, const std::filesystem::path& dir);

}  // namespace persum
