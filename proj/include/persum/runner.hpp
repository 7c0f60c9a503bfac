#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "persum/corpus.hpp"
#include "persum/gateway.hpp"
#include "persum/moa.hpp"
#include "persum/parsing.hpp"
#include "persum/report.hpp"

namespace persum {

enum class RunTask { A, B, AThenB };
enum class Setting { ZeroShot, FewShotManual, FewShotCluster, Moa };

std::string_view to_string(RunTask t);
std::string_view to_string(Setting s);

struct RunConfig {
    std::string name;
    std::filesystem::path corpus;
    std::string schema = "canonical";
    SplitSpec split = kOfficialSplit;
    // train | valid | test
    std::string eval_split = "valid";
    // Last n threads of the evaluation split; all of them when unset.
    std::optional<std::size_t> tail;
    RunTask task = RunTask::A;
    Setting setting = Setting::ZeroShot;
    std::optional<AgentSpec> agent;
    std::optional<MoaConfig> moa;
    std::size_t shots = 3;
    std::uint64_t seed = 0;
    // Exemplar thread ids, in preference order (few-shot-manual).
    std::vector<std::string> curated;
    // JSON-Lines {"id", "vector"}; the hashed stub encoder when unset (few-shot-cluster).
    std::optional<std::filesystem::path> embeddings;
    // Number of k-means clusters; defaults to shots.
    std::optional<std::size_t> clusters;
    std::string template_id = "default";
    std::filesystem::path output_dir;
    std::size_t workers = 1;
    ParsePolicy parse_policy = ParsePolicy::Lenient;
    std::optional<std::filesystem::path> mock_script;
    int max_attempts = 5;
    std::optional<std::string> scorer;
};

// Relative paths resolve against base_dir. Throws ValidationError on missing or
// inconsistent fields.
RunConfig run_config_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir);
RunConfig load_run_config(const std::filesystem::path& path);
nlohmann::json to_json(const RunConfig& c);
void validate_run_config(const RunConfig& c);

struct RunOptions {
    std::optional<std::size_t> limit;
    // Route every agent to the mock backend.
    bool force_mock = false;
    // Overrides of the gateway backends, mainly for tests.
    std::shared_ptr<ChatBackend> http;
    std::function<void(std::chrono::milliseconds)> sleep;
    bool evaluate = true;
};

struct RunSummary {
    std::filesystem::path dir;
    std::size_t total = 0;
    std::size_t completed = 0;
    std::size_t skipped = 0;
    std::size_t failed = 0;
    std::optional<MetricReport> report;
};

// Writes predictions.jsonl, traces.jsonl, failures.jsonl, requests.jsonl, gold.jsonl and
// metadata.json under output_dir, then the report files. Threads already in
// predictions.jsonl are skipped.
RunSummary run(const RunConfig& config, const RunOptions& options = {});

struct SweepCell {
    std::size_t layers = 0;
    ProposerMix mix = ProposerMix::Single;
    std::filesystem::path dir;
    std::optional<MetricReport> report;
    std::optional<std::string> error;
};

struct SweepResult {
    std::vector<SweepCell> cells;
    std::optional<MetricReport> baseline;
    std::filesystem::path chart;
};

// Layer-count x proposer-mix grid over a moa base config, plus a zero-shot baseline with the
// first proposer. One run directory per cell and chart.csv in output_dir.
SweepResult sweep_layers(const RunConfig& base, const std::vector<std::size_t>& layer_counts,
                         const std::vector<ProposerMix>& mixes, const RunOptions& options = {});

struct AggregatorCell {
    AgentSpec aggregator;
    std::filesystem::path dir;
    std::optional<MetricReport> report;
    std::optional<std::string> error;
};

struct AggregatorSweep {
    std::vector<AggregatorCell> cells;
    std::filesystem::path chart;
};

// Same layers, one run per aggregator agent under output_dir/agg-<name>, plus
// aggregators.csv in output_dir.
AggregatorSweep sweep_aggregators(const RunConfig& base, const std::vector<AgentSpec>& aggregators,
                                  const RunOptions& options = {});

}  // namespace persum
