#include <fstream>
#include <iostream>

#include "CLI11.hpp"
#include "json.hpp"
#include "persum/corpus.hpp"
#include "persum/error.hpp"
#include "persum/ner_prep.hpp"
#include "persum/report.hpp"
#include "persum/runner.hpp"

namespace fs = std::filesystem;
using namespace persum;

namespace {

int cmd_run(const fs::path& config_path, const std::optional<fs::path>& mock, const std::optional<std::size_t>& limit) {
    RunConfig config = load_run_config(config_path);
    RunOptions options;
    options.limit = limit;
    if (mock) {
        config.mock_script = *mock;
        options.force_mock = true;
    }
    const RunSummary s = run(config, options);
    std::cout << "run " << s.dir.string() << ": " << s.completed << " completed, " << s.skipped
              << " skipped, " << s.failed << " failed of " << s.total << "\n";
    if (s.report) std::cout << s.report->render_table();
    return s.failed == 0 ? 0 : 2;
}

int cmd_evaluate(const fs::path& pred, const fs::path& gold, const std::string& schema,
                 const std::optional<std::string>& scorer, const fs::path& out, bool macro,
                 const std::string& name) {
    EvalOptions options;
    options.scorer = scorer;
    options.averaging = macro ? SpanAveraging::Macro : SpanAveraging::Micro;
    const LoadResult g = load_corpus(gold, schema);
    const MetricReport report = evaluate_predictions(load_predictions(pred), g.threads, name, options);
    for (const auto& w : report.warnings) std::cerr << "warning: " << w << "\n";
    write_report(report, out);
    std::cout << report.render_table();
    return 0;
}

int cmd_sweep(const fs::path& base, const std::optional<fs::path>& mock, const std::optional<std::size_t>& limit) {
    RunConfig config = load_run_config(base);
    RunOptions options;
    options.limit = limit;
    if (mock) {
        config.mock_script = *mock;
        options.force_mock = true;
    }
    const SweepResult r = sweep_layers(config, {1, 2, 3}, {ProposerMix::Single, ProposerMix::Multi}, options);
    std::size_t failed = 0;
    for (const auto& c : r.cells) {
        std::cout << c.dir.filename().string() << ": " << (c.error ? "failed (" + *c.error + ")" : "ok") << "\n";
        failed += c.error.has_value();
    }
    std::cout << "chart: " << r.chart.string() << "\n";
    return failed == 0 ? 0 : 2;
}

int cmd_sweep_aggregators(const fs::path& base, const fs::path& registry_path, const std::vector<std::string>& names,
                          const std::optional<fs::path>& mock, const std::optional<std::size_t>& limit) {
    RunConfig config = load_run_config(base);
    RunOptions options;
    options.limit = limit;
    if (mock) {
        config.mock_script = *mock;
        options.force_mock = true;
    }
    std::ifstream in(registry_path, std::ios::binary);
    const nlohmann::json registry = nlohmann::json::parse(in, nullptr, false);
    if (!registry.is_object()) throw ValidationError("agent registry " + registry_path.string() + " is not a JSON object");
    std::vector<AgentSpec> aggregators;
    for (const auto& n : names) {
        if (!registry.contains(n)) throw ValidationError("unknown agent '" + n + "' in " + registry_path.string());
        nlohmann::json spec = registry[n];
        spec["name"] = n;
        aggregators.push_back(agent_from_json(spec));
    }
    const AggregatorSweep r = sweep_aggregators(config, aggregators, options);
    std::size_t failed = 0;
    for (const auto& c : r.cells) {
        std::cout << c.dir.filename().string() << ": " << (c.error ? "failed (" + *c.error + ")" : "ok") << "\n";
        failed += c.error.has_value();
    }
    std::cout << "chart: " << r.chart.string() << "\n";
    return failed == 0 ? 0 : 2;
}

int cmd_bio_export(const fs::path& corpus, const std::string& schema, const fs::path& out,
                   const std::optional<fs::path>& weights_out) {
    const LoadResult loaded = load_corpus(corpus, schema);
    const auto seqs = bio_sequences(loaded.threads);
    std::ofstream o(out, std::ios::binary | std::ios::trunc);
    if (!o) throw Error("cannot write " + out.string());
    o << to_conll(seqs);
    const ClassWeights cw = class_weights(tag_counts(seqs));
    if (weights_out) {
        std::ofstream w(*weights_out, std::ios::binary | std::ios::trunc);
        if (!w) throw Error("cannot write " + weights_out->string());
        w << nlohmann::json{{"total", cw.total}, {"weights", cw.weights}}.dump(2) << "\n";
    }
    std::cout << seqs.size() << " sequences, " << cw.total << " tokens\n";
    return 0;
}

int cmd_validate(const fs::path& corpus, const std::string& schema, const std::optional<fs::path>& out) {
    const LoadResult loaded = load_corpus(corpus, schema);
    for (const auto& w : loaded.warnings) std::cerr << "warning: " << w << "\n";
    std::size_t spans = 0;
    std::size_t summaries = 0;
    for (const auto& t : loaded.threads) {
        spans += t.gold_spans.size();
        summaries += t.gold_summaries.size();
    }
    std::cout << loaded.threads.size() << " threads, " << spans << " spans, " << summaries
              << " summaries, " << loaded.warnings.size() << " warnings\n";
    if (out) save_corpus(*out, loaded.threads);
    return 0;
}

int cmd_embed_texts(const fs::path& corpus, const std::string& schema, const fs::path& out) {
    const LoadResult loaded = load_corpus(corpus, schema);
    std::ofstream o(out, std::ios::binary | std::ios::trunc);
    if (!o) throw Error("cannot write " + out.string());
    for (const auto& t : loaded.threads) o << nlohmann::json{{"id", t.id}, {"text", t.question}}.dump() << "\n";
    std::cout << loaded.threads.size() << " texts\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Perspective-aware answer summarization runs and evaluation"};
    app.require_subcommand(1);

    fs::path config;
    std::optional<fs::path> mock;
    std::optional<std::size_t> limit;
    auto* run_cmd = app.add_subcommand("run", "Run Task A / Task B over a corpus");
    run_cmd->add_option("--config", config, "Run config (JSON)")->required()->check(CLI::ExistingFile);
    run_cmd->add_option("--mock", mock, "Mock script; routes every agent to the mock backend")->check(CLI::ExistingFile);
    run_cmd->add_option("--limit", limit, "Process at most N threads");

    fs::path pred;
    fs::path gold;
    std::string schema = "canonical";
    std::optional<std::string> scorer;
    fs::path out_dir = "report";
    bool macro = false;
    std::string name = "run";
    auto* eval_cmd = app.add_subcommand("evaluate", "Score predictions against gold");
    eval_cmd->add_option("--pred", pred, "Predictions JSON-Lines")->required()->check(CLI::ExistingFile);
    eval_cmd->add_option("--gold", gold, "Gold corpus")->required()->check(CLI::ExistingFile);
    eval_cmd->add_option("--schema", schema, "Gold corpus schema");
    eval_cmd->add_option("--scorer", scorer, "External scorer URL or response file");
    eval_cmd->add_option("--out", out_dir, "Report directory");
    eval_cmd->add_flag("--macro", macro, "Macro-average span metrics over classes");
    eval_cmd->add_option("--name", name, "Row label in the report table");

    fs::path base;
    auto* sweep_cmd = app.add_subcommand("sweep-layers", "Layer-count x proposer-mix grid");
    sweep_cmd->add_option("--base", base, "Run config with a moa section")->required()->check(CLI::ExistingFile);
    sweep_cmd->add_option("--mock", mock, "Mock script")->check(CLI::ExistingFile);
    sweep_cmd->add_option("--limit", limit, "Process at most N threads per cell");

    fs::path registry;
    std::vector<std::string> agent_names;
    auto* agg_cmd = app.add_subcommand("sweep-aggregators", "Rerun a moa config once per aggregator agent");
    agg_cmd->add_option("--base", base, "Run config with a moa section")->required()->check(CLI::ExistingFile);
    agg_cmd->add_option("--agents", registry, "Agent registry (JSON object of named agents)")->required()->check(CLI::ExistingFile);
    agg_cmd->add_option("--names", agent_names, "Registry names to use as aggregator")->required()->delimiter(',');
    agg_cmd->add_option("--mock", mock, "Mock script")->check(CLI::ExistingFile);
    agg_cmd->add_option("--limit", limit, "Process at most N threads per aggregator");

    fs::path corpus;
    fs::path out_file;
    std::optional<fs::path> weights_out;
    auto* bio_cmd = app.add_subcommand("bio-export", "Write BIO-tagged answers in CoNLL format");
    bio_cmd->add_option("--corpus", corpus, "Corpus")->required()->check(CLI::ExistingFile);
    bio_cmd->add_option("--schema", schema, "Corpus schema");
    bio_cmd->add_option("--out", out_file, "CoNLL output")->required();
    bio_cmd->add_option("--weights", weights_out, "Class weight JSON output");

    std::optional<fs::path> canonical_out;
    auto* val_cmd = app.add_subcommand("validate-corpus", "Load, validate and optionally convert a corpus");
    val_cmd->add_option("--corpus", corpus, "Corpus")->required()->check(CLI::ExistingFile);
    val_cmd->add_option("--schema", schema, "Corpus schema");
    val_cmd->add_option("--out", canonical_out, "Write the canonical JSON-Lines form");

    auto* texts_cmd = app.add_subcommand("embed-texts", "Write {id, text} lines for the embedding encoder");
    texts_cmd->add_option("--corpus", corpus, "Corpus")->required()->check(CLI::ExistingFile);
    texts_cmd->add_option("--schema", schema, "Corpus schema");
    texts_cmd->add_option("--out", out_file, "Output JSON-Lines")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (*run_cmd) return cmd_run(config, mock, limit);
        if (*eval_cmd) return cmd_evaluate(pred, gold, schema, scorer, out_dir, macro, name);
        if (*sweep_cmd) return cmd_sweep(base, mock, limit);
        if (*agg_cmd) return cmd_sweep_aggregators(base, registry, agent_names, mock, limit);
        if (*bio_cmd) return cmd_bio_export(corpus, schema, out_file, weights_out);
        if (*val_cmd) return cmd_validate(corpus, schema, canonical_out);
        if (*texts_cmd) return cmd_embed_texts(corpus, schema, out_file);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
