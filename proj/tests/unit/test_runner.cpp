#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "persum/error.hpp"
#include "persum/mock_backend.hpp"
#include "persum/runner.hpp"

using namespace persum;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

const std::string kFixtures = PERSUM_FIXTURES;

fs::path temp_dir(const std::string& name) {
    const fs::path d = fs::temp_directory_path() / name;
    fs::remove_all(d);
    return d;
}

json base_config(const fs::path& out) {
    return {{"corpus", kFixtures + "/threads.jsonl"},
            {"split", {{"train", 5}, {"valid", 5}, {"test", 0}}},
            {"eval_split", "valid"},
            {"task", "A-then-B"},
            {"setting", "zero-shot"},
            {"agent", {{"name", "llama"}, {"endpoint", "mock://llama"}, {"model_id", "llama"}}},
            {"mock", kFixtures + "/e2e_mock.json"},
            {"output_dir", out.string()}};
}

std::vector<json> read_lines(const fs::path& p) {
    std::vector<json> out;
    std::ifstream in(p);
    std::string line;
    while (std::getline(in, line))
        if (!line.empty()) out.push_back(json::parse(line));
    return out;
}

}  // namespace

TEST_CASE("run config parsing") {
    const fs::path out = temp_dir("persum_cfg");
    const RunConfig c = run_config_from_json(base_config(out), "/base");
    CHECK(c.task == RunTask::AThenB);
    CHECK(c.agent->name == "llama");
    CHECK(c.split.valid_count == 5);
    CHECK(run_config_from_json({{"corpus", "c.jsonl"}, {"agent", {{"name", "a"}, {"endpoint", "mock://x"}, {"model_id", "m"}}}}, "/base").corpus ==
          fs::path("/base/c.jsonl"));
    json bad = base_config(out);
    bad["setting"] = "moa";
    CHECK_THROWS_AS(run_config_from_json(bad, "/"), ValidationError);
    bad = base_config(out);
    bad["setting"] = "few-shot-manual";
    bad["curated"] = {"t01"};
    CHECK_THROWS_AS(run_config_from_json(bad, "/"), ValidationError);
    bad["curated"] = {"t01", "t01", "t02"};
    CHECK_THROWS_AS(run_config_from_json(bad, "/"), ValidationError);
    bad = base_config(out);
    bad["task"] = "C";
    CHECK_THROWS_AS(run_config_from_json(bad, "/"), ValidationError);
    bad = base_config(out);
    bad["agent"] = "unknown";
    CHECK_THROWS_AS(run_config_from_json(bad, "/"), ValidationError);
}

TEST_CASE("zero-shot A-then-B run writes predictions, traces and a report") {
    const fs::path out = temp_dir("persum_run_e2e");
    const RunConfig c = run_config_from_json(base_config(out), "/");
    const RunSummary s = run(c);
    CHECK(s.total == 5);
    CHECK(s.completed == 5);
    CHECK(s.failed == 0);
    const auto preds = read_lines(out / "predictions.jsonl");
    REQUIRE(preds.size() == 5);
    CHECK(preds[0]["thread_id"] == "t06");
    CHECK(preds[4]["thread_id"] == "t10");
    REQUIRE(s.report);
    CHECK(s.report->task_a->overall == doctest::Approx(1.0));
    CHECK(s.report->task_b->rouge1 == doctest::Approx(1.0));
    const auto traces = read_lines(out / "traces.jsonl");
    REQUIRE(traces.size() == 5);
    const json& b_call = traces[0]["calls"][1];
    CHECK(b_call["stage"] == "B");
    // Task B prompts carry the Task A predictions verbatim.
    for (const auto& span : preds[0]["spans"]) {
        CHECK(b_call["user"].get<std::string>().find("\"" + span["text"].get<std::string>() + "\"") != std::string::npos);
    }
    for (const char* f : {"metadata.json", "requests.jsonl", "failures.jsonl", "gold.jsonl", "report.json", "report.txt", "confusion.csv"}) {
        CHECK_MESSAGE(fs::exists(out / f), f);
    }
    std::ifstream meta(out / "metadata.json");
    const json m = json::parse(meta);
    CHECK(m["official_split"]["train"] == 2236);
}

TEST_CASE("runs resume by thread id and stay deterministic across worker counts") {
    const fs::path out1 = temp_dir("persum_run_resume");
    json cfg = base_config(out1);
    RunOptions limited;
    limited.limit = 2;
    CHECK(run(run_config_from_json(cfg, "/"), limited).completed == 2);
    const RunSummary again = run(run_config_from_json(cfg, "/"));
    CHECK(again.skipped == 2);
    CHECK(again.completed == 3);

    const fs::path out2 = temp_dir("persum_run_workers");
    cfg["output_dir"] = out2.string();
    cfg["workers"] = 3;
    run(run_config_from_json(cfg, "/"));
    CHECK(read_lines(out1 / "predictions.jsonl") == read_lines(out2 / "predictions.jsonl"));
}

TEST_CASE("failures are recorded per thread and the run continues") {
    const fs::path out = temp_dir("persum_run_fail");
    const fs::path script = out.string() + "_mock.json";
    std::ifstream in(kFixtures + "/e2e_mock.json");
    json mock = json::parse(in);
    mock["rules"].insert(mock["rules"].begin(), json{{"contains", "Is a fever of 38.5"}, {"response", {{"status", 400}}}});
    std::ofstream(script) << mock.dump();
    json cfg = base_config(out);
    cfg["mock"] = script.string();
    const RunSummary s = run(run_config_from_json(cfg, "/"));
    CHECK(s.failed == 1);
    CHECK(s.completed == 4);
    const auto failures = read_lines(out / "failures.jsonl");
    REQUIRE(failures.size() == 1);
    CHECK(failures[0]["thread_id"] == "t07");
    fs::remove(script);
}

TEST_CASE("few-shot settings draw exemplars from the train split") {
    for (const char* setting : {"few-shot-manual", "few-shot-cluster"}) {
        const fs::path out = temp_dir(std::string("persum_run_") + setting);
        json cfg = base_config(out);
        cfg["task"] = "A";
        cfg["setting"] = setting;
        cfg["shots"] = 3;
        cfg["seed"] = 5;
        cfg["curated"] = {"t03", "t01", "t02", "t04"};
        run(run_config_from_json(cfg, "/"));
        const auto traces = read_lines(out / "traces.jsonl");
        REQUIRE(traces.size() == 5);
        for (const auto& t : traces) {
            const std::string user = t["calls"][0]["user"];
            std::size_t n = 0;
            for (auto pos = user.find("### Example "); pos != std::string::npos; pos = user.find("### Example ", pos + 1)) ++n;
            CHECK(n == 3);
            for (const char* valid_q : {"Why am I always tired", "Is a fever of 38.5", "What causes heartburn", "Do I need antibiotics", "How can I sleep better"}) {
                const auto first = user.find(valid_q);
                const auto input = user.find("### Input");
                if (first != std::string::npos) CHECK(first > input);
            }
        }
        if (std::string(setting) == "few-shot-manual") {
            const std::string user = traces[0]["calls"][0]["user"];
            CHECK(user.find("### Example 1\nQuestion: What helps with seasonal allergies?") != std::string::npos);
        }
    }
}

TEST_CASE("layer sweep produces one cell per grid point") {
    const fs::path out = temp_dir("persum_sweep");
    json cfg = base_config(out);
    cfg["setting"] = "moa";
    cfg["moa"] = {{"layers", {{{"role", "PROPOSE"}, {"agents", {{{"name", "p1"}, {"endpoint", "mock://a"}, {"model_id", "m"}},
                                                               {{"name", "p2"}, {"endpoint", "mock://a"}, {"model_id", "m"}}}}}}},
                  {"aggregator", {{"name", "agg"}, {"endpoint", "mock://a"}, {"model_id", "m"}}}};
    RunOptions o;
    o.limit = 2;
    const SweepResult r = sweep_layers(run_config_from_json(cfg, "/"), {1, 2, 3}, {ProposerMix::Single, ProposerMix::Multi}, o);
    CHECK(r.cells.size() == 6);
    for (const auto& c : r.cells) {
        CHECK_FALSE(c.error.has_value());
        CHECK(fs::exists(c.dir / "report.json"));
    }
    std::ifstream chart(r.chart);
    std::string line;
    std::size_t rows = 0;
    while (std::getline(chart, line)) ++rows;
    CHECK(rows == 7);
}

TEST_CASE("aggregator sweep keeps the layer trace and swaps only the aggregator") {
    const fs::path out = temp_dir("persum_agg_sweep");
    json cfg = base_config(out);
    cfg["setting"] = "moa";
    cfg["moa"] = {{"layers", {{{"role", "PROPOSE"}, {"agents", {{{"name", "p1"}, {"endpoint", "mock://a"}, {"model_id", "m"}},
                                                               {{"name", "p2"}, {"endpoint", "mock://a"}, {"model_id", "m"}}}}}}},
                  {"aggregator", {{"name", "agg"}, {"endpoint", "mock://a"}, {"model_id", "m"}}}};
    RunOptions o;
    o.limit = 3;
    const std::vector<AgentSpec> aggs = {{"agg-x", "mock://a", "mx", 0.0, 256, std::nullopt, ""},
                                         {"agg-y", "mock://a", "my", 0.0, 256, std::nullopt, ""}};
    const AggregatorSweep r = sweep_aggregators(run_config_from_json(cfg, "/"), aggs, o);
    REQUIRE(r.cells.size() == 2);
    std::vector<std::vector<json>> traces;
    for (const auto& c : r.cells) {
        CHECK_FALSE(c.error.has_value());
        traces.push_back(read_lines(c.dir / "traces.jsonl"));
    }
    REQUIRE(traces[0].size() == 3);
    REQUIRE(traces[0].size() == traces[1].size());
    for (std::size_t i = 0; i < traces[0].size(); ++i) {
        const json& a = traces[0][i]["calls"][0]["moa"];
        const json& b = traces[1][i]["calls"][0]["moa"];
        CHECK(a["layers"] == b["layers"]);
        CHECK(a["aggregator"]["agent"] == "agg-x");
        CHECK(b["aggregator"]["agent"] == "agg-y");
    }
    CHECK(fs::exists(r.chart));
    CHECK_THROWS_AS(sweep_aggregators(run_config_from_json(cfg, "/"), {aggs[0], aggs[0]}, o), ValidationError);
}
