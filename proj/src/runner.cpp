#include "persum/runner.hpp"

#include <algorithm>
#include <atomic>
#include <fstream>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include "persum/error.hpp"
#include "persum/exemplars.hpp"
#include "persum/mock_backend.hpp"
#include "persum/prompting.hpp"
#include "persum/utf8.hpp"

namespace persum {

using nlohmann::json;
namespace fs = std::filesystem;

std::string_view to_string(RunTask t) {
    switch (t) {
        case RunTask::A: return "A";
        case RunTask::B: return "B";
        case RunTask::AThenB: return "A-then-B";
    }
    return "A";
}

std::string_view to_string(Setting s) {
    switch (s) {
        case Setting::ZeroShot: return "zero-shot";
        case Setting::FewShotManual: return "few-shot-manual";
        case Setting::FewShotCluster: return "few-shot-cluster";
        case Setting::Moa: return "moa";
    }
    return "zero-shot";
}

namespace {

RunTask parse_run_task(const std::string& s) {
    if (s == "A") return RunTask::A;
    if (s == "B") return RunTask::B;
    if (s == "A-then-B") return RunTask::AThenB;
    throw ValidationError("run config: task must be A, B or A-then-B, got '" + s + "'");
}

Setting parse_setting(const std::string& s) {
    for (Setting v : {Setting::ZeroShot, Setting::FewShotManual, Setting::FewShotCluster, Setting::Moa}) {
        if (to_string(v) == s) return v;
    }
    throw ValidationError("run config: unknown setting '" + s + "'");
}

fs::path resolve(const fs::path& base, const std::string& p) {
    const fs::path path(p);
    return path.is_absolute() ? path : base / path;
}

json read_json_file(const fs::path& path, const char* what) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError(std::string("cannot read ") + what + " " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    json j = json::parse(buf.str(), nullptr, false);
    if (j.is_discarded()) throw ValidationError(std::string(what) + " " + path.string() + " is not valid JSON");
    return j;
}

template <typename T>
T get_field(const json& j, const char* key) {
    try {
        return j.at(key).get<T>();
    } catch (const json::exception&) {
        throw ValidationError(std::string("run config: field '") + key + "' has the wrong type");
    }
}

}  // namespace

RunConfig run_config_from_json(const json& j, const fs::path& base_dir) {
    if (!j.is_object()) throw ValidationError("run config must be a JSON object");
    RunConfig c;
    const json registry = j.value("agents", json::object());
    if (!j.contains("corpus")) throw ValidationError("run config: 'corpus' required");
    c.corpus = resolve(base_dir, get_field<std::string>(j, "corpus"));
    if (j.contains("name")) c.name = get_field<std::string>(j, "name");
    if (j.contains("schema")) c.schema = get_field<std::string>(j, "schema");
    if (j.contains("split")) {
        const json& s = j["split"];
        if (!s.is_object()) throw ValidationError("run config: 'split' must be an object");
        c.split = {s.value("train", std::size_t{0}), s.value("valid", std::size_t{0}),
                   s.value("test", std::size_t{0})};
    }
    if (j.contains("eval_split")) c.eval_split = get_field<std::string>(j, "eval_split");
    if (j.contains("tail") && !j["tail"].is_null()) c.tail = get_field<std::size_t>(j, "tail");
    if (j.contains("task")) c.task = parse_run_task(get_field<std::string>(j, "task"));
    if (j.contains("setting")) c.setting = parse_setting(get_field<std::string>(j, "setting"));
    if (j.contains("agent")) {
        const json& a = j["agent"];
        if (a.is_string()) {
            const std::string name = a.get<std::string>();
            if (!registry.contains(name)) throw ValidationError("run config: unknown agent '" + name + "'");
            json spec = registry[name];
            if (!spec.contains("name")) spec["name"] = name;
            c.agent = agent_from_json(spec);
        } else {
            c.agent = agent_from_json(a);
        }
    }
    if (j.contains("moa")) {
        const json& m = j["moa"];
        if (m.is_string()) {
            c.moa = load_moa_config(resolve(base_dir, m.get<std::string>()));
        } else {
            json merged = m;
            if (!merged.contains("agents") && !registry.empty()) merged["agents"] = registry;
            c.moa = moa_from_json(merged);
        }
    }
    if (j.contains("shots")) c.shots = get_field<std::size_t>(j, "shots");
    if (j.contains("seed")) c.seed = get_field<std::uint64_t>(j, "seed");
    if (j.contains("curated")) {
        const json& cur = j["curated"];
        if (cur.is_string()) {
            const json list = read_json_file(resolve(base_dir, cur.get<std::string>()), "curated list");
            c.curated = list.get<std::vector<std::string>>();
        } else {
            c.curated = get_field<std::vector<std::string>>(j, "curated");
        }
        validate_curated(c.curated);
    }
    if (j.contains("embeddings") && !j["embeddings"].is_null()) {
        c.embeddings = resolve(base_dir, get_field<std::string>(j, "embeddings"));
    }
    if (j.contains("clusters") && !j["clusters"].is_null()) c.clusters = get_field<std::size_t>(j, "clusters");
    if (j.contains("template")) c.template_id = get_field<std::string>(j, "template");
    c.output_dir = resolve(base_dir, j.value("output_dir", std::string("runs/") + (c.name.empty() ? "run" : c.name)));
    if (j.contains("workers")) c.workers = get_field<std::size_t>(j, "workers");
    if (j.contains("parse_policy")) {
        const std::string p = get_field<std::string>(j, "parse_policy");
        if (p == "strict") c.parse_policy = ParsePolicy::Strict;
        else if (p == "lenient") c.parse_policy = ParsePolicy::Lenient;
        else throw ValidationError("run config: parse_policy must be strict or lenient");
    }
    if (j.contains("mock") && !j["mock"].is_null()) c.mock_script = resolve(base_dir, get_field<std::string>(j, "mock"));
    if (j.contains("max_attempts")) c.max_attempts = get_field<int>(j, "max_attempts");
    if (j.contains("scorer") && !j["scorer"].is_null()) {
        const std::string s = get_field<std::string>(j, "scorer");
        c.scorer = parse_url(s) ? s : resolve(base_dir, s).string();
    }
    validate_run_config(c);
    return c;
}

RunConfig load_run_config(const fs::path& path) {
    json j = read_json_file(path, "run config");
    if (j.is_object() && !j.contains("name")) j["name"] = path.stem().string();
    return run_config_from_json(j, path.parent_path());
}

void validate_run_config(const RunConfig& c) {
    if (c.eval_split != "train" && c.eval_split != "valid" && c.eval_split != "test") {
        throw ValidationError("run config: eval_split must be train, valid or test");
    }
    if (c.workers == 0) throw ValidationError("run config: workers must be at least 1");
    if (c.max_attempts < 1) throw ValidationError("run config: max_attempts must be at least 1");
    if (c.setting == Setting::Moa) {
        if (!c.moa) throw ValidationError("run config: setting moa needs a 'moa' config");
    } else if (!c.agent) {
        throw ValidationError("run config: setting " + std::string(to_string(c.setting)) + " needs an 'agent'");
    }
    if (c.setting == Setting::FewShotManual || c.setting == Setting::FewShotCluster) {
        if (c.shots == 0 || c.shots > kMaxExemplars) {
            throw ValidationError("run config: shots must be between 1 and " + std::to_string(kMaxExemplars));
        }
    }
    if (c.setting == Setting::FewShotManual && c.curated.size() < c.shots) {
        throw ValidationError("run config: curated list has " + std::to_string(c.curated.size()) +
                              " ids for " + std::to_string(c.shots) + " shots");
    }
    if (c.setting == Setting::FewShotCluster && c.clusters && *c.clusters < c.shots) {
        throw ValidationError("run config: clusters must be at least shots");
    }
    if (c.agent) validate_agent(*c.agent);
}

json to_json(const RunConfig& c) {
    json j{{"name", c.name},
           {"corpus", c.corpus.string()},
           {"schema", c.schema},
           {"split", {{"train", c.split.train_count}, {"valid", c.split.valid_count}, {"test", c.split.test_count}}},
           {"eval_split", c.eval_split},
           {"tail", c.tail ? json(*c.tail) : json(nullptr)},
           {"task", std::string(to_string(c.task))},
           {"setting", std::string(to_string(c.setting))},
           {"shots", c.shots},
           {"seed", c.seed},
           {"curated", c.curated},
           {"embeddings", c.embeddings ? json(c.embeddings->string()) : json(nullptr)},
           {"clusters", c.clusters ? json(*c.clusters) : json(nullptr)},
           {"template", c.template_id},
           {"output_dir", c.output_dir.string()},
           {"workers", c.workers},
           {"parse_policy", c.parse_policy == ParsePolicy::Strict ? "strict" : "lenient"},
           {"max_attempts", c.max_attempts}};
    if (c.agent) j["agent"] = to_json(*c.agent);
    if (c.moa) j["moa"] = to_json(*c.moa);
    return j;
}

namespace {

bool has_target(const Thread& t, RunTask task) {
    const bool a = !t.gold_spans.empty();
    const bool b = !t.gold_summaries.empty();
    switch (task) {
        case RunTask::A: return a;
        case RunTask::B: return a && b;
        case RunTask::AThenB: return a && b;
    }
    return false;
}

std::string embedding_text(const Thread& t) { return t.question; }

// Few-shot exemplar choice per evaluation thread; exemplars come from the train split only.
class ExemplarPlanner {
public:
    ExemplarPlanner(const RunConfig& c, const std::vector<Thread>& pool) : config_(c) {
        for (const Thread& t : pool) {
            if (has_target(t, c.task)) by_id_.emplace(t.id, &t);
        }
        if (c.setting == Setting::FewShotManual) {
            for (const std::string& id : manual_exemplars(c.curated, c.shots)) {
                auto it = by_id_.find(id);
                if (it == by_id_.end()) {
                    throw ValidationError("curated exemplar '" + id + "' is not an annotated train thread");
                }
                manual_.push_back(it->second);
            }
        } else if (c.setting == Setting::FewShotCluster) {
            if (c.embeddings) file_table_ = load_embeddings(*c.embeddings);
            for (const auto& [id, t] : by_id_) candidates_[id] = embed(*t);
            const std::size_t k = c.clusters.value_or(c.shots);
            if (k > candidates_.size()) {
                throw ValidationError("few-shot-cluster: " + std::to_string(k) + " clusters for " +
                                      std::to_string(candidates_.size()) + " annotated train threads");
            }
            clustering_ = kmeans(candidates_, k, c.seed);
        }
    }

    std::vector<const Thread*> select(const Thread& query) const {
        if (config_.setting == Setting::FewShotManual) return manual_;
        if (config_.setting != Setting::FewShotCluster) return {};
        const EmbeddingVector q = embed(query);
        std::vector<const Thread*> out;
        for (const std::string& id : select_exemplars(clustering_, q, config_.shots, candidates_)) {
            out.push_back(by_id_.at(id));
        }
        return out;
    }

    std::size_t pool_size() const { return by_id_.size(); }

private:
    EmbeddingVector embed(const Thread& t) const {
        if (!config_.embeddings) return stub_embedding(embedding_text(t));
        auto it = file_table_.find(t.id);
        if (it == file_table_.end()) {
            throw ValidationError("embeddings file has no vector for thread '" + t.id + "'");
        }
        return it->second;
    }

    const RunConfig& config_;
    std::map<std::string, const Thread*> by_id_;
    std::vector<const Thread*> manual_;
    EmbeddingTable file_table_;
    EmbeddingTable candidates_;
    Clustering clustering_;
};

struct Outcome {
    Prediction prediction;
    json trace = json::array();
    std::optional<std::string> error;
};

json call_json(const std::string& stage, const AgentSpec& agent, const PromptMessages& prompt,
               const ModelResponse& r) {
    return {{"stage", stage},   {"agent", agent.name},        {"system", prompt.system},
            {"user", prompt.user}, {"output", r.text},         {"latency_ms", r.latency_ms},
            {"attempt", r.attempt}};
}

class ThreadRunner {
public:
    ThreadRunner(const RunConfig& c, ModelGateway& gateway, const ExemplarPlanner& planner)
        : config_(c), gateway_(gateway), planner_(planner) {}

    Outcome operator()(const Thread& thread) const {
        Outcome out;
        out.prediction.thread_id = thread.id;
        out.prediction.task = std::string(to_string(config_.task));
        try {
            const auto chosen = planner_.select(thread);
            std::vector<LabeledSpan> spans;
            if (config_.task != RunTask::B) {
                std::vector<Exemplar> ex;
                for (const Thread* t : chosen) ex.push_back(Exemplar::for_task(*t, Task::A));
                const PromptMessages prompt = build_task_a_prompt(thread, ex, config_.template_id);
                const std::string raw = complete("A", Task::A, thread, prompt, out.trace);
                SpanParse parsed = parse_spans(raw, thread, config_.parse_policy);
                spans = parsed.spans;
                out.prediction.spans = parsed.spans;
                append(out.prediction.warnings, parsed.warnings);
            } else {
                for (const GoldSpan& g : thread.gold_spans) spans.push_back(to_labeled(g));
            }
            if (config_.task != RunTask::A) {
                out.prediction.summaries.emplace();
                if (spans.empty()) {
                    out.prediction.warnings.push_back("no spans to summarise; Task B skipped");
                } else {
                    std::vector<Exemplar> ex;
                    for (const Thread* t : chosen) ex.push_back(Exemplar::for_task(*t, Task::B));
                    const PromptMessages prompt = build_task_b_prompt(thread, spans, ex, config_.template_id);
                    const std::string raw = complete("B", Task::B, thread, prompt, out.trace);
                    SummaryParse parsed = parse_summaries(raw);
                    out.prediction.summaries = parsed.summaries;
                    append(out.prediction.warnings, parsed.warnings);
                }
            }
        } catch (const PipelineError& e) {
            out.trace.push_back({{"stage", "moa"}, {"trace", e.trace.to_json()}});
            out.error = e.what();
        } catch (const TransportError& e) {
            out.trace.push_back({{"stage", "transport"}, {"attempts", e.attempt_log}});
            out.error = e.what();
        } catch (const std::exception& e) {
            out.error = e.what();
        }
        return out;
    }

private:
    static void append(std::vector<std::string>& to, const std::vector<std::string>& from) {
        to.insert(to.end(), from.begin(), from.end());
    }

    std::string complete(const std::string& stage, Task task, const Thread& thread,
                         const PromptMessages& prompt, json& trace) const {
        if (config_.setting == Setting::Moa) {
            MoaConfig moa = *config_.moa;
            moa.task = task;
            MoaOrchestrator orchestrator(gateway_);
            const MoaTrace t = orchestrator.run_pipeline(moa, prompt, thread.id + ":" + stage);
            trace.push_back({{"stage", stage}, {"moa", t.to_json()}});
            return t.final_output;
        }
        const AgentSpec& agent = *config_.agent;
        PromptMessages p = prompt;
        if (agent.system_override) p.system = *agent.system_override;
        const ModelResponse r = gateway_.complete(agent, p);
        trace.push_back(call_json(stage, agent, p, r));
        return r.text;
    }

    const RunConfig& config_;
    ModelGateway& gateway_;
    const ExemplarPlanner& planner_;
};

std::vector<Thread> evaluation_threads(const Splits& s, const RunConfig& c) {
    const std::vector<Thread>& src = c.eval_split == "train" ? s.train : c.eval_split == "test" ? s.test : s.valid;
    return c.tail ? tail(src, *c.tail) : src;
}

void write_text(const fs::path& path, const std::string& body) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + path.string());
    out << body;
}

std::set<std::string> completed_ids(const fs::path& predictions) {
    std::set<std::string> ids;
    if (!fs::exists(predictions)) return ids;
    for (const Prediction& p : load_predictions(predictions)) ids.insert(p.thread_id);
    return ids;
}

}  // namespace

RunSummary run(const RunConfig& config, const RunOptions& options) {
    validate_run_config(config);
    RunSummary summary;
    summary.dir = config.output_dir;
    fs::create_directories(config.output_dir);

    const LoadResult loaded = load_corpus(config.corpus, config.schema);
    const Splits splits = split_corpus(loaded.threads, config.split);
    std::vector<Thread> targets = evaluation_threads(splits, config);
    if (options.limit && *options.limit < targets.size()) targets.resize(*options.limit);
    summary.total = targets.size();

    const ExemplarPlanner planner(config, splits.train);

    save_corpus(config.output_dir / "gold.jsonl", targets);
    json meta{{"config", to_json(config)},
              {"official_split", {{"train", kOfficialSplit.train_count},
                                  {"valid", kOfficialSplit.valid_count},
                                  {"test", kOfficialSplit.test_count}}},
              {"corpus_threads", loaded.threads.size()},
              {"corpus_warnings", loaded.warnings},
              {"exemplar_pool", planner.pool_size()},
              {"threads", targets.size()},
              {"limit", options.limit ? json(*options.limit) : json(nullptr)},
              {"forced_mock", options.force_mock}};
    write_text(config.output_dir / "metadata.json", meta.dump(2) + "\n");

    const fs::path pred_path = config.output_dir / "predictions.jsonl";
    const std::set<std::string> done = completed_ids(pred_path);
    std::vector<const Thread*> pending;
    for (const Thread& t : targets) {
        if (done.count(t.id)) ++summary.skipped;
        else pending.push_back(&t);
    }

    std::shared_ptr<ChatBackend> mock;
    if (config.mock_script) mock = std::make_shared<MockBackend>(MockScript::load(*config.mock_script));
    if (options.force_mock && !mock) throw ValidationError("mock mode requested without a mock script");
    GatewayOptions gopts;
    gopts.retry.max_attempts = config.max_attempts;
    gopts.jitter_seed = config.seed;
    gopts.force_mock = options.force_mock;
    gopts.trace_path = config.output_dir / "requests.jsonl";
    if (options.sleep) gopts.sleep = options.sleep;
    ModelGateway gateway(options.http ? options.http : std::make_shared<HttpChatBackend>(), mock, gopts);
    const ThreadRunner runner(config, gateway, planner);

    std::ofstream traces(config.output_dir / "traces.jsonl", std::ios::binary | std::ios::app);
    std::ofstream failures(config.output_dir / "failures.jsonl", std::ios::binary | std::ios::trunc);
    std::ofstream predictions(pred_path, std::ios::binary | std::ios::app);
    if (!traces || !failures || !predictions) throw Error("cannot open run files in " + config.output_dir.string());

    // Results are committed in input order whatever the worker count.
    std::vector<std::optional<Outcome>> slots(pending.size());
    std::size_t next_commit = 0;
    std::mutex commit_mutex;
    auto commit = [&](std::size_t i, Outcome o) {
        std::lock_guard lock(commit_mutex);
        slots[i] = std::move(o);
        while (next_commit < slots.size() && slots[next_commit]) {
            Outcome& r = *slots[next_commit];
            const std::string& id = r.prediction.thread_id;
            traces << json{{"thread_id", id}, {"calls", r.trace}}.dump() << '\n';
            if (r.error) {
                failures << json{{"thread_id", id}, {"error", *r.error}}.dump() << '\n';
                ++summary.failed;
            } else {
                predictions << to_json(r.prediction).dump() << '\n';
                ++summary.completed;
            }
            traces.flush();
            failures.flush();
            predictions.flush();
            slots[next_commit].reset();
            ++next_commit;
        }
    };

    std::atomic<std::size_t> cursor{0};
    auto worker = [&] {
        for (std::size_t i = cursor++; i < pending.size(); i = cursor++) commit(i, runner(*pending[i]));
    };
    const std::size_t n_workers = std::min(config.workers, std::max<std::size_t>(pending.size(), 1));
    std::vector<std::thread> pool;
    for (std::size_t w = 1; w < n_workers; ++w) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();
    predictions.close();

    const bool annotated = std::any_of(targets.begin(), targets.end(), [](const Thread& t) {
        return !t.gold_spans.empty() || !t.gold_summaries.empty();
    });
    if (options.evaluate && annotated) {
        EvalOptions eopts;
        eopts.scorer = config.scorer;
        MetricReport report = evaluate_predictions(load_predictions(pred_path), targets,
                                                   config.name.empty() ? std::string(to_string(config.setting)) : config.name,
                                                   eopts);
        write_report(report, config.output_dir);
        summary.report = std::move(report);
    }
    return summary;
}

namespace {

double lexical_mean(const TaskBReport& b) { return (b.rouge1 + b.rouge2 + b.rougeL + b.bleu + b.meteor) / 5.0; }

void chart_scores(std::ostream& out, const std::optional<MetricReport>& r) {
    auto cell = [&](std::optional<double> v) {
        out << ',';
        if (v) out << *v;
    };
    const bool a = r && r->task_a;
    const bool b = r && r->task_b;
    cell(a ? std::optional<double>(r->task_a->overall) : std::nullopt);
    cell(b ? r->task_b->overall : std::nullopt);
    cell(b ? std::optional<double>(lexical_mean(*r->task_b)) : std::nullopt);
}

}  // namespace

SweepResult sweep_layers(const RunConfig& base, const std::vector<std::size_t>& layer_counts,
                         const std::vector<ProposerMix>& mixes, const RunOptions& options) {
    if (!base.moa) throw ValidationError("sweep-layers needs a run config with a 'moa' config");
    if (layer_counts.empty() || mixes.empty()) throw ValidationError("sweep-layers: empty grid");
    SweepResult result;
    fs::create_directories(base.output_dir);

    RunConfig zero = base;
    zero.setting = Setting::ZeroShot;
    zero.agent = base.moa->layers.front().agents.front();
    zero.moa.reset();
    zero.name = "baseline-zero-shot";
    zero.output_dir = base.output_dir / "baseline";
    std::optional<std::string> baseline_error;
    try {
        result.baseline = run(zero, options).report;
    } catch (const std::exception& e) {
        baseline_error = e.what();
    }

    for (std::size_t layers : layer_counts) {
        for (ProposerMix mix : mixes) {
            SweepCell cell;
            cell.layers = layers;
            cell.mix = mix;
            const std::string tag = "L" + std::to_string(layers) + "-" + std::string(to_string(mix));
            cell.dir = base.output_dir / tag;
            try {
                RunConfig c = base;
                c.setting = Setting::Moa;
                c.moa = layer_variant(*base.moa, layers, mix);
                c.name = tag;
                c.output_dir = cell.dir;
                const RunSummary s = run(c, options);
                cell.report = s.report;
                if (s.failed > 0) cell.error = std::to_string(s.failed) + " thread(s) failed";
            } catch (const std::exception& e) {
                cell.error = e.what();
            }
            result.cells.push_back(std::move(cell));
        }
    }

    result.chart = base.output_dir / "chart.csv";
    std::ofstream out(result.chart, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + result.chart.string());
    out << "cell,layers,proposers,status,task_a_overall,task_b_overall,task_b_lexical,"
           "baseline_task_a_overall,baseline_task_b_overall,baseline_task_b_lexical\n";
    for (const SweepCell& c : result.cells) {
        out << "L" << c.layers << "-" << to_string(c.mix) << ',' << c.layers << ',' << to_string(c.mix) << ','
            << (c.error ? "failed" : "ok");
        chart_scores(out, c.report);
        chart_scores(out, result.baseline);
        out << '\n';
    }
    if (baseline_error) out << "# baseline failed: " << *baseline_error << '\n';
    return result;
}

AggregatorSweep sweep_aggregators(const RunConfig& base, const std::vector<AgentSpec>& aggregators,
                                  const RunOptions& options) {
    if (!base.moa) throw ValidationError("sweep-aggregators needs a run config with a 'moa' config");
    if (aggregators.empty()) throw ValidationError("sweep-aggregators: no aggregators given");
    std::set<std::string> names;
    for (const AgentSpec& a : aggregators) {
        validate_agent(a);
        if (!names.insert(a.name).second) throw ValidationError("sweep-aggregators: repeated agent '" + a.name + "'");
    }
    AggregatorSweep result;
    fs::create_directories(base.output_dir);
    for (const AgentSpec& a : aggregators) {
        AggregatorCell cell;
        cell.aggregator = a;
        cell.dir = base.output_dir / ("agg-" + a.name);
        try {
            RunConfig c = base;
            c.setting = Setting::Moa;
            c.moa->aggregator = a;
            validate_config(*c.moa);
            c.name = "agg-" + a.name;
            c.output_dir = cell.dir;
            const RunSummary s = run(c, options);
            cell.report = s.report;
            if (s.failed > 0) cell.error = std::to_string(s.failed) + " thread(s) failed";
        } catch (const std::exception& e) {
            cell.error = e.what();
        }
        result.cells.push_back(std::move(cell));
    }

    result.chart = base.output_dir / "aggregators.csv";
    std::ofstream out(result.chart, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + result.chart.string());
    out << "aggregator,model_id,status,task_a_overall,task_b_overall,task_b_lexical\n";
    for (const AggregatorCell& c : result.cells) {
        out << c.aggregator.name << ',' << c.aggregator.model_id << ',' << (c.error ? "failed" : "ok");
        chart_scores(out, c.report);
        out << '\n';
    }
    return result;
}

}  // namespace persum
