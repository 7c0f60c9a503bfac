#include "persum/report.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>

#include "persum/error.hpp"
#include "persum/lexical.hpp"
#include "persum/utf8.hpp"

namespace persum {

using nlohmann::json;

json to_json(const LabeledSpan& s) {
    json j{{"text", s.text}, {"label", std::string(to_string(s.label))}};
    if (s.answer_index) j["answer_index"] = *s.answer_index;
    if (s.start) j["start"] = *s.start;
    if (s.end) j["end"] = *s.end;
    return j;
}

LabeledSpan labeled_span_from_json(const json& j) {
    if (!j.is_object()) throw ValidationError("span is not an object");
    if (!j.contains("text") || !j["text"].is_string()) throw ValidationError("span lacks string \"text\"");
    if (!j.contains("label") || !j["label"].is_string()) throw ValidationError("span lacks string \"label\"");
    LabeledSpan s;
    s.text = j["text"].get<std::string>();
    s.label = parse_perspective(j["label"].get<std::string>());
    auto offset = [&](const char* key) -> std::optional<std::size_t> {
        if (!j.contains(key) || j[key].is_null()) return std::nullopt;
        if (!j[key].is_number_unsigned()) throw ValidationError(std::string("span \"") + key + "\" is not a non-negative integer");
        return j[key].get<std::size_t>();
    };
    s.answer_index = offset("answer_index");
    s.start = offset("start");
    s.end = offset("end");
    if (s.start && s.end && *s.end < *s.start) throw ValidationError("span end precedes start");
    return s;
}

json to_json(const Prediction& p) {
    json j{{"thread_id", p.thread_id}, {"task", p.task}};
    if (p.spans) {
        j["spans"] = json::array();
        for (const auto& s : *p.spans) j["spans"].push_back(to_json(s));
    }
    if (p.summaries) {
        j["summaries"] = json::object();
        for (Perspective q : kOutputOrder) {
            auto it = p.summaries->find(q);
            if (it != p.summaries->end()) j["summaries"][std::string(to_string(q))] = it->second;
        }
    }
    j["warnings"] = p.warnings;
    return j;
}

Prediction prediction_from_json(const json& j) {
    if (!j.is_object()) throw ValidationError("prediction is not an object");
    if (!j.contains("thread_id") || !j["thread_id"].is_string()) {
        throw ValidationError("prediction lacks string \"thread_id\"");
    }
    Prediction p;
    p.thread_id = j["thread_id"].get<std::string>();
    p.task = j.value("task", std::string());
    if (j.contains("spans") && !j["spans"].is_null()) {
        if (!j["spans"].is_array()) throw ValidationError("\"spans\" is not an array");
        p.spans.emplace();
        for (const auto& s : j["spans"]) p.spans->push_back(labeled_span_from_json(s));
    }
    if (j.contains("summaries") && !j["summaries"].is_null()) {
        if (!j["summaries"].is_object()) throw ValidationError("\"summaries\" is not an object");
        p.summaries.emplace();
        for (const auto& [k, v] : j["summaries"].items()) {
            if (!v.is_string()) throw ValidationError("summary for " + k + " is not a string");
            (*p.summaries)[parse_perspective(k)] = v.get<std::string>();
        }
    }
    if (j.contains("warnings") && j["warnings"].is_array()) {
        for (const auto& w : j["warnings"]) {
            if (w.is_string()) p.warnings.push_back(w.get<std::string>());
        }
    }
    return p;
}

std::vector<Prediction> load_predictions(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot read predictions " + path.string());
    std::vector<Prediction> out;
    std::set<std::string> seen;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (utf8::trim(line).empty()) continue;
        const std::string where = path.string() + ":" + std::to_string(lineno);
        const json j = json::parse(line, nullptr, false);
        if (j.is_discarded()) throw ValidationError(where + ": invalid JSON");
        try {
            out.push_back(prediction_from_json(j));
        } catch (const ValidationError& e) {
            throw ValidationError(where + ": " + e.what());
        }
        if (!seen.insert(out.back().thread_id).second) {
            throw ValidationError(where + ": repeated thread_id " + out.back().thread_id);
        }
    }
    return out;
}

void append_prediction(const std::filesystem::path& path, const Prediction& p) {
    std::ofstream out(path, std::ios::binary | std::ios::app);
    if (!out) throw Error("cannot write " + path.string());
    out << to_json(p).dump() << '\n';
}

std::array<double, 8> TaskAReport::columns() const {
    return {macro_f1, weighted_f1, strict.precision, strict.recall, strict.f1,
            proportional.precision, proportional.recall, proportional.f1};
}

std::array<std::optional<double>, 8> TaskBReport::columns() const {
    return {rouge1, rouge2, rougeL, bleu, meteor, bertscore, alignscore, summac};
}

std::size_t TaskBReport::present() const {
    std::size_t n = 0;
    for (const auto& c : columns()) n += c.has_value();
    return n;
}

namespace {

// Offsets that do not fit the thread are dropped so the span is grounded afresh.
void sanitize(std::vector<LabeledSpan>& spans, const Thread& thread) {
    for (auto& s : spans) {
        if (!s.grounded()) continue;
        const bool fits = *s.answer_index < thread.answers.size() && *s.start < *s.end &&
                          *s.end <= utf8::length(thread.answers[*s.answer_index]);
        if (!fits) s.answer_index = s.start = s.end = std::nullopt;
    }
}

std::string source_text(const Thread& t) {
    std::string s = t.question;
    if (t.context) s += "\n" + *t.context;
    for (const auto& a : t.answers) s += "\n" + a;
    return s;
}

}  // namespace

TaskAReport evaluate_task_a(const std::vector<Thread>& gold,
                            const std::map<std::string, std::vector<LabeledSpan>>& predictions,
                            const EvalOptions& options) {
    TaskAReport r;
    r.averaging = options.averaging;
    r.threads = gold.size();
    std::vector<AnswerPresence> gold_presence;
    std::vector<AnswerPresence> pred_presence;
    SpanTally tally;
    for (const Thread& t : gold) {
        std::vector<LabeledSpan> pred;
        if (auto it = predictions.find(t.id); it != predictions.end()) pred = it->second;
        sanitize(pred, t);
        ground_spans(pred, t, true);
        for (auto& p : presence_from_gold(t)) gold_presence.push_back(std::move(p));
        for (auto& p : presence_from_predictions(t, pred)) pred_presence.push_back(std::move(p));
        tally += span_tally(t.gold_spans, pred, UngroundedPolicy::ZeroCredit);
        r.confusion += confusion_matrix(t.gold_spans, pred);
    }
    const ClassificationScores cls = classification_scores(gold_presence, pred_presence);
    r.macro_f1 = cls.macro_f1;
    r.weighted_f1 = cls.weighted_f1;
    r.strict = span_prf(tally, SpanMode::Strict, options.averaging);
    r.proportional = span_prf(tally, SpanMode::Proportional, options.averaging);
    const auto cols = r.columns();
    r.overall = task_a_overall(std::span<const double>(cols));
    return r;
}

std::vector<ScorerRequest> scorer_requests(const std::vector<Thread>& gold,
                                           const std::map<std::string, PerspectiveSummaries>& predictions) {
    std::vector<ScorerRequest> out;
    for (const Thread& t : gold) {
        const PerspectiveSummaries* pred = nullptr;
        if (auto it = predictions.find(t.id); it != predictions.end()) pred = &it->second;
        for (Perspective q : kOutputOrder) {
            auto g = t.gold_summaries.find(q);
            const bool has_gold = g != t.gold_summaries.end();
            const bool has_pred = pred && pred->count(q);
            if (!has_gold && !has_pred) continue;
            out.push_back({t.id + ":" + std::string(to_string(q)), source_text(t),
                           has_gold ? g->second : std::string(),
                           has_pred ? pred->at(q) : std::string()});
        }
    }
    return out;
}

TaskBReport evaluate_task_b(const std::vector<Thread>& gold,
                            const std::map<std::string, PerspectiveSummaries>& predictions,
                            const EvalOptions& options) {
    TaskBReport r;
    std::array<double, 5> sums{};
    for (const Thread& t : gold) {
        const PerspectiveSummaries* pred = nullptr;
        if (auto it = predictions.find(t.id); it != predictions.end()) pred = &it->second;
        std::array<double, 5> local{};
        std::size_t n = 0;
        for (Perspective q : kOutputOrder) {
            auto g = t.gold_summaries.find(q);
            const bool has_gold = g != t.gold_summaries.end();
            const bool has_pred = pred && pred->count(q);
            if (!has_gold && !has_pred) continue;
            const std::string ref = has_gold ? g->second : std::string();
            const std::string hyp = has_pred ? pred->at(q) : std::string();
            local[0] += rouge(ref, hyp, RougeVariant::One);
            local[1] += rouge(ref, hyp, RougeVariant::Two);
            local[2] += rouge(ref, hyp, RougeVariant::L);
            local[3] += bleu(ref, hyp);
            local[4] += meteor(ref, hyp);
            ++n;
        }
        if (n == 0) continue;
        for (std::size_t i = 0; i < 5; ++i) sums[i] += local[i] / static_cast<double>(n);
        ++r.threads;
        r.instances += n;
    }
    if (r.threads > 0) {
        const double d = static_cast<double>(r.threads);
        r.rouge1 = sums[0] / d;
        r.rouge2 = sums[1] / d;
        r.rougeL = sums[2] / d;
        r.bleu = sums[3] / d;
        r.meteor = sums[4] / d;
    }
    if (options.scorer) {
        const auto requests = scorer_requests(gold, predictions);
        const auto scores = external_scores(requests, *options.scorer);
        if (auto m = mean_scores(scores)) {
            r.bertscore = m->bertscore;
            r.alignscore = m->alignscore;
            r.summac = m->summac;
        }
    }
    if (r.present() == 8) {
        const auto cols = r.columns();
        r.overall = task_b_overall(std::span<const std::optional<double>>(cols));
    }
    return r;
}

namespace {

std::string fixed4(double v) {
    std::ostringstream o;
    o << std::fixed << std::setprecision(4) << v;
    return o.str();
}

json prf_json(const PRF& p) {
    return {{"precision", p.precision}, {"recall", p.recall}, {"f1", p.f1}};
}

json opt_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

}  // namespace

json MetricReport::to_json() const {
    json j{{"run", run}, {"warnings", warnings}};
    if (task_a) {
        const TaskAReport& a = *task_a;
        json cm = json::object();
        for (Perspective g : kOutputOrder) {
            json row = json::object();
            for (Perspective p : kOutputOrder) {
                row[std::string(to_string(p))] = a.confusion.cells[index_of(g)][index_of(p)];
            }
            cm[std::string(to_string(g))] = row;
        }
        j["task_a"] = {{"macro_f1", a.macro_f1},
                       {"weighted_f1", a.weighted_f1},
                       {"strict", prf_json(a.strict)},
                       {"proportional", prf_json(a.proportional)},
                       {"overall", a.overall},
                       {"averaging", a.averaging == SpanAveraging::Micro ? "micro" : "macro"},
                       {"threads", a.threads},
                       {"confusion", cm},
                       {"confusion_misses", a.confusion.misses}};
    }
    if (task_b) {
        const TaskBReport& b = *task_b;
        j["task_b"] = {{"rouge1", b.rouge1},
                       {"rouge2", b.rouge2},
                       {"rougeL", b.rougeL},
                       {"bleu", b.bleu},
                       {"meteor", b.meteor},
                       {"bertscore", opt_json(b.bertscore)},
                       {"alignscore", opt_json(b.alignscore)},
                       {"summac", opt_json(b.summac)},
                       {"overall", opt_json(b.overall)},
                       {"overall_status", b.overall ? std::string("complete")
                                                    : "partial (" + std::to_string(b.present()) + "/8)"},
                       {"threads", b.threads},
                       {"instances", b.instances}};
    }
    return j;
}

std::string MetricReport::render_table() const {
    std::ostringstream out;
    if (task_a) {
        out << "Task A\n" << kTaskATableHeader << "\n|---|";
        for (int i = 0; i < 9; ++i) out << "---|";
        out << "\n| " << run << " |";
        for (double v : task_a->columns()) out << ' ' << fixed4(v) << " |";
        out << ' ' << fixed4(task_a->overall) << " |\n";
    }
    if (task_b) {
        if (task_a) out << '\n';
        out << "Task B\n" << kTaskBTableHeader << "\n|---|";
        for (int i = 0; i < 9; ++i) out << "---|";
        out << "\n| " << run << " |";
        for (const auto& v : task_b->columns()) out << ' ' << (v ? fixed4(*v) : "n/a") << " |";
        out << ' '
            << (task_b->overall ? fixed4(*task_b->overall)
                                : "partial (" + std::to_string(task_b->present()) + "/8)")
            << " |\n";
    }
    return out.str();
}

std::string confusion_csv(const ConfusionMatrix& m) {
    std::ostringstream out;
    out << "gold";
    for (Perspective p : kOutputOrder) out << ',' << to_string(p);
    out << '\n';
    for (Perspective g : kOutputOrder) {
        out << to_string(g);
        for (Perspective p : kOutputOrder) out << ',' << m.cells[index_of(g)][index_of(p)];
        out << '\n';
    }
    out << "misses," << m.misses << '\n';
    return out.str();
}

MetricReport evaluate_predictions(const std::vector<Prediction>& predictions,
                                  const std::vector<Thread>& gold, const std::string& run,
                                  const EvalOptions& options) {
    MetricReport report;
    report.run = run;
    std::set<std::string> gold_ids;
    for (const auto& t : gold) gold_ids.insert(t.id);
    std::vector<std::string> orphans;
    std::map<std::string, std::vector<LabeledSpan>> spans;
    std::map<std::string, PerspectiveSummaries> summaries;
    bool any_spans = false;
    bool any_summaries = false;
    for (const auto& p : predictions) {
        if (!gold_ids.count(p.thread_id)) {
            orphans.push_back(p.thread_id);
            continue;
        }
        if (p.spans) {
            spans[p.thread_id] = *p.spans;
            any_spans = true;
        }
        if (p.summaries) {
            summaries[p.thread_id] = *p.summaries;
            any_summaries = true;
        }
    }
    if (!orphans.empty()) {
        std::string list;
        for (const auto& o : orphans) list += (list.empty() ? "" : ", ") + o;
        throw ValidationError("predictions for threads missing from gold: " + list);
    }
    std::set<std::string> predicted;
    for (const auto& p : predictions) predicted.insert(p.thread_id);
    for (const auto& t : gold) {
        if (!predicted.count(t.id)) report.warnings.push_back("no prediction for thread " + t.id + "; scored as empty");
    }
    if (any_spans || !any_summaries) report.task_a = evaluate_task_a(gold, spans, options);
    if (any_summaries) report.task_b = evaluate_task_b(gold, summaries, options);
    return report;
}

void write_report(const MetricReport& report, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    auto write = [&](const char* name, const std::string& body) {
        std::ofstream out(dir / name, std::ios::binary | std::ios::trunc);
        if (!out) throw Error("cannot write " + (dir / name).string());
        out << body;
    };
    write("report.json", report.to_json().dump(2) + "\n");
    write("report.txt", report.render_table());
    if (report.task_a) write("confusion.csv", confusion_csv(report.task_a->confusion));
}

}  // namespace persum
