#include "persum/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <functional>
#include <sstream>

#include "persum/error.hpp"
#include "persum/utf8.hpp"

namespace persum {

using nlohmann::json;

namespace {

[[noreturn]] void fail_record(const std::string& origin, std::size_t index, const std::string& field,
                              const std::string& what) {
    throw ValidationError(origin + ": record " + std::to_string(index) + ", field '" + field +
                          "': " + what);
}

const json& require(const json& rec, const char* field, const std::string& origin,
                    std::size_t index) {
    if (!rec.is_object()) fail_record(origin, index, "<record>", "expected a JSON object");
    auto it = rec.find(field);
    if (it == rec.end()) fail_record(origin, index, field, "missing");
    return *it;
}

std::string require_string(const json& rec, const char* field, const std::string& origin,
                           std::size_t index) {
    const json& v = require(rec, field, origin, index);
    if (!v.is_string()) fail_record(origin, index, field, "expected a string");
    return v.get<std::string>();
}

std::vector<std::string> read_answers(const json& rec, const std::string& origin,
                                      std::size_t index) {
    const json& arr = require(rec, "answers", origin, index);
    if (!arr.is_array()) fail_record(origin, index, "answers", "expected an array");
    std::vector<std::string> answers;
    for (const json& a : arr) {
        if (!a.is_string()) fail_record(origin, index, "answers", "entries must be strings");
        answers.push_back(a.get<std::string>());
    }
    return answers;
}

std::optional<std::string> read_context(const json& rec, const std::string& origin,
                                        std::size_t index) {
    auto it = rec.find("context");
    if (it == rec.end() || it->is_null()) return std::nullopt;
    if (!it->is_string()) fail_record(origin, index, "context", "expected a string or null");
    std::string ctx = it->get<std::string>();
    if (utf8::trim(ctx).empty()) return std::nullopt;
    return ctx;
}

Perspective read_label(const json& v, const std::string& origin, std::size_t index,
                       const std::string& field) {
    if (!v.is_string()) fail_record(origin, index, field, "expected a string label");
    auto p = try_parse_perspective(v.get<std::string>());
    if (!p) fail_record(origin, index, field, "unknown perspective '" + v.get<std::string>() + "'");
    return *p;
}

// Number of occurrences of needle in hay, capped at 2.
int occurrences(std::u32string_view hay, std::u32string_view needle) {
    int n = 0;
    auto pos = utf8::find(hay, needle);
    while (pos && n < 2) {
        ++n;
        pos = utf8::find(hay, needle, *pos + 1);
    }
    return n;
}

Thread parse_canonical(const json& rec, const std::string& origin, std::size_t index,
                       std::vector<std::string>& warnings) {
    Thread t;
    t.id = require_string(rec, "id", origin, index);
    t.question = require_string(rec, "question", origin, index);
    t.context = read_context(rec, origin, index);
    t.answers = read_answers(rec, origin, index);

    if (auto it = rec.find("spans"); it != rec.end()) {
        if (!it->is_array()) fail_record(origin, index, "spans", "expected an array");
        for (std::size_t k = 0; k < it->size(); ++k) {
            const json& s = (*it)[k];
            const std::string field = "spans[" + std::to_string(k) + "]";
            if (!s.is_object()) fail_record(origin, index, field, "expected an object");
            GoldSpan g;
            auto ai = s.find("answer_index");
            if (ai == s.end() || !ai->is_number_unsigned())
                fail_record(origin, index, field + ".answer_index", "missing or not a non-negative integer");
            g.answer_index = ai->get<std::size_t>();
            auto txt = s.find("text");
            if (txt == s.end() || !txt->is_string()) fail_record(origin, index, field + ".text", "missing");
            g.text = txt->get<std::string>();
            auto lab = s.find("label");
            if (lab == s.end()) fail_record(origin, index, field + ".label", "missing");
            g.label = read_label(*lab, origin, index, field + ".label");

            if (g.answer_index >= t.answers.size()) {
                throw ValidationError("thread " + t.id + ": span " + std::to_string(k) +
                                      " names answer " + std::to_string(g.answer_index) +
                                      " but the thread has " + std::to_string(t.answers.size()));
            }
            auto st = s.find("start");
            auto en = s.find("end");
            const bool has_start = st != s.end() && !st->is_null();
            const bool has_end = en != s.end() && !en->is_null();
            if (has_start != has_end)
                fail_record(origin, index, field, "start and end must be given together");
            if (has_start) {
                if (!st->is_number_unsigned() || !en->is_number_unsigned())
                    fail_record(origin, index, field, "offsets must be non-negative integers");
                g.start = st->get<std::size_t>();
                g.end = en->get<std::size_t>();
            } else {
                const std::u32string answer = utf8::decode(t.answers[g.answer_index]);
                const std::u32string needle = utf8::decode(g.text);
                auto pos = utf8::find(answer, needle);
                if (!pos) {
                    throw ValidationError("thread " + t.id + ": span text \"" + g.text +
                                          "\" not found in answer " + std::to_string(g.answer_index));
                }
                g.start = *pos;
                g.end = *pos + needle.size();
                if (occurrences(answer, needle) > 1) {
                    warnings.push_back("thread " + t.id + ": span \"" + g.text +
                                       "\" occurs more than once in answer " +
                                       std::to_string(g.answer_index) + "; using first occurrence");
                }
            }
            t.gold_spans.push_back(std::move(g));
        }
    }

    if (auto it = rec.find("summaries"); it != rec.end() && !it->is_null()) {
        if (!it->is_object()) fail_record(origin, index, "summaries", "expected an object");
        for (const auto& [key, value] : it->items()) {
            const Perspective p = read_label(json(key), origin, index, "summaries." + key);
            if (!value.is_string()) fail_record(origin, index, "summaries." + key, "expected a string");
            t.gold_summaries[p] = value.get<std::string>();
        }
    }
    validate_thread(t);
    return t;
}

// Shared-task release layout: labelled_answer_spans{LABEL:[{txt,label_spans}]},
// labelled_summaries{LABEL_SUMMARY:text}. Offsets there refer to a concatenated raw text,
// so spans are re-grounded per answer by first occurrence.
Thread parse_peranssumm(const json& rec, const std::string& origin, std::size_t index,
                        std::vector<std::string>& warnings) {
    Thread t;
    if (rec.contains("uri")) {
        const json& uri = rec["uri"];
        t.id = uri.is_string() ? uri.get<std::string>() : uri.dump();
    } else if (rec.contains("id")) {
        const json& id = rec["id"];
        t.id = id.is_string() ? id.get<std::string>() : id.dump();
    } else {
        fail_record(origin, index, "uri", "missing");
    }
    t.question = require_string(rec, "question", origin, index);
    t.context = read_context(rec, origin, index);
    t.answers = read_answers(rec, origin, index);

    std::vector<std::u32string> decoded;
    for (const auto& a : t.answers) decoded.push_back(utf8::decode(a));

    if (auto it = rec.find("labelled_answer_spans"); it != rec.end() && it->is_object()) {
        for (const auto& [key, arr] : it->items()) {
            const Perspective p = read_label(json(key), origin, index, "labelled_answer_spans." + key);
            if (!arr.is_array()) continue;
            for (const json& s : arr) {
                std::string text;
                if (s.is_object() && s.contains("txt") && s["txt"].is_string()) {
                    text = s["txt"].get<std::string>();
                } else if (s.is_string()) {
                    text = s.get<std::string>();
                } else {
                    fail_record(origin, index, "labelled_answer_spans." + key, "span without 'txt'");
                }
                const std::u32string needle = utf8::decode(text);
                bool grounded = false;
                for (std::size_t a = 0; a < decoded.size() && !grounded; ++a) {
                    if (auto pos = utf8::find(decoded[a], needle)) {
                        t.gold_spans.push_back(GoldSpan{a, *pos, *pos + needle.size(), text, p});
                        grounded = true;
                    }
                }
                if (!grounded) {
                    warnings.push_back("thread " + t.id + ": dropped " + std::string(to_string(p)) +
                                       " span not found in any answer: \"" + text + "\"");
                }
            }
        }
    }
    if (auto it = rec.find("labelled_summaries"); it != rec.end() && it->is_object()) {
        for (const auto& [key, value] : it->items()) {
            std::string label = key;
            if (auto pos = label.find("_SUMMARY"); pos != std::string::npos) label.resize(pos);
            const auto p = try_parse_perspective(label);
            if (!p) fail_record(origin, index, "labelled_summaries." + key, "unknown perspective");
            if (!value.is_string() || utf8::trim(value.get<std::string>()).empty()) continue;
            const bool has_span = std::any_of(t.gold_spans.begin(), t.gold_spans.end(),
                                              [&](const GoldSpan& g) { return g.label == *p; });
            if (!has_span) {
                warnings.push_back("thread " + t.id + ": dropped " + std::string(to_string(*p)) +
                                   " summary without a supporting span");
                continue;
            }
            t.gold_summaries[*p] = value.get<std::string>();
        }
    }
    validate_thread(t);
    return t;
}

using RecordParser =
    std::function<Thread(const json&, const std::string&, std::size_t, std::vector<std::string>&)>;

RecordParser parser_for(const std::string& schema) {
    if (schema == "canonical") return parse_canonical;
    if (schema == "adapter:peranssumm") return parse_peranssumm;
    throw ValidationError("unknown corpus schema '" + schema + "'");
}

std::vector<json> split_records(const std::string& text, const std::string& origin) {
    std::size_t first = text.find_first_not_of(" \t\r\n");
    if (first == std::string::npos) return {};
    if (text[first] == '[') {
        json doc;
        try {
            doc = json::parse(text);
        } catch (const json::parse_error& e) {
            throw ValidationError(origin + ": malformed JSON array: " + e.what());
        }
        return doc.get<std::vector<json>>();
    }
    std::vector<json> records;
    std::istringstream in(text);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (utf8::trim(line).empty()) continue;
        try {
            records.push_back(json::parse(line));
        } catch (const json::parse_error& e) {
            throw ValidationError(origin + ": record " + std::to_string(records.size()) +
                                  " (line " + std::to_string(line_no) + "): malformed JSON: " + e.what());
        }
    }
    return records;
}

}  // namespace

std::vector<std::string> available_adapters() { return {"adapter:peranssumm"}; }

void validate_thread(const Thread& t) {
    const std::string who = "thread " + (t.id.empty() ? std::string("<no id>") : t.id);
    if (t.id.empty()) throw ValidationError(who + ": empty id");
    if (t.answers.empty()) throw ValidationError(who + ": answers must be non-empty");
    for (std::size_t k = 0; k < t.gold_spans.size(); ++k) {
        const GoldSpan& g = t.gold_spans[k];
        const std::string span = who + ": span " + std::to_string(k);
        if (g.answer_index >= t.answers.size())
            throw ValidationError(span + " refers to missing answer " + std::to_string(g.answer_index));
        const std::size_t len = utf8::length(t.answers[g.answer_index]);
        if (!(g.start < g.end && g.end <= len)) {
            throw ValidationError(span + " has offsets [" + std::to_string(g.start) + ", " +
                                  std::to_string(g.end) + ") outside answer of length " +
                                  std::to_string(len));
        }
        if (utf8::substr(t.answers[g.answer_index], g.start, g.end) != g.text) {
            throw ValidationError(span + " text does not match answer substring at its offsets");
        }
    }
    for (const auto& [p, text] : t.gold_summaries) {
        const bool supported = std::any_of(t.gold_spans.begin(), t.gold_spans.end(),
                                           [&](const GoldSpan& g) { return g.label == p; });
        if (!supported) {
            throw ValidationError(who + ": summary for " + std::string(to_string(p)) +
                                  " has no gold span with that label");
        }
    }
}

LoadResult parse_corpus(const std::string& text, const std::string& schema,
                        const std::string& origin) {
    const RecordParser parse = parser_for(schema);
    LoadResult result;
    const std::vector<json> records = split_records(text, origin);
    for (std::size_t i = 0; i < records.size(); ++i) {
        result.threads.push_back(parse(records[i], origin, i, result.warnings));
    }
    return result;
}

LoadResult load_corpus(const std::filesystem::path& path, const std::string& schema) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("cannot read corpus file " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_corpus(buf.str(), schema, path.string());
}

json to_json(const GoldSpan& g) {
    return json{{"answer_index", g.answer_index},
                {"start", g.start},
                {"end", g.end},
                {"text", g.text},
                {"label", std::string(to_string(g.label))}};
}

json to_json(const Thread& t) {
    json rec;
    rec["id"] = t.id;
    rec["question"] = t.question;
    rec["context"] = t.context ? json(*t.context) : json(nullptr);
    rec["answers"] = t.answers;
    rec["spans"] = json::array();
    for (const auto& g : t.gold_spans) rec["spans"].push_back(to_json(g));
    rec["summaries"] = json::object();
    for (const auto& [p, text] : t.gold_summaries) rec["summaries"][std::string(to_string(p))] = text;
    return rec;
}

std::string serialize_corpus(const std::vector<Thread>& threads, CorpusFormat format) {
    if (format == CorpusFormat::JsonArray) {
        json arr = json::array();
        for (const auto& t : threads) arr.push_back(to_json(t));
        return arr.dump(2) + "\n";
    }
    std::string out;
    for (const auto& t : threads) out += to_json(t).dump() + "\n";
    return out;
}

void save_corpus(const std::filesystem::path& path, const std::vector<Thread>& threads,
                 CorpusFormat format) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write corpus file " + path.string());
    out << serialize_corpus(threads, format);
}

Splits split_corpus(const std::vector<Thread>& threads, const SplitSpec& spec) {
    const std::size_t total = spec.train_count + spec.valid_count + spec.test_count;
    if (total != threads.size()) {
        throw ValidationError("split counts " + std::to_string(spec.train_count) + "/" +
                              std::to_string(spec.valid_count) + "/" +
                              std::to_string(spec.test_count) + " sum to " + std::to_string(total) +
                              " but the corpus has " + std::to_string(threads.size()) + " threads");
    }
    Splits s;
    auto it = threads.begin();
    s.train.assign(it, it + static_cast<std::ptrdiff_t>(spec.train_count));
    it += static_cast<std::ptrdiff_t>(spec.train_count);
    s.valid.assign(it, it + static_cast<std::ptrdiff_t>(spec.valid_count));
    it += static_cast<std::ptrdiff_t>(spec.valid_count);
    s.test.assign(it, threads.end());
    return s;
}

std::vector<Thread> tail(const std::vector<Thread>& threads, std::size_t n) {
    if (n > threads.size()) {
        throw ValidationError("tail of " + std::to_string(n) + " requested from a split of " +
                              std::to_string(threads.size()));
    }
    return {threads.end() - static_cast<std::ptrdiff_t>(n), threads.end()};
}

}  // namespace persum
