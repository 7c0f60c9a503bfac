#include "persum/external_scorer.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "httplib.h"
#include "json.hpp"
#include "persum/error.hpp"
#include "persum/gateway.hpp"
#include "persum/utf8.hpp"

namespace persum {

using nlohmann::json;

std::string scorer_request_jsonl(std::span<const ScorerRequest> requests) {
    std::string out;
    for (const auto& r : requests) {
        out += json{{"id", r.id}, {"source", r.source}, {"reference", r.reference},
                    {"hypothesis", r.hypothesis}}
                   .dump() +
               "\n";
    }
    return out;
}

std::vector<NeuralScores> parse_scorer_response(const std::string& text, std::size_t expected,
                                                const std::string& origin) {
    std::vector<NeuralScores> out;
    std::istringstream in(text);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (utf8::trim(line).empty()) continue;
        const std::string where = origin + ":" + std::to_string(lineno);
        const json j = json::parse(line, nullptr, false);
        if (j.is_discarded() || !j.is_object()) throw ValidationError(where + ": not a JSON object");
        auto field = [&](const char* key) {
            if (!j.contains(key)) throw ValidationError(where + ": missing \"" + key + "\"");
            const json& v = j.at(key);
            if (!v.is_number() || !std::isfinite(v.get<double>())) {
                throw ValidationError(where + ": \"" + key + "\" is not a finite number");
            }
            return v.get<double>();
        };
        out.push_back({field("bertscore"), field("alignscore"), field("summac")});
    }
    if (out.size() != expected) {
        throw ValidationError(origin + ": " + std::to_string(out.size()) + " score lines for " +
                              std::to_string(expected) + " requests");
    }
    return out;
}

std::vector<NeuralScores> external_scores(std::span<const ScorerRequest> requests,
                                          const std::string& scorer) {
    if (auto url = parse_url(scorer)) {
        httplib::Client client(url->origin);
        client.set_read_timeout(std::chrono::seconds(600));
        const auto res = client.Post(url->path, scorer_request_jsonl(requests), "application/x-ndjson");
        if (!res) throw Error("scorer " + scorer + ": " + httplib::to_string(res.error()));
        if (res->status != 200) {
            throw Error("scorer " + scorer + ": HTTP " + std::to_string(res->status));
        }
        return parse_scorer_response(res->body, requests.size(), scorer);
    }
    std::ifstream in(scorer, std::ios::binary);
    if (!in) throw Error("cannot read scorer file " + scorer);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_scorer_response(buf.str(), requests.size(), scorer);
}

std::optional<NeuralScores> mean_scores(std::span<const NeuralScores> scores) {
    if (scores.empty()) return std::nullopt;
    NeuralScores m;
    for (const auto& s : scores) {
        m.bertscore += s.bertscore;
        m.alignscore += s.alignscore;
        m.summac += s.summac;
    }
    const double n = static_cast<double>(scores.size());
    m.bertscore /= n;
    m.alignscore /= n;
    m.summac /= n;
    return m;
}

}  // namespace persum
