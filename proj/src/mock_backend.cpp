#include "persum/mock_backend.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "persum/utf8.hpp"

namespace persum {

using nlohmann::json;

std::string request_fingerprint(std::string_view agent_name, const PromptMessages& prompt) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    auto mix = [&](std::string_view s) {
        for (unsigned char c : s) {
            h ^= c;
            h *= 0x100000001b3ULL;
        }
        h ^= 0x1f;
        h *= 0x100000001b3ULL;
    };
    mix(agent_name);
    mix(prompt.system);
    mix(prompt.user);
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

ScriptedReply ScriptedReply::from_json(const json& j) {
    ScriptedReply r;
    if (j.is_string()) {
        r.text = j.get<std::string>();
        return r;
    }
    if (!j.is_object()) throw ValidationError("mock reply must be a string or an object");
    r.text = j.value("text", std::string());
    r.fail_times = j.value("fail_times", 0);
    r.always_fail = j.value("always_fail", false);
    r.status = j.value("status", 503);
    r.identity = j.value("identity", false);
    if (r.fail_times < 0) throw ValidationError("mock reply: fail_times must be non-negative");
    const bool pure_failure = j.contains("status") && r.status >= 400;
    if (!r.always_fail && !r.identity && r.text.empty() && !pure_failure) {
        throw ValidationError("mock reply needs 'text', 'identity', 'always_fail' or a failure 'status'");
    }
    return r;
}

MockScript MockScript::from_json(const json& j) {
    if (!j.is_object()) throw ValidationError("mock script must be a JSON object");
    MockScript s;
    if (auto it = j.find("responses"); it != j.end()) {
        if (!it->is_object()) throw ValidationError("mock script: 'responses' must be an object");
        for (const auto& [fp, reply] : it->items()) s.by_fingerprint.emplace(fp, ScriptedReply::from_json(reply));
    }
    if (auto it = j.find("rules"); it != j.end()) {
        if (!it->is_array()) throw ValidationError("mock script: 'rules' must be an array");
        for (const json& rule : *it) {
            ScriptRule r;
            if (rule.contains("agent")) r.agent = rule["agent"].get<std::string>();
            if (rule.contains("contains")) {
                const json& c = rule["contains"];
                if (c.is_string()) r.contains.push_back(c.get<std::string>());
                else r.contains = c.get<std::vector<std::string>>();
            }
            if (!rule.contains("response")) throw ValidationError("mock script: rule without 'response'");
            r.reply = ScriptedReply::from_json(rule["response"]);
            s.rules.push_back(std::move(r));
        }
    }
    s.echo_fallback = j.value("echo_fallback", false);
    if (s.empty()) throw ValidationError("mock script is empty");
    return s;
}

MockScript MockScript::load(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("cannot read mock script " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    const json j = json::parse(buf.str(), nullptr, false);
    if (j.is_discarded()) throw ValidationError("mock script " + path.string() + " is not valid JSON");
    return from_json(j);
}

std::optional<std::string> last_candidate(std::string_view user) {
    const auto pos = user.rfind(kCandidateHeading);
    if (pos == std::string_view::npos) return std::nullopt;
    const auto line_end = user.find('\n', pos);
    if (line_end == std::string_view::npos) return std::string();
    std::string_view body = user.substr(line_end + 1);
    if (auto end = body.find("\n\n### "); end != std::string_view::npos) body = body.substr(0, end);
    return utf8::trim(body);
}

MockBackend::MockBackend(MockScript script) : script_(std::move(script)) {}

int MockBackend::attempts(const std::string& fingerprint) const {
    std::lock_guard lock(mutex_);
    auto it = attempts_.find(fingerprint);
    return it == attempts_.end() ? 0 : it->second;
}

AttemptResult MockBackend::play(const ScriptedReply& reply, const std::string& key,
                                const PromptMessages& prompt) {
    int attempt = 0;
    {
        std::lock_guard lock(mutex_);
        attempt = ++attempts_[key];
    }
    if (reply.always_fail || attempt <= reply.fail_times) {
        return AttemptResult::from_status(reply.status, "mock failure " + std::to_string(reply.status) +
                                                            " on attempt " + std::to_string(attempt));
    }
    if (reply.identity) {
        if (auto c = last_candidate(prompt.user)) return AttemptResult::ok(*c);
        return AttemptResult::ok(prompt.user);
    }
    if (reply.text.empty()) return AttemptResult::from_status(reply.status, "mock status " + std::to_string(reply.status));
    return AttemptResult::ok(reply.text);
}

AttemptResult MockBackend::send(const AgentSpec& agent, const PromptMessages& prompt) {
    const std::string fp = request_fingerprint(agent.name, prompt);
    if (auto it = script_.by_fingerprint.find(fp); it != script_.by_fingerprint.end()) {
        return play(it->second, fp, prompt);
    }
    for (const ScriptRule& rule : script_.rules) {
        if (rule.agent && *rule.agent != agent.name) continue;
        bool all = true;
        for (const auto& needle : rule.contains) {
            if (prompt.user.find(needle) == std::string::npos) {
                all = false;
                break;
            }
        }
        if (all) return play(rule.reply, fp, prompt);
    }
    if (script_.echo_fallback) {
        const std::u32string user = utf8::decode(prompt.user);
        const std::size_t n = std::min<std::size_t>(40, user.size());
        {
            std::lock_guard lock(mutex_);
            ++attempts_[fp];
        }
        return AttemptResult::ok(utf8::encode(std::u32string_view(user).substr(user.size() - n)));
    }
    return {AttemptResult::Kind::Fatal, {}, 404, "no scripted response for request " + fp + " (agent '" + agent.name + "')"};
}

}  // namespace persum
