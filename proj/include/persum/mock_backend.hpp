#pragma once

#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "persum/gateway.hpp"

namespace persum {

// Heading under which upstream outputs are embedded in refinement and aggregation prompts.
inline constexpr std::string_view kCandidateHeading = "### Candidate response ";

// Hex FNV-1a hash over agent name, system and user text.
std::string request_fingerprint(std::string_view agent_name, const PromptMessages& prompt);

// What a scripted request answers.
struct ScriptedReply {
    std::string text;
    // Number of leading attempts that fail with `status` before `text` is returned.
    int fail_times = 0;
    bool always_fail = false;
    int status = 503;
    // Reply with the last embedded candidate response (or the whole user text when none).
    bool identity = false;

    static ScriptedReply from_json(const nlohmann::json& j);
};

struct ScriptRule {
    std::optional<std::string> agent;
    std::vector<std::string> contains;
    ScriptedReply reply;
};

struct MockScript {
    std::map<std::string, ScriptedReply> by_fingerprint;
    std::vector<ScriptRule> rules;
    bool echo_fallback = false;

    bool empty() const { return by_fingerprint.empty() && rules.empty() && !echo_fallback; }

    // {"responses": {fp: reply}, "rules": [{agent?, contains, response}], "echo_fallback": bool}
    static MockScript from_json(const nlohmann::json& j);
    static MockScript load(const std::filesystem::path& path);
};

// Deterministic backend: fingerprint match, then the first matching rule, then the echo
// fallback (last 40 characters of the user prompt).
class MockBackend final : public ChatBackend {
public:
    explicit MockBackend(MockScript script);
    AttemptResult send(const AgentSpec& agent, const PromptMessages& prompt) override;

    // Attempts served so far for a request fingerprint.
    int attempts(const std::string& fingerprint) const;

private:
    AttemptResult play(const ScriptedReply& reply, const std::string& key, const PromptMessages& prompt);

    MockScript script_;
    mutable std::mutex mutex_;
    std::map<std::string, int> attempts_;
};

// Text of the last candidate block in a prompt, if any.
std::optional<std::string> last_candidate(std::string_view user);

}  // namespace persum
