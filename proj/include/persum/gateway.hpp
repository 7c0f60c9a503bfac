#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "persum/error.hpp"
#include "persum/prompting.hpp"

namespace persum {

struct ParsedUrl {
    std::string origin;  // scheme://host[:port]
    std::string path;
};

// http(s) URLs only.
std::optional<ParsedUrl> parse_url(const std::string& url);

struct AgentSpec {
    std::string name;
    // http(s)://host[:port]/path of a chat-completions route, or mock://<anything>.
    std::string endpoint;
    std::string model_id;
    double temperature = 0.0;
    int max_tokens = 1024;
    std::optional<std::string> system_override;
    // Name of the environment variable holding the bearer token; empty for none.
    std::string auth_ref;

    bool operator==(const AgentSpec&) const = default;
};

// Throws ValidationError on an empty name, malformed endpoint, bad temperature or max_tokens.
void validate_agent(const AgentSpec& agent);
AgentSpec agent_from_json(const nlohmann::json& j);
nlohmann::json to_json(const AgentSpec& agent);

struct ModelResponse {
    std::string text;
    std::string agent;
    double latency_ms = 0.0;
    int attempt = 1;
};

// Result of a single request attempt as reported by a backend.
struct AttemptResult {
    enum class Kind { Ok, Retryable, Fatal };
    Kind kind = Kind::Ok;
    std::string text;
    int status = 0;
    std::string message;

    static AttemptResult ok(std::string text) { return {Kind::Ok, std::move(text), 200, {}}; }
    static AttemptResult from_status(int status, std::string message);
};

class ChatBackend {
public:
    virtual ~ChatBackend() = default;
    virtual AttemptResult send(const AgentSpec& agent, const PromptMessages& prompt) = 0;
};

// OpenAI-style chat-completions over HTTP(S).
class HttpChatBackend final : public ChatBackend {
public:
    explicit HttpChatBackend(std::chrono::seconds timeout = std::chrono::seconds(300));
    AttemptResult send(const AgentSpec& agent, const PromptMessages& prompt) override;

    static nlohmann::json request_body(const AgentSpec& agent, const PromptMessages& prompt);

private:
    std::chrono::seconds timeout_;
};

class TransportError : public Error {
public:
    TransportError(const std::string& what, std::vector<std::string> attempts)
        : Error(what), attempt_log(std::move(attempts)) {}
    std::vector<std::string> attempt_log;
};

struct RetryPolicy {
    int max_attempts = 5;
    std::chrono::milliseconds base_delay{1000};
    double factor = 2.0;
    bool full_jitter = true;

    // Upper bound of the wait after the given failed attempt (1-based).
    std::chrono::milliseconds ceiling(int failed_attempt) const;
};

struct GatewayOptions {
    RetryPolicy retry;
    std::size_t per_endpoint_cap = 4;
    std::uint64_t jitter_seed = 0;
    // Route every agent to the mock backend regardless of endpoint scheme.
    bool force_mock = false;
    std::optional<std::filesystem::path> trace_path;
    std::function<void(std::chrono::milliseconds)> sleep;
};

class ModelGateway {
public:
    ModelGateway(std::shared_ptr<ChatBackend> http, std::shared_ptr<ChatBackend> mock,
                 GatewayOptions options = {});
    ~ModelGateway();
    ModelGateway(const ModelGateway&) = delete;
    ModelGateway& operator=(const ModelGateway&) = delete;

    // One chat completion with retries on transient failures. Safe for concurrent calls.
    ModelResponse complete(const AgentSpec& agent, const PromptMessages& prompt);

    const GatewayOptions& options() const { return options_; }

private:
    class Limiter;
    ChatBackend& route(const AgentSpec& agent);
    Limiter& limiter_for(const std::string& endpoint);
    void log(const nlohmann::json& record);
    std::chrono::milliseconds backoff(int failed_attempt);

    std::shared_ptr<ChatBackend> http_;
    std::shared_ptr<ChatBackend> mock_;
    GatewayOptions options_;
    std::mutex limiter_mutex_;
    std::map<std::string, std::unique_ptr<Limiter>> limiters_;
    std::mutex rng_mutex_;
    std::uint64_t rng_state_;
    std::mutex log_mutex_;
    std::unique_ptr<std::ofstream> trace_;
};

}  // namespace persum
