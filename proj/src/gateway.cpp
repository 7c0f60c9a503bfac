#include "persum/gateway.hpp"

#include <cmath>
#include <condition_variable>
#include <cstdlib>
#include <thread>

#include "httplib.h"
#include "persum/utf8.hpp"

namespace persum {

using nlohmann::json;

namespace {

std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

}  // namespace

std::optional<ParsedUrl> parse_url(const std::string& url) {
    const auto scheme_end = url.find("://");
    if (scheme_end == std::string::npos || scheme_end == 0) return std::nullopt;
    const std::string scheme = url.substr(0, scheme_end);
    if (scheme != "http" && scheme != "https") return std::nullopt;
    const auto host_start = scheme_end + 3;
    const auto path_start = url.find('/', host_start);
    const std::string host = url.substr(host_start, path_start == std::string::npos
                                                        ? std::string::npos
                                                        : path_start - host_start);
    if (host.empty() || host.find(' ') != std::string::npos) return std::nullopt;
    return ParsedUrl{url.substr(0, path_start == std::string::npos ? url.size() : path_start),
                     path_start == std::string::npos ? "/" : url.substr(path_start)};
}

void validate_agent(const AgentSpec& a) {
    const std::string who = "agent '" + a.name + "'";
    if (utf8::trim(a.name).empty()) throw ValidationError("agent with empty name");
    if (a.endpoint.rfind("mock://", 0) != 0 && !parse_url(a.endpoint)) {
        throw ValidationError(who + ": malformed endpoint '" + a.endpoint + "'");
    }
    if (!std::isfinite(a.temperature) || a.temperature < 0.0 || a.temperature > 2.0) {
        throw ValidationError(who + ": temperature must be within [0, 2]");
    }
    if (a.max_tokens <= 0) throw ValidationError(who + ": max_tokens must be positive");
}

AgentSpec agent_from_json(const json& j) {
    if (!j.is_object()) throw ValidationError("agent spec must be an object");
    AgentSpec a;
    try {
        a.name = j.at("name").get<std::string>();
        a.endpoint = j.value("endpoint", std::string("mock://default"));
        a.model_id = j.value("model_id", a.name);
        a.temperature = j.value("temperature", 0.0);
        a.max_tokens = j.value("max_tokens", 1024);
        if (j.contains("system_override") && !j["system_override"].is_null())
            a.system_override = j["system_override"].get<std::string>();
        a.auth_ref = j.value("auth_ref", std::string());
    } catch (const json::exception& e) {
        throw ValidationError("agent spec: " + std::string(e.what()));
    }
    validate_agent(a);
    return a;
}

json to_json(const AgentSpec& a) {
    json j{{"name", a.name},
           {"endpoint", a.endpoint},
           {"model_id", a.model_id},
           {"temperature", a.temperature},
           {"max_tokens", a.max_tokens},
           {"auth_ref", a.auth_ref}};
    j["system_override"] = a.system_override ? json(*a.system_override) : json(nullptr);
    return j;
}

AttemptResult AttemptResult::from_status(int status, std::string message) {
    if (status >= 200 && status < 300) return {Kind::Ok, {}, status, std::move(message)};
    const bool transient = status == 0 || status == 408 || status == 429 || status >= 500;
    return {transient ? Kind::Retryable : Kind::Fatal, {}, status, std::move(message)};
}

std::chrono::milliseconds RetryPolicy::ceiling(int failed_attempt) const {
    const double ms = static_cast<double>(base_delay.count()) * std::pow(factor, failed_attempt - 1);
    return std::chrono::milliseconds(static_cast<std::int64_t>(ms));
}

HttpChatBackend::HttpChatBackend(std::chrono::seconds timeout) : timeout_(timeout) {}

json HttpChatBackend::request_body(const AgentSpec& agent, const PromptMessages& prompt) {
    return json{{"model", agent.model_id},
                {"messages",
                 json::array({json{{"role", "system"}, {"content", prompt.system}},
                              json{{"role", "user"}, {"content", prompt.user}}})},
                {"temperature", agent.temperature},
                {"max_tokens", agent.max_tokens},
                {"stream", false}};
}

AttemptResult HttpChatBackend::send(const AgentSpec& agent, const PromptMessages& prompt) {
    const auto url = parse_url(agent.endpoint);
    if (!url) return {AttemptResult::Kind::Fatal, {}, 0, "malformed endpoint " + agent.endpoint};

    httplib::Client client(url->origin);
    client.set_connection_timeout(timeout_);
    client.set_read_timeout(timeout_);
    client.set_write_timeout(timeout_);
    httplib::Headers headers;
    if (!agent.auth_ref.empty()) {
        const char* secret = std::getenv(agent.auth_ref.c_str());
        if (!secret) {
            return {AttemptResult::Kind::Fatal, {}, 0,
                    "environment variable " + agent.auth_ref + " is not set"};
        }
        headers.emplace("Authorization", std::string("Bearer ") + secret);
    }
    const auto res = client.Post(url->path, headers, request_body(agent, prompt).dump(), "application/json");
    if (!res) return {AttemptResult::Kind::Retryable, {}, 0, "transport: " + httplib::to_string(res.error())};
    if (res->status < 200 || res->status >= 300) {
        return AttemptResult::from_status(res->status, "HTTP " + std::to_string(res->status) + ": " +
                                                           res->body.substr(0, 200));
    }
    const json body = json::parse(res->body, nullptr, false);
    if (body.is_discarded()) return {AttemptResult::Kind::Fatal, {}, res->status, "response is not JSON"};
    try {
        const json& content = body.at("choices").at(0).at("message").at("content");
        if (!content.is_string()) return {AttemptResult::Kind::Fatal, {}, res->status, "content is not a string"};
        return AttemptResult::ok(content.get<std::string>());
    } catch (const json::exception&) {
        return {AttemptResult::Kind::Fatal, {}, res->status, "response lacks choices[0].message.content"};
    }
}

class ModelGateway::Limiter {
public:
    explicit Limiter(std::size_t cap) : free_(cap == 0 ? 1 : cap) {}
    void acquire() {
        std::unique_lock lock(m_);
        cv_.wait(lock, [&] { return free_ > 0; });
        --free_;
    }
    void release() {
        {
            std::lock_guard lock(m_);
            ++free_;
        }
        cv_.notify_one();
    }

private:
    std::mutex m_;
    std::condition_variable cv_;
    std::size_t free_;
};

ModelGateway::ModelGateway(std::shared_ptr<ChatBackend> http, std::shared_ptr<ChatBackend> mock,
                           GatewayOptions options)
    : http_(std::move(http)), mock_(std::move(mock)), options_(std::move(options)),
      rng_state_(options_.jitter_seed) {
    if (options_.retry.max_attempts < 1) throw ValidationError("retry policy needs at least one attempt");
    if (!options_.sleep) {
        options_.sleep = [](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); };
    }
    if (options_.trace_path) {
        trace_ = std::make_unique<std::ofstream>(*options_.trace_path, std::ios::app | std::ios::binary);
        if (!*trace_) throw Error("cannot open request trace " + options_.trace_path->string());
    }
}

ModelGateway::~ModelGateway() = default;

ChatBackend& ModelGateway::route(const AgentSpec& agent) {
    const bool mock = options_.force_mock || agent.endpoint.rfind("mock://", 0) == 0;
    if (mock) {
        if (!mock_) throw ValidationError("agent '" + agent.name + "' needs a mock script but none was given");
        return *mock_;
    }
    if (!http_) throw ValidationError("no HTTP backend configured for agent '" + agent.name + "'");
    return *http_;
}

ModelGateway::Limiter& ModelGateway::limiter_for(const std::string& endpoint) {
    std::lock_guard lock(limiter_mutex_);
    auto& slot = limiters_[endpoint];
    if (!slot) slot = std::make_unique<Limiter>(options_.per_endpoint_cap);
    return *slot;
}

void ModelGateway::log(const json& record) {
    if (!trace_) return;
    std::lock_guard lock(log_mutex_);
    *trace_ << record.dump() << "\n";
    trace_->flush();
}

std::chrono::milliseconds ModelGateway::backoff(int failed_attempt) {
    const auto cap = options_.retry.ceiling(failed_attempt);
    if (!options_.retry.full_jitter || cap.count() == 0) return cap;
    std::lock_guard lock(rng_mutex_);
    const std::uint64_t r = splitmix64(rng_state_);
    return std::chrono::milliseconds(static_cast<std::int64_t>(r % static_cast<std::uint64_t>(cap.count() + 1)));
}

ModelResponse ModelGateway::complete(const AgentSpec& agent, const PromptMessages& prompt) {
    if (prompt.user.empty()) throw ValidationError("agent '" + agent.name + "': empty prompt");
    ChatBackend& backend = route(agent);
    PromptMessages effective = prompt;
    if (agent.system_override) effective.system = *agent.system_override;

    Limiter& limiter = limiter_for(agent.endpoint);
    std::vector<std::string> attempt_log;
    for (int attempt = 1; attempt <= options_.retry.max_attempts; ++attempt) {
        const auto t0 = std::chrono::steady_clock::now();
        limiter.acquire();
        AttemptResult result;
        try {
            result = backend.send(agent, effective);
        } catch (const std::exception& e) {
            result = {AttemptResult::Kind::Fatal, {}, 0, e.what()};
        }
        limiter.release();
        const double ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();

        json record{{"agent", agent.name},       {"model_id", agent.model_id},
                    {"endpoint", agent.endpoint}, {"attempt", attempt},
                    {"status", result.status},    {"latency_ms", ms},
                    {"system", effective.system}, {"user", effective.user}};
        if (result.kind == AttemptResult::Kind::Ok && utf8::trim(result.text).empty()) {
            result = {AttemptResult::Kind::Fatal, {}, result.status, "empty completion"};
        }
        if (result.kind == AttemptResult::Kind::Ok) {
            record["response"] = result.text;
            log(record);
            return ModelResponse{std::move(result.text), agent.name, ms, attempt};
        }
        record["error"] = result.message;
        log(record);
        attempt_log.push_back("attempt " + std::to_string(attempt) + ": " + result.message);
        if (result.kind == AttemptResult::Kind::Fatal) {
            throw TransportError("agent '" + agent.name + "' failed: " + result.message, std::move(attempt_log));
        }
        if (attempt < options_.retry.max_attempts) options_.sleep(backoff(attempt));
    }
    throw TransportError("agent '" + agent.name + "' failed after " +
                             std::to_string(options_.retry.max_attempts) + " attempts",
                         std::move(attempt_log));
}

}  // namespace persum
