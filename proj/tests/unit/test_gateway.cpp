#include <atomic>
#include <filesystem>
#include <fstream>
#include <future>
#include <thread>

#include "doctest.h"
#include "persum/error.hpp"
#include "persum/gateway.hpp"
#include "persum/mock_backend.hpp"

using namespace persum;
using nlohmann::json;

namespace {

AgentSpec agent(const std::string& name) { return {name, "mock://local", "m", 0.0, 256, {}, {}}; }

struct Recorder {
    std::vector<std::chrono::milliseconds> waits;
    std::function<void(std::chrono::milliseconds)> fn() {
        return [this](std::chrono::milliseconds d) { waits.push_back(d); };
    }
};

ModelGateway make(const json& script, Recorder& rec, std::uint64_t seed = 1) {
    GatewayOptions o;
    o.sleep = rec.fn();
    o.jitter_seed = seed;
    return ModelGateway(nullptr, std::make_shared<MockBackend>(MockScript::from_json(script)), o);
}

const PromptMessages kPrompt{"sys", "hello there"};

}  // namespace

TEST_CASE("agent validation") {
    CHECK_NOTHROW(validate_agent(agent("a")));
    AgentSpec bad = agent("");
    CHECK_THROWS_AS(validate_agent(bad), ValidationError);
    bad = agent("a");
    bad.endpoint = "ftp://x";
    CHECK_THROWS_AS(validate_agent(bad), ValidationError);
    bad = agent("a");
    bad.temperature = 3.0;
    CHECK_THROWS_AS(validate_agent(bad), ValidationError);
    bad = agent("a");
    bad.max_tokens = 0;
    CHECK_THROWS_AS(validate_agent(bad), ValidationError);
    const AgentSpec a{"x", "https://api.example.com/v1/chat/completions", "m", 0.5, 64, "override", "KEY"};
    CHECK(agent_from_json(to_json(a)) == a);
}

TEST_CASE("url parsing") {
    const auto u = parse_url("http://localhost:8080/v1/chat/completions");
    REQUIRE(u);
    CHECK(u->origin == "http://localhost:8080");
    CHECK(u->path == "/v1/chat/completions");
    CHECK(parse_url("https://h")->path == "/");
    CHECK_FALSE(parse_url("mock://x"));
    CHECK_FALSE(parse_url("not a url"));
}

TEST_CASE("chat-completions request body") {
    const json body = HttpChatBackend::request_body(agent("a"), kPrompt);
    CHECK(body["model"] == "m");
    CHECK(body["messages"].size() == 2);
    CHECK(body["messages"][0]["role"] == "system");
    CHECK(body["messages"][1]["content"] == "hello there");
    CHECK(body["stream"] == false);
}

TEST_CASE("status classification") {
    CHECK(AttemptResult::from_status(503, "").kind == AttemptResult::Kind::Retryable);
    CHECK(AttemptResult::from_status(429, "").kind == AttemptResult::Kind::Retryable);
    CHECK(AttemptResult::from_status(408, "").kind == AttemptResult::Kind::Retryable);
    CHECK(AttemptResult::from_status(0, "").kind == AttemptResult::Kind::Retryable);
    CHECK(AttemptResult::from_status(400, "").kind == AttemptResult::Kind::Fatal);
    CHECK(AttemptResult::from_status(401, "").kind == AttemptResult::Kind::Fatal);
}

TEST_CASE("transient failures are retried with bounded jittered backoff") {
    Recorder rec;
    auto gw = make({{"rules", {{{"contains", "hello"}, {"response", {{"text", "ok"}, {"fail_times", 3}}}}}}}, rec);
    const ModelResponse r = gw.complete(agent("a"), kPrompt);
    CHECK(r.text == "ok");
    CHECK(r.attempt == 4);
    REQUIRE(rec.waits.size() == 3);
    const RetryPolicy p;
    for (std::size_t i = 0; i < rec.waits.size(); ++i) {
        CHECK(rec.waits[i] <= p.ceiling(static_cast<int>(i) + 1));
        CHECK(rec.waits[i].count() >= 0);
    }
    CHECK(p.ceiling(1).count() == 1000);
    CHECK(p.ceiling(3).count() == 4000);
}

TEST_CASE("jitter is reproducible for a seed") {
    const json script = {{"rules", {{{"contains", "hello"}, {"response", {{"text", "ok"}, {"fail_times", 4}}}}}}};
    Recorder a, b;
    auto g1 = make(script, a, 42);
    auto g2 = make(script, b, 42);
    g1.complete(agent("a"), kPrompt);
    g2.complete(agent("a"), kPrompt);
    CHECK(a.waits == b.waits);
}

TEST_CASE("exhausted retries and fatal statuses raise TransportError") {
    Recorder rec;
    auto gw = make({{"rules", {{{"contains", "hello"}, {"response", {{"always_fail", true}}}},
                               {{"contains", "auth"}, {"response", {{"status", 401}}}}}}},
                   rec);
    try {
        gw.complete(agent("a"), kPrompt);
        FAIL("expected TransportError");
    } catch (const TransportError& e) {
        CHECK(e.attempt_log.size() == 5);
    }
    CHECK(rec.waits.size() == 4);
    rec.waits.clear();
    try {
        gw.complete(agent("a"), {"s", "auth please"});
        FAIL("expected TransportError");
    } catch (const TransportError& e) {
        CHECK(e.attempt_log.size() == 1);
    }
    CHECK(rec.waits.empty());
}

TEST_CASE("empty completions are fatal") {
    Recorder rec;
    auto gw = make({{"rules", {{{"contains", "hello"}, {"response", "   "}}}}}, rec);
    CHECK_THROWS_AS(gw.complete(agent("a"), kPrompt), TransportError);
}

TEST_CASE("mock lookup order: fingerprint, rule, echo") {
    const std::string fp = request_fingerprint("a", kPrompt);
    CHECK(fp.size() == 16);
    CHECK(fp != request_fingerprint("b", kPrompt));
    MockBackend m(MockScript::from_json({{"responses", {{fp, "by fingerprint"}}},
                                         {"rules", {{{"agent", "b"}, {"contains", {"hello", "there"}}, {"response", "by rule"}}}},
                                         {"echo_fallback", true}}));
    CHECK(m.send(agent("a"), kPrompt).text == "by fingerprint");
    CHECK(m.send(agent("b"), kPrompt).text == "by rule");
    const std::string long_user(100, 'x');
    CHECK(m.send(agent("c"), {"s", long_user + "tail"}).text == std::string(36, 'x') + "tail");
    CHECK(m.attempts(fp) == 1);
    MockBackend strict(MockScript::from_json({{"rules", {{{"contains", "zzz"}, {"response", "x"}}}}}));
    CHECK(strict.send(agent("a"), kPrompt).kind == AttemptResult::Kind::Fatal);
    CHECK_THROWS_AS(MockScript::from_json(json::object()), ValidationError);
}

TEST_CASE("identity replies return the last candidate") {
    CHECK(last_candidate("x\n### Candidate response 1\nfirst\n\n### Candidate response 2\nsecond\nline\n\n") ==
          std::optional<std::string>("second\nline"));
    CHECK_FALSE(last_candidate("no candidates").has_value());
}

TEST_CASE("per-endpoint concurrency cap") {
    class Slow : public ChatBackend {
    public:
        std::atomic<int> active{0};
        std::atomic<int> peak{0};
        AttemptResult send(const AgentSpec&, const PromptMessages&) override {
            const int now = ++active;
            int p = peak.load();
            while (now > p && !peak.compare_exchange_weak(p, now)) {
            }
            std::this_thread::sleep_for(std::chrono::milliseconds(20));
            --active;
            return AttemptResult::ok("x");
        }
    };
    auto slow = std::make_shared<Slow>();
    GatewayOptions o;
    o.per_endpoint_cap = 2;
    ModelGateway gw(nullptr, slow, o);
    std::vector<std::future<ModelResponse>> fs;
    for (int i = 0; i < 8; ++i) fs.push_back(std::async(std::launch::async, [&] { return gw.complete(agent("a"), kPrompt); }));
    for (auto& f : fs) f.get();
    CHECK(slow->peak.load() <= 2);
}

TEST_CASE("request trace is JSON-Lines") {
    const auto path = std::filesystem::temp_directory_path() / "persum_gateway_trace.jsonl";
    std::filesystem::remove(path);
    {
        GatewayOptions o;
        o.trace_path = path;
        o.sleep = [](std::chrono::milliseconds) {};
        ModelGateway gw(nullptr, std::make_shared<MockBackend>(MockScript::from_json(
                                     {{"rules", {{{"contains", "hello"}, {"response", {{"text", "ok"}, {"fail_times", 1}}}}}}})),
                        o);
        gw.complete(agent("a"), kPrompt);
    }
    std::ifstream in(path);
    std::string line;
    std::vector<json> lines;
    while (std::getline(in, line)) lines.push_back(json::parse(line));
    REQUIRE(lines.size() == 2);
    CHECK(lines[0].contains("error"));
    CHECK(lines[1]["response"] == "ok");
    std::filesystem::remove(path);
}

TEST_CASE("routing without a backend is a validation error") {
    ModelGateway gw(nullptr, nullptr);
    CHECK_THROWS_AS(gw.complete(agent("a"), kPrompt), ValidationError);
    AgentSpec http = agent("h");
    http.endpoint = "http://127.0.0.1:9/x";
    CHECK_THROWS_AS(gw.complete(http, kPrompt), ValidationError);
}
