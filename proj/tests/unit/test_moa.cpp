#include <chrono>

#include "doctest.h"
#include "persum/corpus.hpp"
#include "persum/error.hpp"
#include "persum/mock_backend.hpp"
#include "persum/moa.hpp"

using namespace persum;
using nlohmann::json;

namespace {

AgentSpec agent(const std::string& name) { return {name, "mock://local", name, 0.0, 256, {}, {}}; }

// Each agent answers with its own name; refinement agents echo the last candidate.
json script() {
    json rules = json::array();
    for (const char* n : {"p1", "p2", "p3", "p4"}) rules.push_back({{"agent", n}, {"response", std::string("out-") + n}});
    rules.push_back({{"agent", "v"}, {"response", {{"identity", true}}}});
    rules.push_back({{"agent", "h"}, {"response", {{"identity", true}}}});
    rules.push_back({{"agent", "agg"}, {"response", "final"}});
    return {{"rules", rules}};
}

struct Fixture {
    ModelGateway gateway;
    MoaOrchestrator moa;
    Fixture(const json& s = script())
        : gateway(nullptr, std::make_shared<MockBackend>(MockScript::from_json(s))), moa(gateway) {}
};

MoaConfig config(std::size_t layers) {
    MoaConfig c;
    c.layers.push_back({LayerRole::Propose, {agent("p1"), agent("p2"), agent("p3"), agent("p4")}, ""});
    if (layers > 1) c.layers.push_back({LayerRole::Verify, {agent("v")}, std::string(default_role_prompt(LayerRole::Verify))});
    if (layers > 2) {
        c.layers.push_back({LayerRole::HallucinationCheck, {agent("h")},
                            std::string(default_role_prompt(LayerRole::HallucinationCheck))});
    }
    c.aggregator = agent("agg");
    c.aggregator_prompt = std::string(default_aggregator_prompt());
    return c;
}

const PromptMessages kBase{"sys", "Question: q\n\nAnswers:\n[1] a\n\nTask."};

}  // namespace

TEST_CASE("config validation") {
    CHECK_NOTHROW(validate_config(config(3)));
    MoaConfig c = config(2);
    c.layers[1].role = LayerRole::HallucinationCheck;
    CHECK_THROWS_AS(validate_config(c), ValidationError);
    c = config(1);
    c.layers.clear();
    CHECK_THROWS_AS(validate_config(c), ValidationError);
    c = config(1);
    c.layers[0].agents[1].name = "p1";
    CHECK_THROWS_AS(validate_config(c), ValidationError);
    c = config(1);
    c.layers[0].agents.clear();
    CHECK_THROWS_AS(validate_config(c), ValidationError);
    CHECK(parse_layer_role("HALLUCINATION_CHECK") == LayerRole::HallucinationCheck);
    CHECK_THROWS_AS(parse_layer_role("JUDGE"), ValidationError);
}

TEST_CASE("config JSON with an agent registry") {
    const json j = json::parse(R"({
        "agents": {"llama": {"endpoint": "mock://x", "model_id": "m"}},
        "layers": [
            {"role": "PROPOSE", "agents": ["llama", {"name": "q", "endpoint": "mock://x", "model_id": "q"}]},
            {"role": "VERIFY", "agents": ["llama"]}
        ],
        "aggregator": "llama"
    })");
    const MoaConfig c = moa_from_json(j);
    CHECK(c.layers.size() == 2);
    CHECK(c.layers[0].agents[0].name == "llama");
    CHECK(c.layers[0].agents[1].model_id == "q");
    CHECK(c.layers[1].role_prompt == default_role_prompt(LayerRole::Verify));
    CHECK(moa_from_json(to_json(c)).layers[0].agents == c.layers[0].agents);
    CHECK_THROWS_AS(moa_from_json(json::parse(R"({"layers": [{"role": "PROPOSE", "agents": ["nobody"]}], "aggregator": "x"})")),
                    ValidationError);
}

TEST_CASE("candidate block numbering") {
    const std::vector<std::string> outs{"a", "b"};
    CHECK(candidate_block(outs) == "### Candidate response 1\na\n\n### Candidate response 2\nb\n\n");
}

TEST_CASE("two-layer pipeline wiring") {
    Fixture f;
    const MoaTrace t = f.moa.run_pipeline(config(2), kBase, "t1");
    REQUIRE(t.layers.size() == 2);
    CHECK(t.layers[0].calls.size() == 4);
    CHECK(t.layers[1].calls.size() == 1);
    for (std::size_t i = 0; i < 4; ++i) CHECK(t.layers[0].calls[i].agent == "p" + std::to_string(i + 1));
    CHECK(t.layers[0].calls[0].prompt.user.find(kBase.user) != std::string::npos);
    const std::string& verify = t.layers[1].calls[0].prompt.user;
    for (const char* o : {"out-p1", "out-p2", "out-p3", "out-p4"}) CHECK(verify.find(o) != std::string::npos);
    CHECK(verify.rfind(kBase.user, 0) == 0);
    CHECK(t.layers[1].calls[0].output == "out-p4");
    REQUIRE(t.aggregator);
    CHECK(t.aggregator->prompt.user.find("### Candidate response 1\nout-p4") != std::string::npos);
    CHECK(t.aggregator->prompt.user.find(kBase.user) != std::string::npos);
    CHECK(t.final_output == "final");
    const json j = t.to_json();
    CHECK(j["layers"].size() == 2);
}

TEST_CASE("source can be withheld from refinement layers") {
    Fixture f;
    MoaConfig c = config(2);
    c.include_source = false;
    const MoaTrace t = f.moa.run_pipeline(c, kBase, "t");
    CHECK(t.layers[1].calls[0].prompt.user.find("Question: q") == std::string::npos);
}

TEST_CASE("agent failures") {
    json s = script();
    s["rules"][1] = {{"agent", "p2"}, {"response", {{"status", 400}}}};
    SUBCASE("fail the layer by default") {
        Fixture f(s);
        try {
            f.moa.run_pipeline(config(2), kBase, "t");
            FAIL("expected PipelineError");
        } catch (const PipelineError& e) {
            REQUIRE(e.trace.layers.size() == 1);
            CHECK(e.trace.layers[0].calls[1].error.has_value());
            CHECK_FALSE(e.trace.aggregator.has_value());
        }
    }
    SUBCASE("skip failed agents when allowed") {
        Fixture f(s);
        MoaConfig c = config(2);
        c.skip_failed_agents = true;
        const MoaTrace t = f.moa.run_pipeline(c, kBase, "t");
        CHECK(t.layers[0].outputs().size() == 3);
        CHECK(t.final_output == "final");
    }
}

TEST_CASE("layer variants for the ablation grid") {
    const MoaConfig base = config(2);
    const MoaConfig single1 = layer_variant(base, 1, ProposerMix::Single);
    CHECK(single1.layers.size() == 1);
    CHECK(single1.layers[0].agents.size() == 1);
    const MoaConfig multi3 = layer_variant(base, 3, ProposerMix::Multi);
    REQUIRE(multi3.layers.size() == 3);
    CHECK(multi3.layers[0].agents.size() == 4);
    CHECK(multi3.layers[2].role == LayerRole::HallucinationCheck);
    CHECK(multi3.layers[2].agents[0] == base.aggregator);
    CHECK_THROWS_AS(layer_variant(base, 4, ProposerMix::Multi), ValidationError);
}

TEST_CASE("thread overloads check the task") {
    Fixture f;
    const auto threads = load_corpus(std::string(PERSUM_FIXTURES) + "/threads.jsonl").threads;
    MoaConfig c = config(1);
    CHECK(f.moa.run_pipeline(c, threads[0]).final_output == "final");
    std::vector<LabeledSpan> spans{to_labeled(threads[0].gold_spans[0])};
    CHECK_THROWS_AS(f.moa.run_pipeline(c, threads[0], spans), ValidationError);
    c.task = Task::B;
    CHECK(f.moa.run_pipeline(c, threads[0], spans).final_output == "final");
}
