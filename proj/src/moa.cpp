#include "persum/moa.hpp"

#include <fstream>
#include <future>
#include <set>
#include <sstream>

#include "persum/assets.hpp"
#include "persum/mock_backend.hpp"
#include "persum/utf8.hpp"

namespace persum {

using nlohmann::json;

namespace {

constexpr LayerRole kRoleOrder[] = {LayerRole::Propose, LayerRole::Verify, LayerRole::HallucinationCheck};

json call_json(const AgentCall& c) {
    json j{{"agent", c.agent}, {"system", c.prompt.system}, {"user", c.prompt.user}, {"output", c.output}};
    if (c.error) j["error"] = *c.error;
    return j;
}

AgentSpec resolve_agent(const json& ref, const json& registry) {
    if (ref.is_string()) {
        const std::string name = ref.get<std::string>();
        if (!registry.is_object() || !registry.contains(name)) {
            throw ValidationError("MoA config refers to undefined agent '" + name + "'");
        }
        json spec = registry[name];
        if (!spec.contains("name")) spec["name"] = name;
        return agent_from_json(spec);
    }
    return agent_from_json(ref);
}

}  // namespace

std::string_view to_string(LayerRole role) {
    switch (role) {
        case LayerRole::Propose: return "PROPOSE";
        case LayerRole::Verify: return "VERIFY";
        case LayerRole::HallucinationCheck: return "HALLUCINATION_CHECK";
    }
    return "UNKNOWN";
}

LayerRole parse_layer_role(std::string_view s) {
    for (LayerRole r : kRoleOrder) {
        if (to_string(r) == s) return r;
    }
    throw ValidationError("unknown layer role '" + std::string(s) + "'");
}

std::string_view default_role_prompt(LayerRole role) {
    switch (role) {
        case LayerRole::Propose: return {};
        case LayerRole::Verify: return assets::k_verify;
        case LayerRole::HallucinationCheck: return assets::k_hallucination_check;
    }
    return {};
}

std::string_view default_aggregator_prompt() { return assets::k_aggregate; }

void validate_config(const MoaConfig& c) {
    if (c.layers.empty() || c.layers.size() > 3) {
        throw ValidationError("MoA config needs 1 to 3 layers, got " + std::to_string(c.layers.size()));
    }
    for (std::size_t i = 0; i < c.layers.size(); ++i) {
        const LayerSpec& layer = c.layers[i];
        if (layer.role != kRoleOrder[i]) {
            throw ValidationError("MoA layer " + std::to_string(i + 1) + " has role " +
                                  std::string(to_string(layer.role)) + "; expected " +
                                  std::string(to_string(kRoleOrder[i])));
        }
        if (layer.agents.empty()) throw ValidationError("MoA layer " + std::to_string(i + 1) + " has no agents");
        std::set<std::string> names;
        for (const AgentSpec& a : layer.agents) {
            validate_agent(a);
            if (!names.insert(a.name).second) {
                throw ValidationError("MoA layer " + std::to_string(i + 1) + " repeats agent '" + a.name + "'");
            }
        }
    }
    validate_agent(c.aggregator);
}

MoaConfig moa_from_json(const json& j) {
    if (!j.is_object()) throw ValidationError("MoA config must be a JSON object");
    MoaConfig c;
    const json registry = j.value("agents", json::object());
    const std::string task = j.value("task", std::string("A"));
    if (task == "A") c.task = Task::A;
    else if (task == "B") c.task = Task::B;
    else throw ValidationError("MoA config: task must be \"A\" or \"B\"");
    if (!j.contains("layers") || !j["layers"].is_array()) throw ValidationError("MoA config: 'layers' array required");
    for (const json& l : j["layers"]) {
        LayerSpec layer;
        layer.role = parse_layer_role(l.value("role", std::string()));
        if (!l.contains("agents") || !l["agents"].is_array()) throw ValidationError("MoA layer without 'agents' array");
        for (const json& a : l["agents"]) layer.agents.push_back(resolve_agent(a, registry));
        layer.role_prompt = l.contains("role_prompt") ? l["role_prompt"].get<std::string>()
                                                      : std::string(default_role_prompt(layer.role));
        c.layers.push_back(std::move(layer));
    }
    if (!j.contains("aggregator")) throw ValidationError("MoA config: 'aggregator' required");
    c.aggregator = resolve_agent(j["aggregator"], registry);
    c.aggregator_prompt = j.value("aggregator_prompt", std::string(default_aggregator_prompt()));
    c.include_source = j.value("include_source", true);
    c.skip_failed_agents = j.value("skip_failed_agents", false);
    validate_config(c);
    return c;
}

MoaConfig load_moa_config(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("cannot read MoA config " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    const json j = json::parse(buf.str(), nullptr, false);
    if (j.is_discarded()) throw ValidationError("MoA config " + path.string() + " is not valid JSON");
    return moa_from_json(j);
}

json to_json(const MoaConfig& c) {
    json layers = json::array();
    for (const LayerSpec& l : c.layers) {
        json agents = json::array();
        for (const AgentSpec& a : l.agents) agents.push_back(to_json(a));
        layers.push_back({{"role", std::string(to_string(l.role))}, {"role_prompt", l.role_prompt}, {"agents", agents}});
    }
    return json{{"task", std::string(to_string(c.task))},
                {"layers", layers},
                {"aggregator", to_json(c.aggregator)},
                {"aggregator_prompt", c.aggregator_prompt},
                {"include_source", c.include_source},
                {"skip_failed_agents", c.skip_failed_agents}};
}

std::vector<std::string> LayerTrace::outputs() const {
    std::vector<std::string> out;
    for (const AgentCall& c : calls) {
        if (!c.error) out.push_back(c.output);
    }
    return out;
}

json MoaTrace::to_json() const {
    json j;
    j["trace_id"] = trace_id;
    j["task"] = std::string(persum::to_string(task));
    j["layers"] = json::array();
    for (const LayerTrace& l : layers) {
        json calls = json::array();
        for (const AgentCall& c : l.calls) calls.push_back(call_json(c));
        j["layers"].push_back({{"role", std::string(persum::to_string(l.role))}, {"calls", calls}});
    }
    j["aggregator"] = aggregator ? call_json(*aggregator) : json(nullptr);
    j["final"] = final_output;
    return j;
}

std::string candidate_block(std::span<const std::string> outputs) {
    std::string out;
    for (std::size_t i = 0; i < outputs.size(); ++i) {
        out += std::string(kCandidateHeading) + std::to_string(i + 1) + "\n" + outputs[i] + "\n\n";
    }
    return out;
}

LayerTrace MoaOrchestrator::run_layer(const LayerSpec& layer, const PromptMessages& base,
                                      std::span<const std::string> upstream, bool include_source,
                                      bool skip_failed) {
    const bool propose = layer.role == LayerRole::Propose;
    if (propose && !upstream.empty()) throw ValidationError("PROPOSE layer must not receive upstream outputs");
    if (!propose && upstream.empty()) {
        throw ValidationError(std::string(to_string(layer.role)) + " layer needs upstream outputs");
    }
    if (layer.agents.empty()) throw ValidationError("layer has no agents");

    PromptMessages prompt = base;
    if (propose) {
        if (!utf8::trim(layer.role_prompt).empty()) prompt.user = layer.role_prompt + "\n\n" + base.user;
    } else {
        std::string user = include_source ? base.user + "\n\n" : std::string();
        if (!utf8::trim(layer.role_prompt).empty()) user += layer.role_prompt + "\n\n";
        user += candidate_block(upstream);
        prompt.user = std::move(user);
    }

    std::vector<std::future<ModelResponse>> pending;
    pending.reserve(layer.agents.size());
    for (const AgentSpec& agent : layer.agents) {
        pending.push_back(std::async(std::launch::async,
                                     [this, &agent, &prompt] { return gateway_.complete(agent, prompt); }));
    }

    LayerTrace trace;
    trace.role = layer.role;
    std::string first_error;
    for (std::size_t i = 0; i < pending.size(); ++i) {
        AgentCall call{layer.agents[i].name, prompt, {}, std::nullopt};
        if (layer.agents[i].system_override) call.prompt.system = *layer.agents[i].system_override;
        try {
            call.output = pending[i].get().text;
        } catch (const std::exception& e) {
            call.error = e.what();
            if (first_error.empty()) first_error = e.what();
        }
        trace.calls.push_back(std::move(call));
    }
    if (!first_error.empty()) {
        const std::string where = std::string(to_string(layer.role)) + " layer: ";
        if (!skip_failed) throw LayerError(where + first_error, std::move(trace));
        if (trace.outputs().empty()) throw LayerError(where + "every agent failed; last error: " + first_error, std::move(trace));
    }
    return trace;
}

AgentCall MoaOrchestrator::aggregate(const MoaConfig& config, std::span<const std::string> outputs,
                                     const PromptMessages& base) {
    if (outputs.empty()) throw ValidationError("aggregation needs at least one upstream output");
    PromptMessages prompt = base;
    std::string user;
    if (!utf8::trim(config.aggregator_prompt).empty()) user += config.aggregator_prompt + "\n\n";
    user += base.user + "\n\n" + candidate_block(outputs);
    prompt.user = std::move(user);
    AgentCall call{config.aggregator.name, prompt, {}, std::nullopt};
    if (config.aggregator.system_override) call.prompt.system = *config.aggregator.system_override;
    call.output = gateway_.complete(config.aggregator, prompt).text;
    return call;
}

MoaTrace MoaOrchestrator::run_pipeline(const MoaConfig& config, const PromptMessages& base,
                                       std::string trace_id) {
    validate_config(config);
    MoaTrace trace;
    trace.trace_id = std::move(trace_id);
    trace.task = config.task;
    std::vector<std::string> upstream;
    for (const LayerSpec& layer : config.layers) {
        try {
            trace.layers.push_back(run_layer(layer, base, upstream, config.include_source, config.skip_failed_agents));
        } catch (LayerError& e) {
            trace.layers.push_back(std::move(e.trace));
            throw PipelineError(trace.trace_id + ": " + e.what(), std::move(trace));
        } catch (const Error& e) {
            throw PipelineError(trace.trace_id + ": " + e.what(), std::move(trace));
        }
        upstream = trace.layers.back().outputs();
    }
    try {
        trace.aggregator = aggregate(config, upstream, base);
    } catch (const Error& e) {
        throw PipelineError(trace.trace_id + ": aggregator failed: " + e.what(), std::move(trace));
    }
    trace.final_output = trace.aggregator->output;
    return trace;
}

MoaTrace MoaOrchestrator::run_pipeline(const MoaConfig& config, const Thread& thread) {
    if (config.task != Task::A) throw ValidationError("Task A input given to a Task B MoA config");
    return run_pipeline(config, build_task_a_prompt(thread, {}), thread.id);
}

MoaTrace MoaOrchestrator::run_pipeline(const MoaConfig& config, const Thread& thread,
                                       std::span<const LabeledSpan> spans) {
    if (config.task != Task::B) throw ValidationError("Task B input given to a Task A MoA config");
    return run_pipeline(config, build_task_b_prompt(thread, spans, {}), thread.id);
}

std::string_view to_string(ProposerMix mix) { return mix == ProposerMix::Single ? "single" : "multi"; }

MoaConfig layer_variant(const MoaConfig& base, std::size_t layer_count, ProposerMix mix) {
    validate_config(base);
    if (layer_count < 1 || layer_count > 3) throw ValidationError("layer count must be 1, 2 or 3");
    MoaConfig out = base;
    out.layers.clear();
    LayerSpec propose = base.layers.front();
    if (mix == ProposerMix::Single) propose.agents.resize(1);
    out.layers.push_back(std::move(propose));
    for (std::size_t i = 1; i < layer_count; ++i) {
        if (i < base.layers.size()) {
            out.layers.push_back(base.layers[i]);
        } else {
            out.layers.push_back(LayerSpec{kRoleOrder[i], {base.aggregator},
                                           std::string(default_role_prompt(kRoleOrder[i]))});
        }
    }
    validate_config(out);
    return out;
}

}  // namespace persum
