#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "persum/gateway.hpp"
#include "persum/prompting.hpp"

namespace persum {

enum class LayerRole { Propose, Verify, HallucinationCheck };

std::string_view to_string(LayerRole role);
LayerRole parse_layer_role(std::string_view s);

struct LayerSpec {
    LayerRole role = LayerRole::Propose;
    std::vector<AgentSpec> agents;
    std::string role_prompt;
};

struct MoaConfig {
    std::vector<LayerSpec> layers;
    AgentSpec aggregator;
    std::string aggregator_prompt;
    Task task = Task::A;
    // Refinement layers also see the original task prompt (question, answers or spans).
    bool include_source = true;
    // Drop failed agents instead of failing the layer; a layer still needs one output.
    bool skip_failed_agents = false;
};

// Default prompts shipped with the library.
std::string_view default_role_prompt(LayerRole role);
std::string_view default_aggregator_prompt();

// Throws ValidationError: 1-3 layers with roles PROPOSE [, VERIFY [, HALLUCINATION_CHECK]],
// non-empty agent lists with unique names per layer, valid agents.
void validate_config(const MoaConfig& config);

// Agents may be given inline or by name from a top-level "agents" object.
MoaConfig moa_from_json(const nlohmann::json& j);
MoaConfig load_moa_config(const std::filesystem::path& path);
nlohmann::json to_json(const MoaConfig& config);

struct AgentCall {
    std::string agent;
    PromptMessages prompt;
    std::string output;
    std::optional<std::string> error;
};

struct LayerTrace {
    LayerRole role = LayerRole::Propose;
    std::vector<AgentCall> calls;

    // Outputs of successful calls in agent order.
    std::vector<std::string> outputs() const;
};

struct MoaTrace {
    std::string trace_id;
    Task task = Task::A;
    std::vector<LayerTrace> layers;
    std::optional<AgentCall> aggregator;
    std::string final_output;

    nlohmann::json to_json() const;
};

class LayerError : public Error {
public:
    LayerError(const std::string& what, LayerTrace partial) : Error(what), trace(std::move(partial)) {}
    LayerTrace trace;
};

class PipelineError : public Error {
public:
    PipelineError(const std::string& what, MoaTrace partial) : Error(what), trace(std::move(partial)) {}
    MoaTrace trace;
};

// Embeds upstream outputs verbatim under numbered candidate headings.
std::string candidate_block(std::span<const std::string> outputs);

class MoaOrchestrator {
public:
    explicit MoaOrchestrator(ModelGateway& gateway) : gateway_(gateway) {}

    // Agents run concurrently; calls come back in agent order.
    LayerTrace run_layer(const LayerSpec& layer, const PromptMessages& base,
                         std::span<const std::string> upstream, bool include_source = true,
                         bool skip_failed = false);

    AgentCall aggregate(const MoaConfig& config, std::span<const std::string> final_layer_outputs,
                        const PromptMessages& base);

    // Runs every layer in order, then the aggregator. Throws PipelineError with the trace so far.
    MoaTrace run_pipeline(const MoaConfig& config, const PromptMessages& base, std::string trace_id);

    // Zero-shot Task A / Task B base prompts built from the thread.
    MoaTrace run_pipeline(const MoaConfig& config, const Thread& thread);
    MoaTrace run_pipeline(const MoaConfig& config, const Thread& thread,
                          std::span<const LabeledSpan> spans);

private:
    ModelGateway& gateway_;
};

enum class ProposerMix { Single, Multi };
std::string_view to_string(ProposerMix mix);

// Layer-count ablation variant of a base config: proposers are the base proposers (Multi) or
// only the first of them (Single); missing refinement layers reuse the aggregator agent.
MoaConfig layer_variant(const MoaConfig& base, std::size_t layer_count, ProposerMix mix);

}  // namespace persum
