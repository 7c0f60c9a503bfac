#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "persum/corpus.hpp"
#include "persum/parsing.hpp"

namespace persum {

enum class Task { A, B };

std::string_view to_string(Task t);

struct PromptMessages {
    std::string system;
    std::string user;

    bool operator==(const PromptMessages&) const = default;
};

// A solved training thread shown to the model. Task A targets are the gold spans,
// Task B targets the gold summaries (with the gold spans as input).
struct Exemplar {
    Thread thread;
    std::variant<std::vector<GoldSpan>, PerspectiveSummaries> target;

    static Exemplar for_task(const Thread& thread, Task task);
    Task task() const;
};

inline constexpr std::size_t kMaxExemplars = 5;
inline constexpr std::string_view kDefaultTemplate = "default";

// User-prompt template with {examples} {question} {context} {answers} {spans} placeholders.
struct PromptTemplate {
    std::string id;
    Task task = Task::A;
    std::string system;
    std::string body;
};

class TemplateLibrary {
public:
    // Holds the shipped "default" templates for both tasks.
    static const TemplateLibrary& builtin();

    TemplateLibrary() = default;

    // Throws ValidationError when required placeholders are missing.
    void add(PromptTemplate tpl);
    const PromptTemplate& get(std::string_view id, Task task) const;
    bool contains(std::string_view id, Task task) const;

    static PromptTemplate load_file(const std::filesystem::path& path, std::string id, Task task,
                                    std::string system = {});

private:
    std::map<std::pair<std::string, Task>, PromptTemplate> templates_;
};

// The five perspective definitions of the Task A instruction block, in listing order.
std::span<const std::string_view> perspective_definitions();

// The per-perspective summary openers of the Task B instruction block.
std::span<const std::string_view> summary_openers();

PromptMessages build_task_a_prompt(const Thread& thread, std::span<const Exemplar> exemplars,
                                   std::string_view template_id = kDefaultTemplate,
                                   const TemplateLibrary& library = TemplateLibrary::builtin());

// Spans are listed grouped by perspective. Throws ValidationError on empty spans.
PromptMessages build_task_b_prompt(const Thread& thread, std::span<const LabeledSpan> spans,
                                   std::span<const Exemplar> exemplars,
                                   std::string_view template_id = kDefaultTemplate,
                                   const TemplateLibrary& library = TemplateLibrary::builtin());

// Inputs followed by the gold output in the grammar the model must emit.
std::string render_exemplar(const Exemplar& ex, Task task);

// Heading that opens every rendered exemplar block.
inline constexpr std::string_view kExemplarHeading = "### Example ";

}  // namespace persum
