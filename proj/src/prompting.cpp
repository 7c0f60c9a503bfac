#include "persum/prompting.hpp"

#include <array>
#include <fstream>
#include <sstream>

#include "persum/assets.hpp"
#include "persum/error.hpp"
#include "persum/utf8.hpp"

namespace persum {

namespace {

constexpr std::array<std::string_view, kPerspectiveCount> kDefinitions = {
    "INFORMATION: Knowledge about diseases, disorders, and health-related facts.",
    "CAUSE: Reasons responsible for the occurrence of a medical condition.",
    "SUGGESTION: Advice or recommendations to assist in making informed decisions.",
    "EXPERIENCE: Individual experiences or anecdotes related to healthcare.",
    "QUESTION: Inquiries for deeper understanding.",
};

constexpr std::array<std::string_view, kPerspectiveCount> kOpeners = {
    "INFORMATION: \"For information purposes, [summary]...\"",
    "CAUSE: \"Some of the causes include [summary]...\"",
    "SUGGESTION: \"It is suggested that [summary]...\"",
    "EXPERIENCE: \"In user’s experience, [summary]...\"",
    "QUESTION: \"It is inquired whether [summary]...\"",
};

using Sections = std::map<std::string, std::string, std::less<>>;

// Single pass, so placeholder-like text inside thread content is never expanded.
std::string substitute(std::string_view body, const Sections& sections) {
    std::string out;
    std::size_t i = 0;
    while (i < body.size()) {
        if (body[i] == '{') {
            const auto close = body.find('}', i);
            if (close != std::string_view::npos) {
                const std::string_view name = body.substr(i + 1, close - i - 1);
                if (auto it = sections.find(name); it != sections.end()) {
                    out += it->second;
                    i = close + 1;
                    continue;
                }
            }
        }
        out.push_back(body[i]);
        ++i;
    }
    return out;
}

std::string question_section(const Thread& t) { return "Question: " + t.question + "\n\n"; }

std::string context_section(const Thread& t) {
    if (!t.context || utf8::trim(*t.context).empty()) return {};
    return "Context: " + *t.context + "\n\n";
}

std::string answers_section(const Thread& t) {
    std::string out = "Answers:\n";
    for (std::size_t i = 0; i < t.answers.size(); ++i) {
        out += "[" + std::to_string(i + 1) + "] " + t.answers[i] + "\n";
    }
    return out + "\n";
}

std::string spans_section(std::span<const LabeledSpan> spans) {
    std::string out = "Spans:\n";
    for (Perspective p : kOutputOrder) {
        bool header = false;
        for (const LabeledSpan& s : spans) {
            if (s.label != p) continue;
            if (!header) {
                out += std::string(to_string(p)) + ":\n";
                header = true;
            }
            out += "- \"" + s.text + "\"\n";
        }
    }
    return out + "\n";
}

std::vector<LabeledSpan> labeled(const std::vector<GoldSpan>& gold) {
    std::vector<LabeledSpan> out;
    for (const auto& g : gold) out.push_back(to_labeled(g));
    return out;
}

std::string examples_section(std::span<const Exemplar> exemplars, Task task) {
    if (exemplars.size() > kMaxExemplars) {
        throw ValidationError("at most " + std::to_string(kMaxExemplars) + " exemplars allowed, got " +
                              std::to_string(exemplars.size()));
    }
    if (exemplars.empty()) return {};
    std::string out;
    for (std::size_t i = 0; i < exemplars.size(); ++i) {
        out += std::string(kExemplarHeading) + std::to_string(i + 1) + "\n";
        out += render_exemplar(exemplars[i], task);
        out += "\n";
    }
    return out + "### Input\n\n";
}

void require_placeholder(const PromptTemplate& tpl, std::string_view name) {
    if (tpl.body.find("{" + std::string(name) + "}") == std::string::npos) {
        throw ValidationError("template '" + tpl.id + "' is missing the {" + std::string(name) +
                              "} placeholder");
    }
}

}  // namespace

std::string_view to_string(Task t) { return t == Task::A ? "A" : "B"; }

Exemplar Exemplar::for_task(const Thread& thread, Task task) {
    if (task == Task::A) return Exemplar{thread, thread.gold_spans};
    return Exemplar{thread, thread.gold_summaries};
}

Task Exemplar::task() const {
    return std::holds_alternative<std::vector<GoldSpan>>(target) ? Task::A : Task::B;
}

const TemplateLibrary& TemplateLibrary::builtin() {
    static const TemplateLibrary lib = [] {
        TemplateLibrary l;
        l.add({std::string(kDefaultTemplate), Task::A, std::string(assets::k_system),
               std::string(assets::k_task_a)});
        l.add({std::string(kDefaultTemplate), Task::B, std::string(assets::k_system),
               std::string(assets::k_task_b)});
        return l;
    }();
    return lib;
}

void TemplateLibrary::add(PromptTemplate tpl) {
    require_placeholder(tpl, "question");
    require_placeholder(tpl, tpl.task == Task::A ? "answers" : "spans");
    if (utf8::trim(tpl.system).empty()) tpl.system = std::string(assets::k_system);
    auto key = std::make_pair(tpl.id, tpl.task);
    templates_[key] = std::move(tpl);
}

const PromptTemplate& TemplateLibrary::get(std::string_view id, Task task) const {
    auto it = templates_.find(std::make_pair(std::string(id), task));
    if (it == templates_.end()) {
        throw ValidationError("unknown Task " + std::string(to_string(task)) + " template '" +
                              std::string(id) + "'");
    }
    return it->second;
}

bool TemplateLibrary::contains(std::string_view id, Task task) const {
    return templates_.count(std::make_pair(std::string(id), task)) > 0;
}

PromptTemplate TemplateLibrary::load_file(const std::filesystem::path& path, std::string id,
                                          Task task, std::string system) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("cannot read template file " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    std::string body = buf.str();
    while (!body.empty() && (body.back() == '\n' || body.back() == '\r')) body.pop_back();
    return PromptTemplate{std::move(id), task, std::move(system), std::move(body)};
}

std::span<const std::string_view> perspective_definitions() { return kDefinitions; }
std::span<const std::string_view> summary_openers() { return kOpeners; }

std::string render_exemplar(const Exemplar& ex, Task task) {
    if (ex.task() != task) {
        throw ValidationError("exemplar " + ex.thread.id + " carries a Task " +
                              std::string(to_string(ex.task())) + " target but Task " +
                              std::string(to_string(task)) + " was requested");
    }
    std::string out = question_section(ex.thread) + context_section(ex.thread);
    if (task == Task::A) {
        const auto& spans = std::get<std::vector<GoldSpan>>(ex.target);
        if (spans.empty()) throw ValidationError("exemplar " + ex.thread.id + " has no gold spans");
        out += answers_section(ex.thread);
        out += "Output:\n" + serialize_spans(std::span<const GoldSpan>(spans));
    } else {
        const auto& summaries = std::get<PerspectiveSummaries>(ex.target);
        if (summaries.empty()) throw ValidationError("exemplar " + ex.thread.id + " has no gold summaries");
        const auto spans = labeled(ex.thread.gold_spans);
        out += spans_section(spans);
        out += "Output:\n" + serialize_summaries(summaries);
    }
    return out;
}

PromptMessages build_task_a_prompt(const Thread& thread, std::span<const Exemplar> exemplars,
                                   std::string_view template_id, const TemplateLibrary& library) {
    const PromptTemplate& tpl = library.get(template_id, Task::A);
    const Sections sections = {
        {"examples", examples_section(exemplars, Task::A)},
        {"question", question_section(thread)},
        {"context", context_section(thread)},
        {"answers", answers_section(thread)},
        {"spans", ""},
    };
    return PromptMessages{tpl.system, substitute(tpl.body, sections)};
}

PromptMessages build_task_b_prompt(const Thread& thread, std::span<const LabeledSpan> spans,
                                   std::span<const Exemplar> exemplars,
                                   std::string_view template_id, const TemplateLibrary& library) {
    if (spans.empty()) {
        throw ValidationError("thread " + thread.id + ": Task B needs at least one span to summarize");
    }
    const PromptTemplate& tpl = library.get(template_id, Task::B);
    const Sections sections = {
        {"examples", examples_section(exemplars, Task::B)},
        {"question", question_section(thread)},
        {"context", context_section(thread)},
        {"answers", ""},
        {"spans", spans_section(spans)},
    };
    return PromptMessages{tpl.system, substitute(tpl.body, sections)};
}

}  // namespace persum
