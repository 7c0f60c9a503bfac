#include "doctest.h"
#include "persum/corpus.hpp"
#include "persum/error.hpp"
#include "persum/prompting.hpp"

using namespace persum;

namespace {

std::vector<Thread> fixture() { return load_corpus(std::string(PERSUM_FIXTURES) + "/threads.jsonl").threads; }

std::size_t count(const std::string& hay, std::string_view needle) {
    std::size_t n = 0;
    for (auto pos = hay.find(needle); pos != std::string::npos; pos = hay.find(needle, pos + 1)) ++n;
    return n;
}

}  // namespace

TEST_CASE("zero-shot Task A prompt layout") {
    const auto threads = fixture();
    const PromptMessages p = build_task_a_prompt(threads[1], {});
    CHECK(p.system == "You are a helpful assistant.");
    CHECK(p.user.rfind("Question: Is it safe to take ibuprofen every day?\n\nContext: I have mild back pain.\n\nAnswers:\n[1] ", 0) == 0);
    CHECK(p.user.find("[2] Have you asked your pharmacist") != std::string::npos);
    CHECK(p.user.find("expert annotator") != std::string::npos);
    CHECK(count(p.user, kExemplarHeading) == 0);
    for (auto def : perspective_definitions()) CHECK(p.user.find(def) != std::string::npos);
    CHECK(p.user.find("{") == std::string::npos);
}

TEST_CASE("context section is omitted when absent") {
    const auto threads = fixture();
    CHECK(build_task_a_prompt(threads[0], {}).user.find("Context:") == std::string::npos);
}

TEST_CASE("few-shot prompts embed exactly the given exemplars") {
    const auto threads = fixture();
    std::vector<Exemplar> ex;
    for (int i = 0; i < 3; ++i) ex.push_back(Exemplar::for_task(threads[i], Task::A));
    const PromptMessages p = build_task_a_prompt(threads[6], ex);
    CHECK(count(p.user, kExemplarHeading) == 3);
    CHECK(p.user.find("### Example 3\n") != std::string::npos);
    CHECK(p.user.find("span: \"often caused by weak thigh muscles\", label: \"CAUSE\"") != std::string::npos);
    CHECK(p.user.find("### Input\n\nQuestion: Is a fever") != std::string::npos);
    std::vector<Exemplar> too_many(kMaxExemplars + 1, ex[0]);
    CHECK_THROWS_AS(build_task_a_prompt(threads[6], too_many), ValidationError);
}

TEST_CASE("Task B prompt lists spans grouped by perspective") {
    const auto threads = fixture();
    std::vector<LabeledSpan> spans;
    for (const auto& g : threads[0].gold_spans) spans.push_back(to_labeled(g));
    const PromptMessages p = build_task_b_prompt(threads[0], spans, {});
    const auto exp = p.user.find("EXPERIENCE:\n- \"I had the same ache last spring\"");
    const auto cause = p.user.find("CAUSE:\n- \"often caused by weak thigh muscles\"");
    REQUIRE(exp != std::string::npos);
    REQUIRE(cause != std::string::npos);
    CHECK(exp < cause);
    CHECK(p.user.find("While writing summaries") != std::string::npos);
    for (auto opener : summary_openers()) CHECK(p.user.find(opener) != std::string::npos);
    CHECK_THROWS_AS(build_task_b_prompt(threads[0], {}, {}), ValidationError);
}

TEST_CASE("exemplars must match the task") {
    const auto threads = fixture();
    const Exemplar a = Exemplar::for_task(threads[0], Task::A);
    CHECK(a.task() == Task::A);
    CHECK_THROWS_AS(render_exemplar(a, Task::B), ValidationError);
    const std::string b = render_exemplar(Exemplar::for_task(threads[0], Task::B), Task::B);
    CHECK(b.find("CAUSE Summary: \"Some of the causes include weak thigh muscles.\"") != std::string::npos);
}

TEST_CASE("template library") {
    TemplateLibrary lib;
    CHECK_THROWS_AS(lib.add({"x", Task::A, "sys", "no placeholders"}), ValidationError);
    lib.add({"x", Task::A, "sys", "{examples}{question}{context}{answers}Label it."});
    CHECK(lib.contains("x", Task::A));
    CHECK_FALSE(lib.contains("x", Task::B));
    CHECK_THROWS_AS(lib.get("y", Task::A), ValidationError);
    const auto threads = fixture();
    const PromptMessages p = build_task_a_prompt(threads[0], {}, "x", lib);
    CHECK(p.system == "sys");
    CHECK(p.user.size() > 10);
    CHECK(p.user.substr(p.user.size() - 9) == "Label it.");
    // Placeholder-looking text inside thread content is not substituted again.
    Thread t = threads[0];
    t.question = "what about {answers}?";
    CHECK(count(build_task_a_prompt(t, {}, "x", lib).user, "[1] ") == 1);
}
