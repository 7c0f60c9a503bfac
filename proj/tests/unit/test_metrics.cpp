#include <cmath>

#include "doctest.h"
#include "persum/error.hpp"
#include "persum/metrics.hpp"

using namespace persum;

namespace {

GoldSpan gold(std::size_t a, std::size_t s, std::size_t e, Perspective p, std::string text = "x") {
    return {a, s, e, std::move(text), p};
}

LabeledSpan pred(std::size_t a, std::size_t s, std::size_t e, Perspective p, std::string text = "x") {
    return {std::move(text), p, a, s, e};
}

ClassScore cls(std::size_t tp, std::size_t support, std::size_t predicted, double f1) {
    return {tp, support, predicted, f1};
}

}  // namespace

TEST_CASE("PRF harmonic mean") {
    CHECK(PRF::from(0, 0).f1 == 0.0);
    CHECK(PRF::from(1, 0.5).f1 == doctest::Approx(2.0 / 3.0));
}

TEST_CASE("macro and weighted F1 hand cases") {
    std::vector<ClassScore> two{cls(1, 1, 1, 1.0), cls(0, 1, 0, 0.0)};
    CHECK(macro_f1(two) == doctest::Approx(0.5));
    std::vector<ClassScore> five{cls(4, 4, 4, 1), cls(3, 3, 3, 1), cls(0, 1, 1, 0), cls(1, 1, 1, 1), cls(1, 1, 1, 1)};
    CHECK(macro_f1(five) == doctest::Approx(0.8));
}

TEST_CASE("classification over answer presence") {
    Thread t;
    t.id = "t";
    t.answers = {"aaaa", "bbbb", "cccc"};
    t.gold_spans = {gold(0, 0, 2, Perspective::Cause), gold(1, 0, 2, Perspective::Suggestion)};
    const auto g = presence_from_gold(t);
    REQUIRE(g.size() == 3);
    CHECK(g[0].labels[index_of(Perspective::Cause)]);

    SUBCASE("perfect") {
        const auto s = classification_scores(g, g);
        CHECK(s.macro_f1 == doctest::Approx(1.0));
        CHECK(s.weighted_f1 == doctest::Approx(1.0));
    }
    SUBCASE("one class missed") {
        std::vector<LabeledSpan> p{pred(0, 0, 2, Perspective::Cause)};
        const auto s = classification_scores(g, presence_from_predictions(t, p));
        CHECK(s.per_class[index_of(Perspective::Suggestion)].f1 == 0.0);
        CHECK(s.macro_f1 == doctest::Approx(0.8));
        CHECK(s.weighted_f1 == doctest::Approx(0.5));
    }
    SUBCASE("universe mismatch") {
        auto other = g;
        other.pop_back();
        CHECK_THROWS_AS(classification_scores(g, other), ValidationError);
    }
}

TEST_CASE("weighted F1 hand case") {
    ClassificationScores s;
    // supports {4,3,1,1,1} with F1 {1,1,0,1,1}
    std::vector<AnswerPresence> g, p;
    auto add = [&](Perspective q, bool gold_on, bool pred_on) {
        AnswerPresence a{"t", g.size(), {}}, b{"t", p.size(), {}};
        a.labels[index_of(q)] = gold_on;
        b.labels[index_of(q)] = pred_on;
        g.push_back(a);
        p.push_back(b);
    };
    for (int i = 0; i < 4; ++i) add(Perspective::Cause, true, true);
    for (int i = 0; i < 3; ++i) add(Perspective::Suggestion, true, true);
    add(Perspective::Experience, true, false);
    add(Perspective::Information, true, true);
    add(Perspective::Question, true, true);
    s = classification_scores(g, p);
    CHECK(s.macro_f1 == doctest::Approx(0.8));
    CHECK(s.weighted_f1 == doctest::Approx(0.9));
}

TEST_CASE("strict and proportional span matching") {
    SUBCASE("exact match") {
        std::vector<GoldSpan> g{gold(0, 0, 10, Perspective::Cause)};
        std::vector<LabeledSpan> p{to_labeled(g[0])};
        for (SpanMode m : {SpanMode::Strict, SpanMode::Proportional}) {
            const PRF r = span_match(g, p, m);
            CHECK(r.precision == 1.0);
            CHECK(r.recall == 1.0);
            CHECK(r.f1 == 1.0);
        }
    }
    SUBCASE("half overlap") {
        std::vector<GoldSpan> g{gold(0, 0, 10, Perspective::Cause)};
        std::vector<LabeledSpan> p{pred(0, 5, 15, Perspective::Cause)};
        const PRF pr = span_match(g, p, SpanMode::Proportional);
        CHECK(pr.precision == doctest::Approx(0.5));
        CHECK(pr.recall == doctest::Approx(0.5));
        CHECK(pr.f1 == doctest::Approx(0.5));
        CHECK(span_match(g, p, SpanMode::Strict).f1 == 0.0);
    }
    SUBCASE("label and answer must agree") {
        std::vector<GoldSpan> g{gold(0, 0, 10, Perspective::Cause)};
        std::vector<LabeledSpan> p{pred(0, 0, 10, Perspective::Suggestion), pred(1, 0, 10, Perspective::Cause)};
        CHECK(span_match(g, p, SpanMode::Proportional).precision == 0.0);
    }
    SUBCASE("one-to-one consumption") {
        std::vector<GoldSpan> g{gold(0, 0, 4, Perspective::Cause)};
        std::vector<LabeledSpan> p{pred(0, 0, 4, Perspective::Cause), pred(0, 0, 4, Perspective::Cause)};
        const PRF s = span_match(g, p, SpanMode::Strict);
        CHECK(s.precision == doctest::Approx(0.5));
        CHECK(s.recall == 1.0);
    }
    SUBCASE("ungrounded predictions") {
        std::vector<GoldSpan> g{gold(0, 0, 4, Perspective::Cause, "Rest  Helps")};
        std::vector<LabeledSpan> p{{"rest helps", Perspective::Cause, {}, {}, {}}};
        CHECK(span_match(g, p, SpanMode::Strict).f1 == 1.0);
        CHECK_THROWS_AS(span_match(g, p, SpanMode::Proportional), ValidationError);
        const SpanTally t = span_tally(g, p, UngroundedPolicy::ZeroCredit);
        CHECK(span_prf(t, SpanMode::Proportional, SpanAveraging::Micro).precision == 0.0);
    }
    SUBCASE("empty sides") {
        std::vector<GoldSpan> g{gold(0, 0, 4, Perspective::Cause)};
        CHECK(span_match(g, {}, SpanMode::Strict).precision == 0.0);
        CHECK(span_match(g, {}, SpanMode::Proportional).recall == 0.0);
        CHECK(span_match({}, {}, SpanMode::Strict).f1 == 1.0);
    }
}

TEST_CASE("macro span averaging uses active classes") {
    std::vector<GoldSpan> g{gold(0, 0, 4, Perspective::Cause), gold(0, 5, 9, Perspective::Cause),
                            gold(0, 10, 14, Perspective::Question)};
    std::vector<LabeledSpan> p{to_labeled(g[0]), to_labeled(g[1])};
    const SpanTally t = span_tally(g, p);
    CHECK(span_prf(t, SpanMode::Strict, SpanAveraging::Micro).recall == doctest::Approx(2.0 / 3.0));
    CHECK(span_prf(t, SpanMode::Strict, SpanAveraging::Macro).recall == doctest::Approx(0.5));
}

TEST_CASE("confusion matrix pairing") {
    std::vector<GoldSpan> g{gold(0, 0, 10, Perspective::Experience), gold(1, 0, 5, Perspective::Cause)};
    SUBCASE("covered by another label") {
        std::vector<LabeledSpan> p{pred(0, 0, 20, Perspective::Information)};
        const ConfusionMatrix m = confusion_matrix(g, p);
        CHECK(m.cells[index_of(Perspective::Experience)][index_of(Perspective::Information)] == 1);
        CHECK(m.misses == 1);
        CHECK(m.total() + m.misses == g.size());
    }
    SUBCASE("no predictions") {
        const ConfusionMatrix m = confusion_matrix(g, {});
        CHECK(m.total() == 0);
        CHECK(m.misses == 2);
    }
    SUBCASE("largest overlap wins") {
        std::vector<LabeledSpan> p{pred(0, 0, 3, Perspective::Cause), pred(0, 2, 10, Perspective::Question)};
        const ConfusionMatrix m = confusion_matrix(g, p);
        CHECK(m.cells[index_of(Perspective::Experience)][index_of(Perspective::Question)] == 1);
    }
}

TEST_CASE("overall means") {
    const std::vector<double> a{0.8949, 0.9190, 0.1756, 0.2641, 0.2110, 0.6578, 0.7392, 0.6961};
    CHECK(std::abs(task_a_overall(a) - 0.5697) <= 5e-4);
    const std::vector<double> b{0.4704, 0.2340, 0.4038, 0.1307, 0.4289, 0.9116, 0.4615, 0.3031};
    CHECK(std::abs(task_b_overall(b) - 0.4180) <= 5e-4);
    const std::vector<double> l{0.5381, 0.7299, 0.0320, 0.1218, 0.0507, 0.4530, 0.6991, 0.5498};
    CHECK(std::abs(task_a_overall(l) - 0.3968) <= 5e-4);
    CHECK_THROWS_AS(task_a_overall(std::vector<double>(7, 0.5)), ValidationError);
    std::vector<std::optional<double>> missing(b.begin(), b.end());
    missing[7].reset();
    CHECK_THROWS_WITH_AS(task_b_overall(missing), doctest::Contains("SC"), ValidationError);
    std::vector<double> bad = a;
    bad[0] = 1.5;
    CHECK_THROWS_WITH_AS(task_a_overall(bad), doctest::Contains("M-F1"), ValidationError);
    bad[0] = std::nan("");
    CHECK_THROWS_AS(task_a_overall(bad), ValidationError);
}
