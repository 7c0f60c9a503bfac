#include <cmath>
#include <array>
#include <fstream>

#include "doctest.h"
#include "json.hpp"
#include "persum/lexical.hpp"

using namespace persum;

TEST_CASE("tokenization") {
    CHECK(metric_tokens("The CAT, sat!") == std::vector<std::string>{"the", "cat", "sat"});
    CHECK(metric_tokens("caf\xC3\xA9-au lait") == std::vector<std::string>{"caf\xC3\xA9", "au", "lait"});
    CHECK(metric_tokens("  ").empty());
}

TEST_CASE("ROUGE hand cases") {
    CHECK(rouge("the cat sat", "the cat", RougeVariant::One) == doctest::Approx(0.8).epsilon(1e-9));
    for (RougeVariant v : {RougeVariant::One, RougeVariant::Two, RougeVariant::L}) {
        CHECK(rouge("a b c d", "a b c d", v) == 1.0);
        CHECK(rouge("a b", "c d", v) == 0.0);
        CHECK(rouge("", "", v) == 1.0);
        CHECK(rouge("", "a", v) == 0.0);
        CHECK(rouge("a", "", v) == 0.0);
    }
    CHECK(rouge("word", "word", RougeVariant::Two) == 1.0);
    CHECK(rouge("a b c", "c b a", RougeVariant::L) == doctest::Approx(1.0 / 3.0));
}

TEST_CASE("BLEU") {
    CHECK(bleu("one two three four five", "one two three four five") == doctest::Approx(1.0));
    CHECK(bleu("one two three four", "five six seven eight") == doctest::Approx(std::pow(1.0 / 120.0, 0.25)));
    CHECK(bleu("a b c", "") == 0.0);
    // Brevity penalty only for short hypotheses.
    CHECK(bleu("a b c d e f g h", "a b c d") < bleu("a b c d", "a b c d"));
}

TEST_CASE("lexical metrics agree with the reference oracle") {
    std::ifstream in(std::string(PERSUM_FIXTURES) + "/lexical_pairs.json");
    const auto pairs = nlohmann::json::parse(in);
    // bleu, rouge1, rouge2, rougeL from lexical_oracle.py
    const std::array<std::array<double, 4>, 10> expected = {{
        {0.3674145494, 0.7500000000, 0.5714285714, 0.7500000000},
        {0.3201911828, 0.6666666667, 0.5000000000, 0.6666666667},
        {0.4491846617, 0.8421052632, 0.4705882353, 0.7368421053},
        {0.2981247385, 0.7826086957, 0.4761904762, 0.6086956522},
        {0.5372849659, 0.7368421053, 0.5882352941, 0.7368421053},
        {0.2214945551, 0.4705882353, 0.2666666667, 0.4705882353},
        {0.2653856086, 0.7142857143, 0.3333333333, 0.4285714286},
        {1.0000000000, 1.0000000000, 1.0000000000, 1.0000000000},
        {0.0443959720, 0.4285714286, 0.0000000000, 0.4285714286},
        {0.0953675276, 0.0000000000, 0.0000000000, 0.0000000000},
    }};
    REQUIRE(pairs.size() == expected.size());
    for (std::size_t i = 0; i < pairs.size(); ++i) {
        const std::string ref = pairs[i][0], hyp = pairs[i][1];
        CHECK(bleu(ref, hyp) == doctest::Approx(expected[i][0]).epsilon(1e-8));
        CHECK(rouge(ref, hyp, RougeVariant::One) == doctest::Approx(expected[i][1]).epsilon(1e-8));
        CHECK(rouge(ref, hyp, RougeVariant::Two) == doctest::Approx(expected[i][2]).epsilon(1e-8));
        CHECK(rouge(ref, hyp, RougeVariant::L) == doctest::Approx(expected[i][3]).epsilon(1e-8));
    }
}

TEST_CASE("METEOR") {
    const std::string ten = "a1 b2 c3 d4 e5 f6 g7 h8 i9 j10";
    CHECK(meteor(ten, ten) == doctest::Approx(0.9995).epsilon(1e-9));
    CHECK(meteor("alpha beta", "gamma delta") == 0.0);
    CHECK(meteor("running", "runs") > 0.0);
    // Two chunks: P = R = 1, penalty 0.5 * (2/4)^3.
    CHECK(meteor("a b c d", "c d a b") == doctest::Approx(1.0 - 0.5 * 0.125));
}

TEST_CASE("Porter stemmer reference words") {
    const std::vector<std::pair<std::string, std::string>> cases = {
        {"caresses", "caress"}, {"ponies", "poni"},      {"ties", "ti"},          {"cats", "cat"},
        {"feed", "feed"},       {"agreed", "agre"},      {"plastered", "plaster"}, {"motoring", "motor"},
        {"sing", "sing"},       {"conflated", "conflat"}, {"troubled", "troubl"},  {"sized", "size"},
        {"hopping", "hop"},     {"falling", "fall"},     {"filing", "file"},      {"happy", "happi"},
        {"relational", "relat"}, {"conditional", "condit"}, {"digitizer", "digit"}, {"generalization", "gener"},
        {"running", "run"},     {"runs", "run"},         {"a", "a"},              {"is", "is"},
        {"adjustable", "adjust"}, {"effective", "effect"}, {"controlling", "control"}, {"roll", "roll"},
    };
    for (const auto& [w, s] : cases) CHECK_MESSAGE(porter_stem(w) == s, w);
}

TEST_CASE("arbitrary bytes do not crash the metrics") {
    const std::string junk = "\xFF\xFE a\x00b \xE2\x82";
    for (RougeVariant v : {RougeVariant::One, RougeVariant::Two, RougeVariant::L}) {
        const double r = rouge(junk, "a b", v);
        CHECK((r >= 0.0 && r <= 1.0));
    }
    CHECK(bleu(junk, junk) >= 0.0);
    CHECK(meteor(junk, "b") >= 0.0);
}
