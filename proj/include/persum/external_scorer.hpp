#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

namespace persum {

// One request line: {"id", "source", "reference", "hypothesis"}.
struct ScorerRequest {
    std::string id;
    std::string source;
    std::string reference;
    std::string hypothesis;
};

// One response line: {"bertscore", "alignscore", "summac"}.
struct NeuralScores {
    double bertscore = 0.0;
    double alignscore = 0.0;
    double summac = 0.0;
};

std::string scorer_request_jsonl(std::span<const ScorerRequest> requests);

// Throws ValidationError naming the line on malformed JSON, a missing key or a non-finite
// value, and when the line count differs from `expected`.
std::vector<NeuralScores> parse_scorer_response(const std::string& text, std::size_t expected,
                                                const std::string& origin = "<scorer>");

// `scorer` is an http(s) URL receiving the request lines as a POST body, or a file of
// precomputed response lines aligned with the requests.
std::vector<NeuralScores> external_scores(std::span<const ScorerRequest> requests,
                                          const std::string& scorer);

// Means over pairs; nullopt when there are none.
std::optional<NeuralScores> mean_scores(std::span<const NeuralScores> scores);

}  // namespace persum
