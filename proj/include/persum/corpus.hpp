#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "persum/perspective.hpp"

namespace persum {

// An annotated answer span. Offsets are codepoint positions in answers[answer_index].
struct GoldSpan {
    std::size_t answer_index = 0;
    std::size_t start = 0;
    std::size_t end = 0;
    std::string text;
    Perspective label = Perspective::Information;

    bool operator==(const GoldSpan&) const = default;
};

// One community question-answering thread with its gold annotations.
struct Thread {
    std::string id;
    std::string question;
    std::optional<std::string> context;
    std::vector<std::string> answers;
    std::vector<GoldSpan> gold_spans;
    std::map<Perspective, std::string> gold_summaries;

    bool operator==(const Thread&) const = default;
};

struct SplitSpec {
    std::size_t train_count = 0;
    std::size_t valid_count = 0;
    std::size_t test_count = 0;
};

// Split sizes of the shared-task release (train / valid / withheld test).
inline constexpr SplitSpec kOfficialSplit{2236, 959, 50};

// Size of the validation tail used as the evaluation subset in reported experiments.
inline constexpr std::size_t kEvaluationTail = 400;

struct Splits {
    std::vector<Thread> train;
    std::vector<Thread> valid;
    std::vector<Thread> test;
};

struct LoadResult {
    std::vector<Thread> threads;
    std::vector<std::string> warnings;
};

// schema is "canonical" or "adapter:<name>" (see available_adapters()).
// Accepts a JSON array or a JSON-Lines stream. Throws ValidationError.
LoadResult load_corpus(const std::filesystem::path& path, const std::string& schema = "canonical");

// Parses already-read text; `origin` is only used in error messages.
LoadResult parse_corpus(const std::string& text, const std::string& schema = "canonical",
                        const std::string& origin = "<memory>");

std::vector<std::string> available_adapters();

// Checks every Thread/GoldSpan invariant; throws ValidationError naming the thread.
void validate_thread(const Thread& thread);

nlohmann::json to_json(const Thread& thread);
nlohmann::json to_json(const GoldSpan& span);

enum class CorpusFormat { JsonArray, JsonLines };
std::string serialize_corpus(const std::vector<Thread>& threads,
                             CorpusFormat format = CorpusFormat::JsonLines);
void save_corpus(const std::filesystem::path& path, const std::vector<Thread>& threads,
                 CorpusFormat format = CorpusFormat::JsonLines);

// Contiguous order-preserving partition. Throws ValidationError when counts do not sum up.
Splits split_corpus(const std::vector<Thread>& threads, const SplitSpec& spec);

// Last n threads of a split, in order. Throws when n exceeds the split size.
std::vector<Thread> tail(const std::vector<Thread>& threads, std::size_t n);

}  // namespace persum
