#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace persum {

using EmbeddingVector = std::vector<double>;
using EmbeddingTable = std::map<std::string, EmbeddingVector>;

// Throws ValidationError on dimension mismatch or a zero vector.
double cosine_similarity(std::span<const double> a, std::span<const double> b);

struct Clustering {
    std::size_t k = 0;
    std::uint64_t seed = 0;
    std::vector<EmbeddingVector> centroids;
    std::map<std::string, std::size_t> assignment;
    // Within-cluster sum of squared distances after each Lloyd iteration.
    std::vector<double> inertia_trace;
    std::size_t iterations = 0;

    double inertia() const { return inertia_trace.empty() ? 0.0 : inertia_trace.back(); }
};

// Lloyd's algorithm with seeded k-means++ initialisation. Points are visited in id order,
// so the result depends only on (vectors, k, seed, max_iters).
Clustering kmeans(const EmbeddingTable& vectors, std::size_t k, std::uint64_t seed,
                  std::size_t max_iters = 100);

// From each of the `shots` clusters whose centroid is closest to the query, the member most
// similar to the query. Ordered by descending similarity, ties by smaller id.
std::vector<std::string> select_exemplars(const Clustering& clustering,
                                          std::span<const double> query, std::size_t shots,
                                          const EmbeddingTable& candidates);

// First `shots` ids of a curated list. Throws on shots == 0 or shots > list size.
std::vector<std::string> manual_exemplars(std::span<const std::string> curated, std::size_t shots);

// Throws ValidationError when a curated list repeats an id.
void validate_curated(std::span<const std::string> curated);

inline constexpr std::size_t kDefaultShots = 3;
inline constexpr std::size_t kStubDimension = 384;

// Deterministic stand-in for a sentence encoder: a unit vector seeded from the text hash.
EmbeddingVector stub_embedding(std::string_view text, std::size_t dim = kStubDimension);

// JSON-Lines {"id": ..., "vector": [...]}; checks finiteness and a constant dimension.
EmbeddingTable load_embeddings(const std::filesystem::path& path);
EmbeddingTable parse_embeddings(const std::string& text, const std::string& origin = "<memory>");
void save_embeddings(const std::filesystem::path& path, const EmbeddingTable& table);

}  // namespace persum
