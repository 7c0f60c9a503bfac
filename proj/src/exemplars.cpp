#include "persum/exemplars.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

#include "json.hpp"
#include "persum/error.hpp"
#include "persum/utf8.hpp"

namespace persum {

namespace {

double squared_distance(std::span<const double> a, std::span<const double> b) {
    double d = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double diff = a[i] - b[i];
        d += diff * diff;
    }
    return d;
}

double norm(std::span<const double> a) {
    return std::sqrt(std::inner_product(a.begin(), a.end(), a.begin(), 0.0));
}

// Uniform double in [0, 1) from raw engine output; std::uniform_real_distribution is
// implementation-defined, this mapping is not.
double unit_uniform(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

std::uint64_t fnv1a(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

// Cosine that ranks a zero vector below every real similarity instead of throwing.
double safe_cosine(std::span<const double> a, std::span<const double> b) {
    const double na = norm(a);
    const double nb = norm(b);
    if (na == 0.0 || nb == 0.0) return -2.0;
    return std::inner_product(a.begin(), a.end(), b.begin(), 0.0) / (na * nb);
}

}  // namespace

double cosine_similarity(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) {
        throw ValidationError("cosine_similarity: dimension mismatch " + std::to_string(a.size()) +
                              " vs " + std::to_string(b.size()));
    }
    const double na = norm(a);
    const double nb = norm(b);
    if (na == 0.0 || nb == 0.0) throw ValidationError("cosine_similarity: zero vector");
    const double c = std::inner_product(a.begin(), a.end(), b.begin(), 0.0) / (na * nb);
    return std::clamp(c, -1.0, 1.0);
}

Clustering kmeans(const EmbeddingTable& vectors, std::size_t k, std::uint64_t seed,
                  std::size_t max_iters) {
    if (k == 0) throw ValidationError("kmeans: k must be positive");
    if (k > vectors.size()) {
        throw ValidationError("kmeans: k = " + std::to_string(k) + " exceeds the " +
                              std::to_string(vectors.size()) + " candidates");
    }
    if (max_iters == 0) throw ValidationError("kmeans: max_iters must be at least 1");

    std::vector<const std::string*> ids;
    std::vector<std::span<const double>> points;
    const std::size_t dim = vectors.begin()->second.size();
    for (const auto& [id, v] : vectors) {
        if (v.size() != dim) throw ValidationError("kmeans: embedding " + id + " has a different dimension");
        ids.push_back(&id);
        points.emplace_back(v);
    }
    const std::size_t n = points.size();

    // k-means++ seeding.
    std::mt19937_64 rng(seed);
    std::vector<EmbeddingVector> centroids;
    std::vector<bool> chosen(n, false);
    {
        const std::size_t first = static_cast<std::size_t>(unit_uniform(rng) * static_cast<double>(n));
        centroids.emplace_back(points[first].begin(), points[first].end());
        chosen[first] = true;
    }
    std::vector<double> d2(n, std::numeric_limits<double>::infinity());
    while (centroids.size() < k) {
        double total = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            d2[i] = std::min(d2[i], squared_distance(points[i], centroids.back()));
            total += chosen[i] ? 0.0 : d2[i];
        }
        std::size_t pick = n;
        if (total > 0.0) {
            const double target = unit_uniform(rng) * total;
            double acc = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                if (chosen[i]) continue;
                acc += d2[i];
                if (acc > target) {
                    pick = i;
                    break;
                }
            }
        }
        if (pick == n) {
            // Remaining points coincide with chosen centres; take the first unchosen one.
            for (std::size_t i = 0; i < n && pick == n; ++i) {
                if (!chosen[i]) pick = i;
            }
        }
        chosen[pick] = true;
        centroids.emplace_back(points[pick].begin(), points[pick].end());
    }

    Clustering result;
    result.k = k;
    result.seed = seed;
    std::vector<std::size_t> assign(n, k);

    for (std::size_t iter = 0; iter < max_iters; ++iter) {
        bool changed = false;
        for (std::size_t i = 0; i < n; ++i) {
            std::size_t best = 0;
            double best_d = std::numeric_limits<double>::infinity();
            for (std::size_t c = 0; c < k; ++c) {
                const double d = squared_distance(points[i], centroids[c]);
                if (d < best_d) {
                    best_d = d;
                    best = c;
                }
            }
            if (assign[i] != best) {
                assign[i] = best;
                changed = true;
            }
        }

        // Empty clusters take the point farthest from its own centroid.
        for (std::size_t c = 0; c < k; ++c) {
            if (std::find(assign.begin(), assign.end(), c) != assign.end()) continue;
            std::size_t far = n;
            double far_d = -1.0;
            for (std::size_t i = 0; i < n; ++i) {
                const std::size_t own = assign[i];
                const auto members = std::count(assign.begin(), assign.end(), own);
                if (members < 2) continue;
                const double d = squared_distance(points[i], centroids[own]);
                if (d > far_d) {
                    far_d = d;
                    far = i;
                }
            }
            if (far == n) break;
            assign[far] = c;
            centroids[c].assign(points[far].begin(), points[far].end());
            changed = true;
        }

        std::vector<EmbeddingVector> sums(k, EmbeddingVector(dim, 0.0));
        std::vector<std::size_t> counts(k, 0);
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t d = 0; d < dim; ++d) sums[assign[i]][d] += points[i][d];
            ++counts[assign[i]];
        }
        for (std::size_t c = 0; c < k; ++c) {
            if (counts[c] == 0) continue;
            for (std::size_t d = 0; d < dim; ++d) centroids[c][d] = sums[c][d] / static_cast<double>(counts[c]);
        }
        double inertia = 0.0;
        for (std::size_t i = 0; i < n; ++i) inertia += squared_distance(points[i], centroids[assign[i]]);
        result.inertia_trace.push_back(inertia);
        result.iterations = iter + 1;
        if (!changed) break;
    }

    result.centroids = std::move(centroids);
    for (std::size_t i = 0; i < n; ++i) result.assignment[*ids[i]] = assign[i];
    return result;
}

std::vector<std::string> select_exemplars(const Clustering& clustering,
                                          std::span<const double> query, std::size_t shots,
                                          const EmbeddingTable& candidates) {
    if (shots == 0) throw ValidationError("select_exemplars: shots must be positive");
    if (shots > clustering.k) {
        throw ValidationError("select_exemplars: shots = " + std::to_string(shots) +
                              " exceeds k = " + std::to_string(clustering.k));
    }
    for (const auto& c : clustering.centroids) {
        if (c.size() != query.size()) throw ValidationError("select_exemplars: query dimension mismatch");
    }

    std::vector<std::pair<double, std::size_t>> ranked;
    for (std::size_t c = 0; c < clustering.centroids.size(); ++c) {
        ranked.emplace_back(safe_cosine(clustering.centroids[c], query), c);
    }
    std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
        return a.first != b.first ? a.first > b.first : a.second < b.second;
    });

    std::vector<std::pair<double, std::string>> picks;
    for (const auto& [sim, cluster] : ranked) {
        if (picks.size() == shots) break;
        const std::string* best = nullptr;
        double best_sim = -std::numeric_limits<double>::infinity();
        // assignment iterates ids in ascending order, so strict > keeps the smaller id on ties.
        for (const auto& [id, c] : clustering.assignment) {
            if (c != cluster) continue;
            auto it = candidates.find(id);
            if (it == candidates.end()) continue;
            const double s = safe_cosine(it->second, query);
            if (s > best_sim) {
                best_sim = s;
                best = &id;
            }
        }
        if (best) picks.emplace_back(best_sim, *best);
    }
    if (picks.size() < shots) {
        throw ValidationError("select_exemplars: only " + std::to_string(picks.size()) +
                              " non-empty clusters available for " + std::to_string(shots) + " shots");
    }
    std::sort(picks.begin(), picks.end(), [](const auto& a, const auto& b) {
        return a.first != b.first ? a.first > b.first : a.second < b.second;
    });
    std::vector<std::string> out;
    for (auto& [sim, id] : picks) out.push_back(std::move(id));
    return out;
}

void validate_curated(std::span<const std::string> curated) {
    std::set<std::string_view> seen;
    for (const auto& id : curated) {
        if (!seen.insert(id).second) throw ValidationError("curated exemplar list repeats id '" + id + "'");
    }
}

std::vector<std::string> manual_exemplars(std::span<const std::string> curated, std::size_t shots) {
    validate_curated(curated);
    if (shots == 0) throw ValidationError("few-shot prompting needs at least one exemplar");
    if (shots > curated.size()) {
        throw ValidationError("requested " + std::to_string(shots) + " exemplars but only " +
                              std::to_string(curated.size()) + " are curated");
    }
    return {curated.begin(), curated.begin() + static_cast<std::ptrdiff_t>(shots)};
}

EmbeddingVector stub_embedding(std::string_view text, std::size_t dim) {
    std::mt19937_64 rng(fnv1a(text));
    EmbeddingVector v(dim);
    double sq = 0.0;
    for (double& x : v) {
        x = 2.0 * unit_uniform(rng) - 1.0;
        sq += x * x;
    }
    const double len = std::sqrt(sq);
    for (double& x : v) x /= len;
    return v;
}

EmbeddingTable parse_embeddings(const std::string& text, const std::string& origin) {
    EmbeddingTable table;
    std::istringstream in(text);
    std::string line;
    std::size_t line_no = 0;
    std::size_t dim = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (utf8::trim(line).empty()) continue;
        const std::string where = origin + ":" + std::to_string(line_no);
        const auto rec = nlohmann::json::parse(line, nullptr, false);
        if (rec.is_discarded() || !rec.is_object()) throw ValidationError(where + ": malformed JSON record");
        if (!rec.contains("id") || !rec["id"].is_string()) throw ValidationError(where + ": missing string 'id'");
        if (!rec.contains("vector") || !rec["vector"].is_array() || rec["vector"].empty())
            throw ValidationError(where + ": missing non-empty 'vector'");
        EmbeddingVector v;
        for (const auto& x : rec["vector"]) {
            if (!x.is_number()) throw ValidationError(where + ": non-numeric vector entry");
            const double d = x.get<double>();
            if (!std::isfinite(d)) throw ValidationError(where + ": non-finite vector entry");
            v.push_back(d);
        }
        if (dim == 0) dim = v.size();
        if (v.size() != dim) {
            throw ValidationError(where + ": dimension " + std::to_string(v.size()) + " differs from " +
                                  std::to_string(dim));
        }
        const std::string id = rec["id"].get<std::string>();
        if (!table.emplace(id, std::move(v)).second) throw ValidationError(where + ": duplicate id '" + id + "'");
    }
    return table;
}

EmbeddingTable load_embeddings(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("cannot read embedding file " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_embeddings(buf.str(), path.string());
}

void save_embeddings(const std::filesystem::path& path, const EmbeddingTable& table) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write embedding file " + path.string());
    for (const auto& [id, v] : table) {
        out << nlohmann::json{{"id", id}, {"vector", v}}.dump() << "\n";
    }
}

}  // namespace persum
