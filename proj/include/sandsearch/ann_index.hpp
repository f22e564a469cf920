#pragma once

#include <algorithm>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <numeric>
#include <random>
#include <span>
#include <string>
#include <unordered_set>
#include <vector>

#include "sandsearch/embedding.hpp"
#include "sandsearch/util.hpp"

namespace sandsearch {

struct BuildParams {
    std::uint32_t max_degree = 32;   // R
    std::uint32_t l_build = 100;     // candidate width during construction
    float alpha = 1.2f;              // prune slack, >= 1
    std::uint64_t seed = 42;         // drives the initial random graph and insertion order
};

// K results requested, L candidate-list width explored. L >= K by definition.
struct SearchParams {
    std::uint32_t k = 10;
    std::uint32_t l = 50;
};

struct Hit {
    std::string doc_id;
    double score = 0.0;
};

inline bool hit_before(const Hit& a, const Hit& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.doc_id < b.doc_id;
}

// Immutable graph index over one shard. Search walks the adjacency from the
// medoid entry point keeping a candidate list of width L; scores are inner
// products of unit vectors.
class ShardIndex {
public:
    ShardIndex() = default;

    std::uint32_t dims() const { return dims_; }
    std::uint32_t count() const { return static_cast<std::uint32_t>(ids_.size()); }
    std::uint32_t entry_point() const { return entry_point_; }
    const BuildParams& build_params() const { return params_; }
    const std::vector<std::string>& ids() const { return ids_; }
    const std::vector<std::uint32_t>& neighbors_of(std::uint32_t node) const {
        return adjacency_[node];
    }
    std::span<const float> vector_of(std::uint32_t node) const {
        return {vectors_.data() + static_cast<std::size_t>(node) * dims_, dims_};
    }

    friend ShardIndex build_shard(const std::vector<Embedding>& vectors,
                                  const std::vector<std::string>& ids, const BuildParams& params);
    friend void save_index(const ShardIndex& index, const std::string& path);
    friend ShardIndex load_index(const std::string& path);

private:
    std::uint32_t dims_ = 0;
    std::uint32_t entry_point_ = 0;
    BuildParams params_;
    std::vector<float> vectors_;  // count * dims, row-major
    std::vector<std::string> ids_;
    std::vector<std::vector<std::uint32_t>> adjacency_;
};

namespace detail {

// Candidate pool for greedy search: sorted by score descending, node index
// ascending on ties, truncated to capacity.
struct Candidate {
    double score;
    std::uint32_t node;
    bool expanded = false;
};

inline bool candidate_before(const Candidate& a, const Candidate& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.node < b.node;
}

struct GreedyResult {
    std::vector<Candidate> pool;          // best L seen, sorted
    std::vector<std::uint32_t> expanded;  // nodes whose neighborhoods were explored
};

// Beam search over the graph. Expands the best unexpanded candidate until the
// pool is stable, keeping at most L candidates.
inline GreedyResult greedy_search(const ShardIndex& index, std::span<const float> query,
                                  std::uint32_t l, std::vector<std::uint8_t>& seen_scratch) {
    GreedyResult result;
    auto& pool = result.pool;
    pool.reserve(l + 1);

    std::fill(seen_scratch.begin(), seen_scratch.end(), 0);
    auto push = [&](std::uint32_t node) {
        if (seen_scratch[node]) return;
        seen_scratch[node] = 1;
        Candidate c{dot(query, index.vector_of(node)), node, false};
        auto it = std::lower_bound(pool.begin(), pool.end(), c, candidate_before);
        if (static_cast<std::uint32_t>(it - pool.begin()) >= l) return;
        pool.insert(it, c);
        if (pool.size() > l) pool.pop_back();
    };

    push(index.entry_point());
    while (true) {
        auto next = std::find_if(pool.begin(), pool.end(),
                                 [](const Candidate& c) { return !c.expanded; });
        if (next == pool.end()) break;
        next->expanded = true;
        const std::uint32_t node = next->node;
        result.expanded.push_back(node);
        for (std::uint32_t nb : index.neighbors_of(node)) push(nb);
    }
    return result;
}

// Vamana robust prune: greedily keep the closest candidate, then drop any
// candidate that is alpha-closer to an already kept neighbor than to the node.
inline void robust_prune(ShardIndex& /*unused*/, std::uint32_t, float) = delete;

}  // namespace detail

inline std::vector<Hit> finalize_hits(std::vector<Hit> hits, std::size_t k) {
    std::sort(hits.begin(), hits.end(), hit_before);
    if (hits.size() > k) hits.resize(k);
    return hits;
}

// True top-K by inner product over the raw vectors; the exact-search reference
// that approximate results are scored against.
inline std::vector<Hit> exact_search(const std::vector<Embedding>& vectors,
                                     const std::vector<std::string>& ids,
                                     std::span<const float> query, std::size_t k) {
    if (k < 1) throw ContractError("exact_search: k must be >= 1");
    if (vectors.size() != ids.size()) throw ContractError("exact_search: vectors/ids length mismatch");
    std::vector<Hit> hits;
    hits.reserve(vectors.size());
    for (std::size_t i = 0; i < vectors.size(); ++i) {
        hits.push_back(Hit{ids[i], dot(query, vectors[i])});
    }
    return finalize_hits(std::move(hits), k);
}

inline std::vector<Hit> search_shard(const ShardIndex& index, std::span<const float> query,
                                     const SearchParams& params) {
    if (params.k < 1) throw ContractError("search_shard: k must be >= 1");
    if (params.l < params.k) throw ContractError("search_shard: L must be >= K");
    if (query.size() != index.dims()) throw ContractError("search_shard: query dimension mismatch");

    std::vector<std::uint8_t> seen(index.count(), 0);
    auto result = detail::greedy_search(index, query, params.l, seen);

    std::vector<Hit> hits;
    hits.reserve(result.pool.size());
    for (const auto& c : result.pool) hits.push_back(Hit{index.ids()[c.node], c.score});
    return finalize_hits(std::move(hits), params.k);
}

// Overlap of the approximate top-n with the exact top-n, normalized by
// min(n, |exact|).
inline double ann_recall(const std::vector<Hit>& approx, const std::vector<Hit>& exact,
                         std::size_t n) {
    if (n < 1) throw ContractError("ann_recall: n must be >= 1");
    const std::size_t denom = std::min(n, exact.size());
    if (denom == 0) return 0.0;
    std::unordered_set<std::string> exact_top;
    for (std::size_t i = 0; i < std::min(n, exact.size()); ++i) exact_top.insert(exact[i].doc_id);
    std::size_t overlap = 0;
    for (std::size_t i = 0; i < std::min(n, approx.size()); ++i) {
        overlap += exact_top.count(approx[i].doc_id);
    }
    return static_cast<double>(overlap) / static_cast<double>(denom);
}

// Builds the graph Vamana-style: random initial R-regular graph, two passes of
// greedy-search + robust-prune (first pass with alpha = 1, second with the
// configured slack), backward edges re-pruned when they overflow the degree
// bound. Entry point is the medoid. Single-threaded; deterministic for a fixed
// seed.
inline ShardIndex build_shard(const std::vector<Embedding>& vectors,
                              const std::vector<std::string>& ids, const BuildParams& params) {
    if (vectors.empty()) throw ContractError("build_shard: at least one vector required");
    if (vectors.size() != ids.size()) throw ContractError("build_shard: vectors/ids length mismatch");
    if (params.alpha < 1.0f) throw ContractError("build_shard: alpha must be >= 1");
    const std::uint32_t n = static_cast<std::uint32_t>(vectors.size());
    const std::uint32_t dims = static_cast<std::uint32_t>(vectors[0].size());
    for (const auto& v : vectors) {
        if (v.size() != dims) throw ContractError("build_shard: dimension mismatch");
    }
    {
        std::unordered_set<std::string> unique(ids.begin(), ids.end());
        if (unique.size() != ids.size()) throw ContractError("build_shard: ids must be unique");
    }

    ShardIndex index;
    index.dims_ = dims;
    index.params_ = params;
    index.ids_ = ids;
    index.vectors_.resize(static_cast<std::size_t>(n) * dims);
    for (std::uint32_t i = 0; i < n; ++i) {
        std::memcpy(index.vectors_.data() + static_cast<std::size_t>(i) * dims, vectors[i].data(),
                    dims * sizeof(float));
    }

    // Medoid: the point closest to the centroid. For unit vectors that is the
    // argmax inner product with the centroid.
    {
        std::vector<double> centroid(dims, 0.0);
        for (std::uint32_t i = 0; i < n; ++i) {
            auto v = index.vector_of(i);
            for (std::uint32_t d = 0; d < dims; ++d) centroid[d] += v[d];
        }
        std::uint32_t best = 0;
        double best_score = -1e300;
        for (std::uint32_t i = 0; i < n; ++i) {
            auto v = index.vector_of(i);
            double s = 0.0;
            for (std::uint32_t d = 0; d < dims; ++d) s += centroid[d] * v[d];
            if (s > best_score) {
                best_score = s;
                best = i;
            }
        }
        index.entry_point_ = best;
    }

    const std::uint32_t degree = std::min<std::uint32_t>(params.max_degree, n - 1);
    index.adjacency_.assign(n, {});
    std::mt19937_64 rng(params.seed);

    if (n == 1) return index;

    // Random initial graph.
    for (std::uint32_t i = 0; i < n; ++i) {
        std::unordered_set<std::uint32_t> picked;
        auto& nbrs = index.adjacency_[i];
        while (nbrs.size() < degree) {
            const std::uint32_t cand = static_cast<std::uint32_t>(rng() % n);
            if (cand == i || picked.count(cand)) continue;
            picked.insert(cand);
            nbrs.push_back(cand);
        }
    }

    const auto cosine_dist = [&](std::uint32_t a, std::uint32_t b) {
        return 1.0 - dot(index.vector_of(a), index.vector_of(b));
    };
    const auto dist_to = [&](std::uint32_t node, std::span<const float> q) {
        return 1.0 - dot(q, index.vector_of(node));
    };

    // RobustPrune(p, V, alpha): returns the new out-neighborhood of p.
    const auto prune = [&](std::uint32_t p, std::vector<std::uint32_t> candidates, float alpha) {
        auto q = index.vector_of(p);
        std::sort(candidates.begin(), candidates.end());
        candidates.erase(std::unique(candidates.begin(), candidates.end()), candidates.end());
        std::erase(candidates, p);

        std::vector<std::pair<double, std::uint32_t>> pool;
        pool.reserve(candidates.size());
        for (std::uint32_t c : candidates) pool.emplace_back(dist_to(c, q), c);
        std::sort(pool.begin(), pool.end());

        std::vector<std::uint32_t> result;
        std::vector<std::uint8_t> pruned(pool.size(), 0);
        for (std::size_t i = 0; i < pool.size() && result.size() < degree; ++i) {
            if (pruned[i]) continue;
            const std::uint32_t star = pool[i].second;
            result.push_back(star);
            for (std::size_t j = i + 1; j < pool.size(); ++j) {
                if (pruned[j]) continue;
                if (static_cast<double>(alpha) * cosine_dist(star, pool[j].second) <= pool[j].first) {
                    pruned[j] = 1;
                }
            }
        }
        return result;
    };

    std::vector<std::uint32_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::vector<std::uint8_t> seen(n, 0);

    for (int pass = 0; pass < 2; ++pass) {
        const float alpha = pass == 0 ? 1.0f : params.alpha;
        std::shuffle(order.begin(), order.end(), rng);
        for (std::uint32_t node : order) {
            auto greedy = detail::greedy_search(index, index.vector_of(node), params.l_build, seen);

            std::vector<std::uint32_t> candidates = std::move(greedy.expanded);
            candidates.insert(candidates.end(), index.adjacency_[node].begin(),
                              index.adjacency_[node].end());
            index.adjacency_[node] = prune(node, std::move(candidates), alpha);

            for (std::uint32_t nb : index.adjacency_[node]) {
                auto& back = index.adjacency_[nb];
                if (std::find(back.begin(), back.end(), node) != back.end()) continue;
                back.push_back(node);
                if (back.size() > degree) {
                    index.adjacency_[nb] = prune(nb, back, alpha);
                }
            }
        }
    }
    return index;
}

// Versioned binary container, little-endian:
//   magic "SSIX" | u32 version | u32 dims | u64 count | u32 R | u32 L_build |
//   f32 alpha | u64 seed | u32 entry | vectors f32[count*dims] |
//   per id: u32 len + bytes | per node: u32 degree + u32[degree]
inline void save_index(const ShardIndex& index, const std::string& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write index file: " + path);
    auto put = [&](const void* p, std::size_t len) {
        out.write(static_cast<const char*>(p), static_cast<std::streamsize>(len));
    };
    auto put_u32 = [&](std::uint32_t v) { put(&v, 4); };
    auto put_u64 = [&](std::uint64_t v) { put(&v, 8); };

    out.write("SSIX", 4);
    put_u32(1);
    put_u32(index.dims_);
    put_u64(index.ids_.size());
    put_u32(index.params_.max_degree);
    put_u32(index.params_.l_build);
    put(&index.params_.alpha, 4);
    put_u64(index.params_.seed);
    put_u32(index.entry_point_);
    put(index.vectors_.data(), index.vectors_.size() * sizeof(float));
    for (const auto& id : index.ids_) {
        put_u32(static_cast<std::uint32_t>(id.size()));
        put(id.data(), id.size());
    }
    for (const auto& nbrs : index.adjacency_) {
        put_u32(static_cast<std::uint32_t>(nbrs.size()));
        put(nbrs.data(), nbrs.size() * sizeof(std::uint32_t));
    }
    if (!out) throw std::runtime_error("short write to index file: " + path);
}

inline ShardIndex load_index(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("cannot open index file: " + path);
    auto get = [&](void* p, std::size_t len) {
        in.read(static_cast<char*>(p), static_cast<std::streamsize>(len));
        if (!in) throw ParseError("truncated index file: " + path);
    };
    auto get_u32 = [&] {
        std::uint32_t v;
        get(&v, 4);
        return v;
    };
    auto get_u64 = [&] {
        std::uint64_t v;
        get(&v, 8);
        return v;
    };

    char magic[4];
    get(magic, 4);
    if (std::memcmp(magic, "SSIX", 4) != 0) throw ParseError("bad index magic in " + path);
    if (get_u32() != 1) throw ParseError("unsupported index version in " + path);

    ShardIndex index;
    index.dims_ = get_u32();
    const std::uint64_t count = get_u64();
    index.params_.max_degree = get_u32();
    index.params_.l_build = get_u32();
    get(&index.params_.alpha, 4);
    index.params_.seed = get_u64();
    index.entry_point_ = get_u32();
    index.vectors_.resize(count * index.dims_);
    get(index.vectors_.data(), index.vectors_.size() * sizeof(float));
    index.ids_.resize(count);
    for (auto& id : index.ids_) {
        id.resize(get_u32());
        if (!id.empty()) get(id.data(), id.size());
    }
    index.adjacency_.resize(count);
    for (auto& nbrs : index.adjacency_) {
        nbrs.resize(get_u32());
        if (!nbrs.empty()) get(nbrs.data(), nbrs.size() * sizeof(std::uint32_t));
    }
    if (index.entry_point_ >= count && count > 0) throw ParseError("entry point out of range");
    return index;
}

}  // namespace sandsearch
