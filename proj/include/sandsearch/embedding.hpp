#pragma once

#include <cmath>
#include <cstdint>
#include <future>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "sandsearch/util.hpp"

namespace sandsearch {

using Embedding = std::vector<float>;

enum class EmbedRole { kQuery, kDocument };

inline const char* role_name(EmbedRole role) {
    return role == EmbedRole::kQuery ? "query" : "document";
}

// Scales to unit Euclidean norm. Accumulates in double with a fixed order so the
// result is reproducible. All similarity downstream is the inner product of
// unit vectors, i.e. cosine, bounded in [-1, 1].
inline void normalize(Embedding& v) {
    double sum = 0.0;
    for (float x : v) {
        if (!std::isfinite(x)) throw ContractError("embedding contains non-finite value");
        sum += static_cast<double>(x) * static_cast<double>(x);
    }
    if (sum == 0.0) throw ContractError("cannot normalize zero vector");
    const double norm = std::sqrt(sum);
    for (float& x : v) x = static_cast<float>(static_cast<double>(x) / norm);
}

inline double dot(std::span<const float> a, std::span<const float> b) {
    if (a.size() != b.size()) throw ContractError("dimension mismatch in dot product");
    double sum = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        sum += static_cast<double>(a[i]) * static_cast<double>(b[i]);
    }
    return sum;
}

// Deterministic test-double embedding: seeds mt19937_64 with a stable hash of
// the text, draws uniform values, normalizes. Uses only integer PRNG output and
// IEEE sqrt/divide, so the result is bit-identical across runs and platforms.
inline Embedding mock_embed(std::string_view text, std::uint32_t dims) {
    if (dims < 2) throw ContractError("mock_embed requires dims >= 2");
    std::mt19937_64 rng(fnv1a64(text));
    Embedding v(dims);
    for (std::uint32_t i = 0; i < dims; ++i) {
        // top 53 bits -> [0,1), mapped to [-1,1)
        const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
        v[i] = static_cast<float>(u * 2.0 - 1.0);
    }
    normalize(v);
    return v;
}

struct EmbeddingBackendConfig {
    std::string endpoint;              // e.g. http://host:port (OpenAI-compatible /v1/embeddings)
    std::string model = "mock";
    std::uint32_t dims = 1024;
    std::uint32_t batch_size = 16;
    int timeout_s = 30;
    int max_retries = 2;
    int parallelism = 4;               // in-flight batches
    std::string api_key_env = "EMBEDDING_API_KEY";
    std::size_t max_chars = 8000;      // document texts are truncated to this before embedding
};

// Pluggable embedding backend. Output order matches input order; every vector
// is unit-norm with the configured dimension.
class Embedder {
public:
    virtual ~Embedder() = default;
    virtual std::uint32_t dims() const = 0;
    virtual std::vector<Embedding> embed(std::span<const std::string> texts, EmbedRole role) = 0;

    Embedding embed_one(const std::string& text, EmbedRole role) {
        std::vector<std::string> batch{text};
        return embed(batch, role)[0];
    }
};

// Deterministic in-process backend for tests and offline runs. Ignores the role
// flag; the interface keeps it because instruction-tuned embedders distinguish
// query and document inputs.
class MockEmbedder final : public Embedder {
public:
    explicit MockEmbedder(std::uint32_t dims) : dims_(dims) {}

    std::uint32_t dims() const override { return dims_; }

    std::vector<Embedding> embed(std::span<const std::string> texts, EmbedRole) override {
        if (texts.empty()) throw ContractError("embed: texts must be non-empty");
        std::vector<Embedding> out;
        out.reserve(texts.size());
        for (const auto& t : texts) {
            if (trim(t).empty()) throw ContractError("embed: text empty after trim");
            out.push_back(mock_embed(t, dims_));
        }
        return out;
    }

private:
    std::uint32_t dims_;
};

}  // namespace sandsearch
