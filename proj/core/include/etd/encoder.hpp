#pragma once

#include "etd/kg.hpp"
#include "etd/tensor.hpp"

#include <cstdint>
#include <memory>
#include <string>
#include <unordered_map>
#include <vector>

namespace etd {

// Raw text embeddings (dimension d_L) come from a pluggable, frozen provider.
class EmbeddingProvider {
public:
    virtual ~EmbeddingProvider() = default;
    virtual size_t dim() const = 0;
    // Deterministic, pure. Throws std::invalid_argument if text is empty
    // after trimming.
    virtual Vec encode(const std::string& text) const = 0;
};

// Seed is part of the reproducibility contract across machines.
inline constexpr uint64_t kHashProviderSeed = 0x9e3779b97f4a7c15ull;

// Bag-of-tokens feature hashing: lowercase, split on whitespace, hash each
// token into one of d_L buckets with a +/-1 sign, L2-normalize the sum.
class HashEmbeddingProvider final : public EmbeddingProvider {
public:
    explicit HashEmbeddingProvider(size_t dim = 512, uint64_t seed = kHashProviderSeed)
        : dim_(dim), seed_(seed) {}

    size_t dim() const override { return dim_; }
    Vec encode(const std::string& text) const override;

private:
    size_t dim_;
    uint64_t seed_;
};

// Exact-text lookup over a fixture file:
//   d_L=<n>
//   <text><TAB><space-separated floats>
class FileEmbeddingProvider final : public EmbeddingProvider {
public:
    static FileEmbeddingProvider load(const std::string& path);

    size_t dim() const override { return dim_; }
    Vec encode(const std::string& text) const override;

private:
    size_t dim_ = 0;
    std::unordered_map<std::string, Vec> table_;
};

std::unique_ptr<EmbeddingProvider> make_provider(const std::string& kind, size_t hash_dim,
                                                 const std::string& file_path);

// Learnable encoder parameters: projection to the working dimension d,
// reverse-relation map, and the identity-relation vector.
struct EncoderParams {
    Matrix w_proj;    // d x d_L
    Matrix w_reverse; // d x d
    Vec b_reverse;    // d
    Vec h_identity;   // d

    size_t working_dim() const { return w_proj.rows; }
    size_t raw_dim() const { return w_proj.cols; }
};

// h = W_proj * raw (no bias)
Vec project(const EncoderParams& params, const Vec& raw);

// Raw d_L vectors for every base relation name, computed once per graph.
struct KgTextFeatures {
    std::vector<Vec> raw_relations;
};

KgTextFeatures collect_relation_features(const EmbeddingProvider& provider, const KnowledgeGraph& kg);

// Working-dimension embeddings for the full augmented relation vocabulary:
// [0,R) projected base, [R,2R) reverse map of base, [2R] identity.
std::vector<Vec> encode_relations(const EncoderParams& params, const KgTextFeatures& features);

// Single-relation variant of encode_relations.
Vec relation_embedding(const EncoderParams& params, const KnowledgeGraph& kg,
                       const EmbeddingProvider& provider, uint32_t rel);

} // namespace etd
