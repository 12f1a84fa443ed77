// Shared fixtures and independent oracles for the test suite.
#pragma once

#include "etd/encoder.hpp"
#include "etd/explorer.hpp"
#include "etd/kg.hpp"
#include "etd/rng.hpp"
#include "etd/tensor.hpp"
#include "etd/trainer.hpp"

#include <array>
#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

namespace testsupport {

// Deterministic random graph over `entities` nodes and `relations` relation
// names: each entity gets between 1 and max_fanout out-edges with uniformly
// drawn relation and tail (self-loops allowed, duplicates collapsed).
inline std::vector<std::array<std::string, 3>> random_rows(size_t entities, size_t relations,
                                                           size_t max_fanout, uint64_t seed) {
    etd::Rng rng(seed);
    std::set<std::array<std::string, 3>> rows;
    for (size_t e = 0; e < entities; ++e) {
        const size_t fanout = 1 + rng.next_below(max_fanout);
        for (size_t k = 0; k < fanout; ++k) {
            rows.insert({"e" + std::to_string(e), "r" + std::to_string(rng.next_below(relations)),
                         "e" + std::to_string(rng.next_below(entities))});
        }
    }
    return {rows.begin(), rows.end()};
}

// Random unit-ish feature provider: every distinct text maps to a fixed
// pseudo-random vector. Independent of the production hash provider.
class RandomProvider final : public etd::EmbeddingProvider {
public:
    explicit RandomProvider(size_t dim, uint64_t seed = 99) : dim_(dim), seed_(seed) {}

    size_t dim() const override { return dim_; }

    etd::Vec encode(const std::string& text) const override {
        etd::Rng rng(etd::fnv1a64(text) ^ seed_);
        etd::Vec v(dim_);
        for (double& x : v) x = rng.uniform(-1.0, 1.0);
        return v;
    }

private:
    size_t dim_;
    uint64_t seed_;
};

// Exhaustive reference explorer: no pruning (every edge plus the identity
// loop is retained), dense per-layer maps, straightforward loops. Written
// against the propagation and scoring formulas directly, not the production
// data structures.
struct ReferenceResult {
    std::vector<uint32_t> candidates;              // ascending
    std::vector<etd::Vec> representations;         // parallel to candidates, latest layer
    std::vector<double> probabilities;             // parallel to candidates
    std::vector<std::map<uint32_t, etd::Vec>> layers; // layer 0 = topics
};

inline ReferenceResult reference_explore(const etd::KnowledgeGraph& kg,
                                         const std::vector<etd::Vec>& relation_embs,
                                         const etd::ExplorerParams& params, const etd::Vec& h_q,
                                         const std::vector<uint32_t>& topics) {
    ReferenceResult out;
    std::map<uint32_t, etd::Vec> frontier;
    for (uint32_t t : topics) frontier[t] = h_q;
    out.layers.push_back(frontier);

    std::map<uint32_t, int> last_layer; // candidate -> latest layer seen
    std::map<uint32_t, etd::Vec> last_repr;
    for (const auto& [t, h] : frontier) {
        last_layer[t] = 0;
        last_repr[t] = h;
    }

    for (int step = 0; step < params.num_steps; ++step) {
        const etd::StepParams& sp = params.steps[step];
        std::map<uint32_t, etd::Vec> sums; // tail -> sum of alpha * (h_s . h_r)
        for (const auto& [head, h_s] : frontier) {
            auto handle_edge = [&](uint32_t rel, uint32_t tail) {
                const etd::Vec& h_r = relation_embs[rel];
                const double alpha = etd::attention_score(sp, h_s, h_r, h_q);
                etd::Vec msg = etd::hadamard(h_s, h_r);
                auto [it, fresh] = sums.emplace(tail, etd::Vec(h_s.size(), 0.0));
                (void)fresh;
                etd::axpy(alpha, msg, it->second);
            };
            for (const etd::EdgeTarget& e : kg.out_edges(head)) handle_edge(e.relation, e.tail);
            handle_edge(kg.identity_relation(), head);
        }
        std::map<uint32_t, etd::Vec> next;
        for (const auto& [tail, u] : sums) {
            next[tail] = etd::relu(etd::matvec(sp.w_prop, u));
        }
        frontier = next;
        for (const auto& [tail, h] : frontier) {
            last_layer[tail] = step + 1;
            last_repr[tail] = h;
        }
        if (frontier.empty()) break;
    }

    for (const auto& [c, h] : last_repr) {
        out.candidates.push_back(c);
        out.representations.push_back(h);
    }
    // Scorer: relu(W1 [h;h_q] + b1), then w2.hidden + b2.
    std::vector<double> logits;
    for (const etd::Vec& h : out.representations) {
        etd::Vec pre = etd::matvec(params.scorer.w1, etd::concat(h, h_q));
        for (size_t i = 0; i < pre.size(); ++i) pre[i] += params.scorer.b1[i];
        const etd::Vec hidden = etd::relu(pre);
        logits.push_back(etd::dot(params.scorer.w2, hidden) + params.scorer.b2[0]);
    }
    out.probabilities = etd::softmax(logits);
    return out;
}

} // namespace testsupport
