#pragma once

#include "etd/encoder.hpp"
#include "etd/kg.hpp"
#include "etd/tensor.hpp"

#include <cstdint>
#include <optional>
#include <vector>

namespace etd {

// Per-step attention rows (1 x d each) and propagation matrix (d x d).
struct StepParams {
    Vec w_head;
    Vec w_rel;
    Vec w_query;
    Vec w_qrel;
    Matrix w_prop;
};

// Two linear layers with one ReLU: logit = w2 . relu(W1 [h;h_q] + b1) + b2.
struct ScorerParams {
    Matrix w1; // d x 2d
    Vec b1;    // d
    Vec w2;    // d
    Vec b2;    // 1
};

struct ExplorerParams {
    int num_steps = 3; // L
    int top_k = 200;   // K, per-head retention budget
    std::vector<StepParams> steps;
    ScorerParams scorer;
};

struct ScoredEdge {
    uint32_t head = 0;
    uint32_t relation = 0;
    uint32_t tail = 0;
    double alpha = 0.0;
    bool retained = false;
};

struct RetainedEdge {
    uint32_t head = 0;
    uint32_t relation = 0;
    uint32_t tail = 0;
    double alpha = 0.0;
};

// Entity -> representation, keyed by sorted entity ids.
struct ReprMap {
    std::vector<uint32_t> entities; // strictly ascending
    std::vector<Vec> reprs;         // parallel

    const Vec* find(uint32_t entity) const;
    std::optional<size_t> index_of(uint32_t entity) const;
    size_t size() const { return entities.size(); }
    bool empty() const { return entities.empty(); }
};

struct StepRecord {
    // Retained edges in canonical (tail, head, relation) ascending order;
    // this is also the message aggregation order.
    std::vector<RetainedEdge> edges;
    size_t considered_edges = 0;      // includes one virtual identity loop per frontier entity
    size_t considered_candidates = 0; // distinct tails before pruning
    size_t frontier_size = 0;         // |pruned candidate set|
};

struct ExplorationResult {
    std::vector<uint32_t> topic_entities;
    std::vector<uint32_t> candidates;  // union over all steps, ascending
    std::vector<double> probabilities; // parallel to candidates, sums to 1
    std::vector<Vec> representations;  // parallel; the latest-step representation
    std::vector<StepRecord> steps;     // executed steps, index 0 = step 1
    bool dead_end = false;

    std::optional<size_t> index_of(uint32_t entity) const;
    // Highest probability, ties to the lower entity id.
    uint32_t argmax_candidate() const;
};

// Edge gate: alpha = sigmoid(w_head.h_s + w_rel.h_r + w_query.h_q + w_qrel.(h_r*h_q)).
double attention_score(const StepParams& step, const Vec& h_head, const Vec& h_rel, const Vec& h_query);

struct EdgeFeatures {
    Vec h_head;
    Vec h_rel;
};

std::vector<double> attention_scores(const StepParams& step, const std::vector<EdgeFeatures>& edges,
                                     const Vec& h_query);

struct ExpandResult {
    std::vector<ScoredEdge> scored;     // per frontier head (ascending), edges in (rel, tail) order, identity last
    std::vector<RetainedEdge> retained; // canonical (tail, head, relation) order
    std::vector<uint32_t> next_entities; // pruned candidate set, ascending
    size_t considered_edges = 0;
    size_t considered_candidates = 0;
};

// One frontier expansion: out-edges of every frontier entity plus a virtual
// identity self-loop per entity, scored with step attention and pruned to the
// per-head top-K (ties: higher alpha, lower relation id, lower tail id).
ExpandResult expand_and_prune(const KnowledgeGraph& kg, const ExplorerParams& params, int step,
                              const ReprMap& frontier, const std::vector<Vec>& relation_embs,
                              const Vec& h_query);

// Message passing over retained edges:
//   h_o = relu(W_prop * sum_{(s,r,o)} alpha * (h_s . h_r))
// Tails with no retained in-edge are absent from the result.
ReprMap propagate(const StepParams& step, const std::vector<RetainedEdge>& retained,
                  const ReprMap& prev, const std::vector<Vec>& relation_embs);

// Softmax over MLP logits; throws DataError when reprs is empty.
std::vector<double> score_candidates(const ScorerParams& scorer, const std::vector<Vec>& reprs,
                                     const Vec& h_query);

ExplorationResult explore(const KnowledgeGraph& kg, const std::vector<Vec>& relation_embs,
                          const ExplorerParams& params, const Vec& h_query,
                          const std::vector<uint32_t>& topic_entities);

// Forward pass with every intermediate needed for the backward pass.
struct QuestionTrace {
    ExplorationResult result;
    Vec h_query;
    std::vector<ReprMap> layer_reprs; // index ell = representations after step ell; [0] = topics at h_q
    std::vector<ReprMap> aggregates;  // index ell-1 = pre-W sums u_o for step ell
    std::vector<int> candidate_layer; // layer whose representation scored each candidate
    std::vector<Vec> scorer_hidden;   // relu(W1 [h;h_q] + b1) per candidate
    std::vector<double> logits;
};

QuestionTrace explore_traced(const KnowledgeGraph& kg, const std::vector<Vec>& relation_embs,
                             const ExplorerParams& params, const Vec& h_query,
                             const std::vector<uint32_t>& topic_entities);

// Convenience wrapper: encodes the question and relation table, then explores.
ExplorationResult explore_question(const KnowledgeGraph& kg, const EmbeddingProvider& provider,
                                   const EncoderParams& encoder, const ExplorerParams& params,
                                   const std::string& question,
                                   const std::vector<uint32_t>& topic_entities);

} // namespace etd
