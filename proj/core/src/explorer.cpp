#include "etd/explorer.hpp"

#include "etd/errors.hpp"

#include <algorithm>
#include <cassert>
#include <numeric>

namespace etd {

const Vec* ReprMap::find(uint32_t entity) const {
    auto it = std::lower_bound(entities.begin(), entities.end(), entity);
    if (it == entities.end() || *it != entity) return nullptr;
    return &reprs[static_cast<size_t>(it - entities.begin())];
}

std::optional<size_t> ReprMap::index_of(uint32_t entity) const {
    auto it = std::lower_bound(entities.begin(), entities.end(), entity);
    if (it == entities.end() || *it != entity) return std::nullopt;
    return static_cast<size_t>(it - entities.begin());
}

std::optional<size_t> ExplorationResult::index_of(uint32_t entity) const {
    auto it = std::lower_bound(candidates.begin(), candidates.end(), entity);
    if (it == candidates.end() || *it != entity) return std::nullopt;
    return static_cast<size_t>(it - candidates.begin());
}

uint32_t ExplorationResult::argmax_candidate() const {
    if (candidates.empty()) throw DataError("argmax over empty candidate set");
    size_t best = 0;
    for (size_t i = 1; i < candidates.size(); ++i) {
        if (probabilities[i] > probabilities[best]) best = i;
    }
    return candidates[best];
}

double attention_score(const StepParams& step, const Vec& h_head, const Vec& h_rel, const Vec& h_query) {
    const double s_head = dot(step.w_head, h_head);
    const double s_rel = dot(step.w_rel, h_rel);
    const double s_query = dot(step.w_query, h_query);
    const double s_qrel = dot(step.w_qrel, hadamard(h_rel, h_query));
    // Summation order matches the cached path in expand_and_prune.
    return sigmoid(((s_head + s_rel) + s_query) + s_qrel);
}

std::vector<double> attention_scores(const StepParams& step, const std::vector<EdgeFeatures>& edges,
                                     const Vec& h_query) {
    std::vector<double> out;
    out.reserve(edges.size());
    for (const EdgeFeatures& e : edges) out.push_back(attention_score(step, e.h_head, e.h_rel, h_query));
    return out;
}

namespace {

const StepParams& step_params(const ExplorerParams& params, int step) {
    if (step < 1 || step > params.num_steps || static_cast<size_t>(params.num_steps) != params.steps.size()) {
        throw std::invalid_argument("step index out of range");
    }
    return params.steps[static_cast<size_t>(step - 1)];
}

// Per-relation attention scalars, computed lazily: s_rel and s_qrel for each
// augmented relation id actually touched.
class RelationScalars {
public:
    RelationScalars(const StepParams& step, const std::vector<Vec>& relation_embs, const Vec& h_query)
        : step_(step), embs_(relation_embs), h_query_(h_query),
          s_rel_(relation_embs.size(), 0.0), s_qrel_(relation_embs.size(), 0.0),
          ready_(relation_embs.size(), false) {}

    void fetch(uint32_t rel, double& s_rel, double& s_qrel) {
        if (!ready_[rel]) {
            s_rel_[rel] = dot(step_.w_rel, embs_[rel]);
            s_qrel_[rel] = dot(step_.w_qrel, hadamard(embs_[rel], h_query_));
            ready_[rel] = true;
        }
        s_rel = s_rel_[rel];
        s_qrel = s_qrel_[rel];
    }

private:
    const StepParams& step_;
    const std::vector<Vec>& embs_;
    const Vec& h_query_;
    std::vector<double> s_rel_;
    std::vector<double> s_qrel_;
    std::vector<bool> ready_;
};

bool canonical_less(const RetainedEdge& a, const RetainedEdge& b) {
    if (a.tail != b.tail) return a.tail < b.tail;
    if (a.head != b.head) return a.head < b.head;
    return a.relation < b.relation;
}

} // namespace

ExpandResult expand_and_prune(const KnowledgeGraph& kg, const ExplorerParams& params, int step,
                              const ReprMap& frontier, const std::vector<Vec>& relation_embs,
                              const Vec& h_query) {
    const StepParams& sp = step_params(params, step);
    if (params.top_k < 1) throw std::invalid_argument("top_k must be >= 1");
    if (relation_embs.size() != kg.augmented_relation_count()) {
        throw std::invalid_argument("relation embedding table does not cover the augmented vocabulary");
    }

    ExpandResult out;
    if (frontier.empty()) return out;

    RelationScalars rel_scalars(sp, relation_embs, h_query);
    const double s_query = dot(sp.w_query, h_query);
    const uint32_t identity = kg.identity_relation();
    const size_t budget = static_cast<size_t>(params.top_k);

    std::vector<size_t> order; // scratch for per-head top-K
    for (size_t fi = 0; fi < frontier.size(); ++fi) {
        const uint32_t head = frontier.entities[fi];
        const double s_head = dot(sp.w_head, frontier.reprs[fi]);

        const size_t begin = out.scored.size();
        auto edges = kg.out_edges(head);
        for (const EdgeTarget& e : edges) {
            double s_rel = 0.0, s_qrel = 0.0;
            rel_scalars.fetch(e.relation, s_rel, s_qrel);
            const double alpha = sigmoid(((s_head + s_rel) + s_query) + s_qrel);
            out.scored.push_back({head, e.relation, e.tail, alpha, false});
        }
        {
            double s_rel = 0.0, s_qrel = 0.0;
            rel_scalars.fetch(identity, s_rel, s_qrel);
            const double alpha = sigmoid(((s_head + s_rel) + s_query) + s_qrel);
            out.scored.push_back({head, identity, head, alpha, false});
        }
        const size_t end = out.scored.size();

        // Top-K inside [begin, end): stable sort keeps the (relation, tail)
        // ascending order among equal alphas, which is the documented
        // tie-break (identity sorts last, having the largest relation id).
        order.resize(end - begin);
        std::iota(order.begin(), order.end(), begin);
        std::stable_sort(order.begin(), order.end(), [&](size_t a, size_t b) {
            return out.scored[a].alpha > out.scored[b].alpha;
        });
        const size_t keep = std::min(budget, order.size());
        for (size_t k = 0; k < keep; ++k) out.scored[order[k]].retained = true;
    }

    out.considered_edges = out.scored.size();
    std::vector<uint32_t> tails;
    tails.reserve(out.scored.size());
    for (const ScoredEdge& e : out.scored) tails.push_back(e.tail);
    std::sort(tails.begin(), tails.end());
    tails.erase(std::unique(tails.begin(), tails.end()), tails.end());
    out.considered_candidates = tails.size();

    for (const ScoredEdge& e : out.scored) {
        if (e.retained) out.retained.push_back({e.head, e.relation, e.tail, e.alpha});
    }
    std::sort(out.retained.begin(), out.retained.end(), canonical_less);

    out.next_entities.reserve(out.retained.size());
    for (const RetainedEdge& e : out.retained) out.next_entities.push_back(e.tail);
    std::sort(out.next_entities.begin(), out.next_entities.end());
    out.next_entities.erase(std::unique(out.next_entities.begin(), out.next_entities.end()),
                            out.next_entities.end());
    return out;
}

namespace {

// Shared by propagate and the traced forward pass.
void propagate_impl(const StepParams& step, const std::vector<RetainedEdge>& retained,
                    const ReprMap& prev, const std::vector<Vec>& relation_embs, ReprMap& out,
                    ReprMap* aggregates) {
    const size_t d = step.w_prop.rows;

    out.entities.clear();
    out.reprs.clear();
    if (aggregates) {
        aggregates->entities.clear();
        aggregates->reprs.clear();
    }
    if (retained.empty()) return;

    // Retained edges arrive in canonical (tail, head, relation) order, so
    // messages for one tail are contiguous and the summation order is fixed.
    Vec acc(d, 0.0);
    uint32_t current_tail = retained.front().tail;
    auto flush = [&](uint32_t tail) {
        out.entities.push_back(tail);
        out.reprs.push_back(relu(matvec(step.w_prop, acc)));
        if (aggregates) {
            aggregates->entities.push_back(tail);
            aggregates->reprs.push_back(acc);
        }
        std::fill(acc.begin(), acc.end(), 0.0);
    };

    for (size_t i = 0; i < retained.size(); ++i) {
        const RetainedEdge& e = retained[i];
        if (i > 0 && e.tail != current_tail) {
            if (e.tail < current_tail) throw std::invalid_argument("retained edges not in canonical order");
            flush(current_tail);
            current_tail = e.tail;
        }
        const Vec* h_s = prev.find(e.head);
        if (!h_s) throw std::invalid_argument("retained edge head has no previous representation");
        if (e.relation >= relation_embs.size()) throw std::invalid_argument("relation id out of range");
        const Vec& h_r = relation_embs[e.relation];
        check_dim(h_s->size() == d && h_r.size() == d, "propagate message");
        for (size_t j = 0; j < d; ++j) acc[j] += e.alpha * ((*h_s)[j] * h_r[j]);
        current_tail = e.tail;
    }
    flush(current_tail);
}

} // namespace

ReprMap propagate(const StepParams& step, const std::vector<RetainedEdge>& retained, const ReprMap& prev,
                  const std::vector<Vec>& relation_embs) {
    ReprMap out;
    propagate_impl(step, retained, prev, relation_embs, out, nullptr);
    return out;
}

std::vector<double> score_candidates(const ScorerParams& scorer, const std::vector<Vec>& reprs,
                                     const Vec& h_query) {
    if (reprs.empty()) throw DataError("score_candidates: empty candidate set");
    std::vector<double> logits;
    logits.reserve(reprs.size());
    for (const Vec& h : reprs) {
        Vec hidden = matvec(scorer.w1, concat(h, h_query));
        axpy(1.0, scorer.b1, hidden);
        hidden = relu(hidden);
        logits.push_back(dot(scorer.w2, hidden) + scorer.b2.at(0));
    }
    return softmax(logits);
}

QuestionTrace explore_traced(const KnowledgeGraph& kg, const std::vector<Vec>& relation_embs,
                             const ExplorerParams& params, const Vec& h_query,
                             const std::vector<uint32_t>& topic_entities) {
    if (topic_entities.empty()) throw std::invalid_argument("explore: no topic entities");
    if (params.num_steps < 1) throw std::invalid_argument("explore: num_steps must be >= 1");
    if (params.steps.size() != static_cast<size_t>(params.num_steps)) {
        throw std::invalid_argument("explore: step parameter count does not match num_steps");
    }
    for (uint32_t e : topic_entities) {
        if (e >= kg.entity_count()) throw std::invalid_argument("explore: topic entity id out of range");
    }

    QuestionTrace trace;
    trace.h_query = h_query;

    std::vector<uint32_t> topics = topic_entities;
    std::sort(topics.begin(), topics.end());
    topics.erase(std::unique(topics.begin(), topics.end()), topics.end());
    trace.result.topic_entities = topics;

    ReprMap layer0;
    layer0.entities = topics;
    layer0.reprs.assign(topics.size(), h_query);
    trace.layer_reprs.push_back(std::move(layer0));

    for (int step = 1; step <= params.num_steps; ++step) {
        const ReprMap& frontier = trace.layer_reprs.back();
        if (frontier.empty()) {
            trace.result.dead_end = true;
            break;
        }
        ExpandResult expanded = expand_and_prune(kg, params, step, frontier, relation_embs, h_query);
        if (expanded.retained.empty()) {
            trace.result.dead_end = true;
            break;
        }

        ReprMap next, aggregates;
        propagate_impl(step_params(params, step), expanded.retained, frontier, relation_embs, next,
                       &aggregates);

        StepRecord record;
        record.edges = std::move(expanded.retained);
        record.considered_edges = expanded.considered_edges;
        record.considered_candidates = expanded.considered_candidates;
        record.frontier_size = next.size();
        trace.result.steps.push_back(std::move(record));
        trace.aggregates.push_back(std::move(aggregates));
        trace.layer_reprs.push_back(std::move(next));
    }

    // Union over all layers; each candidate scored with its latest representation.
    std::vector<uint32_t> candidates;
    for (const ReprMap& layer : trace.layer_reprs) {
        candidates.insert(candidates.end(), layer.entities.begin(), layer.entities.end());
    }
    std::sort(candidates.begin(), candidates.end());
    candidates.erase(std::unique(candidates.begin(), candidates.end()), candidates.end());

    trace.result.candidates = candidates;
    trace.result.representations.reserve(candidates.size());
    trace.candidate_layer.reserve(candidates.size());
    for (uint32_t c : candidates) {
        int found_layer = -1;
        for (int layer = static_cast<int>(trace.layer_reprs.size()) - 1; layer >= 0; --layer) {
            if (const Vec* h = trace.layer_reprs[static_cast<size_t>(layer)].find(c)) {
                trace.result.representations.push_back(*h);
                found_layer = layer;
                break;
            }
        }
        assert(found_layer >= 0);
        trace.candidate_layer.push_back(found_layer);
    }

    // Scoring, with the hidden activations kept for the backward pass.
    trace.scorer_hidden.reserve(candidates.size());
    trace.logits.reserve(candidates.size());
    for (const Vec& h : trace.result.representations) {
        Vec hidden = matvec(params.scorer.w1, concat(h, h_query));
        axpy(1.0, params.scorer.b1, hidden);
        hidden = relu(hidden);
        trace.logits.push_back(dot(params.scorer.w2, hidden) + params.scorer.b2.at(0));
        trace.scorer_hidden.push_back(std::move(hidden));
    }
    trace.result.probabilities = softmax(trace.logits);
    return trace;
}

ExplorationResult explore(const KnowledgeGraph& kg, const std::vector<Vec>& relation_embs,
                          const ExplorerParams& params, const Vec& h_query,
                          const std::vector<uint32_t>& topic_entities) {
    return explore_traced(kg, relation_embs, params, h_query, topic_entities).result;
}

ExplorationResult explore_question(const KnowledgeGraph& kg, const EmbeddingProvider& provider,
                                   const EncoderParams& encoder, const ExplorerParams& params,
                                   const std::string& question,
                                   const std::vector<uint32_t>& topic_entities) {
    const Vec h_query = project(encoder, provider.encode(question));
    const std::vector<Vec> relation_embs =
        encode_relations(encoder, collect_relation_features(provider, kg));
    return explore(kg, relation_embs, params, h_query, topic_entities);
}

} // namespace etd
