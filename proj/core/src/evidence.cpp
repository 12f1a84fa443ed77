#include "etd/evidence.hpp"

#include <algorithm>
#include <stdexcept>

namespace etd {

namespace {

// Best retained in-edge of `entity` at a step, or nullptr. Edges are in
// canonical (tail, head, relation) order, so the in-edges are contiguous.
const RetainedEdge* best_in_edge(const StepRecord& record, uint32_t entity) {
    auto lo = std::lower_bound(record.edges.begin(), record.edges.end(), entity,
                               [](const RetainedEdge& e, uint32_t t) { return e.tail < t; });
    const RetainedEdge* best = nullptr;
    for (auto it = lo; it != record.edges.end() && it->tail == entity; ++it) {
        if (!best || it->alpha > best->alpha ||
            (it->alpha == best->alpha &&
             (it->relation < best->relation ||
              (it->relation == best->relation && it->head < best->head)))) {
            best = &*it;
        }
    }
    return best;
}

} // namespace

EvidencePath backtrack(const ExplorationResult& result, uint32_t candidate) {
    if (!result.index_of(candidate)) {
        throw std::invalid_argument("backtrack: entity is not an explored candidate");
    }

    EvidencePath path;
    path.candidate = candidate;
    const size_t executed = result.steps.size();

    // Start from the last step where the candidate still has a retained
    // in-edge; topic-only candidates yield an empty chain.
    size_t start = 0;
    for (size_t l = executed; l >= 1; --l) {
        if (best_in_edge(result.steps[l - 1], candidate)) {
            start = l;
            break;
        }
    }
    path.partial = start < executed;
    if (start == 0) return path;

    uint32_t cursor = candidate;
    for (size_t l = start; l >= 1; --l) {
        const RetainedEdge* edge = best_in_edge(result.steps[l - 1], cursor);
        // Every frontier member below the start step has an in-edge by
        // construction; a miss means the result was tampered with.
        if (!edge) throw std::invalid_argument("backtrack: broken chain in exploration result");
        path.steps.push_back(*edge);
        cursor = edge->head;
    }
    std::reverse(path.steps.begin(), path.steps.end());
    return path;
}

std::vector<std::string> render_path(const EvidencePath& path, const KnowledgeGraph& kg) {
    std::vector<std::string> out;
    out.reserve(path.steps.size());
    for (const RetainedEdge& e : path.steps) {
        if (kg.is_identity(e.relation)) continue;
        std::string head = kg.entity_name(e.head);
        std::string tail = kg.entity_name(e.tail);
        uint32_t base = e.relation;
        if (kg.is_reverse(e.relation)) {
            base = kg.base_relation(e.relation);
            std::swap(head, tail);
        }
        out.push_back("(" + head + ", " + kg.relation_name(base) + ", " + tail + ")");
    }
    return out;
}

} // namespace etd
