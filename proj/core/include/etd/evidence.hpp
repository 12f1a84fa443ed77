#pragma once

#include "etd/explorer.hpp"
#include "etd/kg.hpp"

#include <string>
#include <vector>

namespace etd {

// Greedy argmax-attention chain from a topic entity to a candidate, one edge
// per executed step, earliest step first.
struct EvidencePath {
    uint32_t candidate = 0;
    std::vector<RetainedEdge> steps;
    // True when the candidate was pruned out of later frontiers and the walk
    // started at its last retained appearance instead of the final step.
    bool partial = false;
};

// Walks backwards from the candidate, at every step choosing its retained
// in-edge with the highest alpha (ties: lower relation id, then lower head
// id). Throws std::invalid_argument when the candidate was never explored.
EvidencePath backtrack(const ExplorationResult& result, uint32_t candidate);

// "(head, relation, tail)" per step; identity edges are elided and reverse
// edges are flipped back to their base relation.
std::vector<std::string> render_path(const EvidencePath& path, const KnowledgeGraph& kg);

} // namespace etd
