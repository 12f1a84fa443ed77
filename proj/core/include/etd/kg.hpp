#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace etd {

struct Triple {
    uint32_t head = 0;
    uint32_t relation = 0; // augmented relation id
    uint32_t tail = 0;

    friend bool operator==(const Triple&, const Triple&) = default;
};

struct EdgeTarget {
    uint32_t relation = 0;
    uint32_t tail = 0;
};

// Dictionary-encoded knowledge graph with augmented CSR adjacency.
//
// Relation id layout over R base relations:
//   [0, R)    base relations, in first-appearance order
//   [R, 2R)   reverse relations, R + base id
//   2R        identity relation (self-loop; virtual, never stored)
//
// For every stored base edge (h, r, t) the reverse edge (t, R+r, h) is also
// stored. Immutable after load; concurrent reads are safe.
class KnowledgeGraph {
public:
    // TSV "head<TAB>relation<TAB>tail", one triple per line, UTF-8.
    // Paths ending in ".gz" are decompressed transparently.
    static KnowledgeGraph load_triples(const std::string& path);

    // Same semantics as load_triples, from in-memory rows.
    static KnowledgeGraph from_rows(const std::vector<std::array<std::string, 3>>& rows);

    size_t entity_count() const { return entity_names_.size(); }
    size_t base_relation_count() const { return relation_names_.size(); }
    size_t augmented_relation_count() const { return 2 * relation_names_.size() + 1; }
    uint32_t identity_relation() const { return static_cast<uint32_t>(2 * relation_names_.size()); }

    bool is_base(uint32_t rel) const { return rel < relation_names_.size(); }
    bool is_reverse(uint32_t rel) const {
        return rel >= relation_names_.size() && rel < 2 * relation_names_.size();
    }
    bool is_identity(uint32_t rel) const { return rel == identity_relation(); }

    uint32_t reverse_relation(uint32_t base) const;
    // Maps a base or reverse relation to its base id.
    uint32_t base_relation(uint32_t rel) const;

    // All stored out-edges of e in (relation, tail) ascending order.
    // Virtual identity self-loops are not included.
    std::span<const EdgeTarget> out_edges(uint32_t e) const;

    size_t stored_edge_count() const { return edges_.size(); }
    size_t base_triple_count() const { return base_triple_count_; }
    size_t max_out_degree() const { return max_out_degree_; }

    const std::string& entity_name(uint32_t id) const;
    const std::string& relation_name(uint32_t base_rel) const;
    std::optional<uint32_t> entity_id(std::string_view name) const;
    std::optional<uint32_t> relation_id(std::string_view name) const;

private:
    std::vector<std::string> entity_names_;
    std::vector<std::string> relation_names_;
    std::unordered_map<std::string, uint32_t> entity_ids_;
    std::unordered_map<std::string, uint32_t> relation_ids_;
    std::vector<size_t> offsets_;    // entity_count()+1 entries
    std::vector<EdgeTarget> edges_;  // grouped by head, sorted (relation, tail)
    size_t base_triple_count_ = 0;
    size_t max_out_degree_ = 0;

    void build_csr(std::vector<Triple> triples);
};

} // namespace etd
