#include "etd/kg.hpp"

#include "etd/errors.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include <zlib.h>

namespace etd {
namespace {

// Reads a whole text file into lines, gunzipping when the name ends in ".gz".
std::vector<std::string> read_lines(const std::string& path) {
    std::string content;
    if (path.size() > 3 && path.compare(path.size() - 3, 3, ".gz") == 0) {
        gzFile f = gzopen(path.c_str(), "rb");
        if (!f) throw DataError("cannot open " + path);
        char buf[1 << 16];
        int n = 0;
        while ((n = gzread(f, buf, sizeof(buf))) > 0) content.append(buf, static_cast<size_t>(n));
        bool bad = n < 0;
        gzclose(f);
        if (bad) throw DataError("gzip read failed for " + path);
    } else {
        std::ifstream in(path, std::ios::binary);
        if (!in) throw DataError("cannot open " + path);
        std::ostringstream ss;
        ss << in.rdbuf();
        content = ss.str();
    }

    std::vector<std::string> lines;
    size_t start = 0;
    while (start <= content.size()) {
        size_t end = content.find('\n', start);
        if (end == std::string::npos) {
            if (start < content.size()) lines.push_back(content.substr(start));
            break;
        }
        std::string line = content.substr(start, end - start);
        if (!line.empty() && line.back() == '\r') line.pop_back();
        lines.push_back(std::move(line));
        start = end + 1;
    }
    return lines;
}

uint32_t intern(std::unordered_map<std::string, uint32_t>& ids, std::vector<std::string>& names,
                const std::string& name) {
    auto it = ids.find(name);
    if (it != ids.end()) return it->second;
    uint32_t id = static_cast<uint32_t>(names.size());
    names.push_back(name);
    ids.emplace(name, id);
    return id;
}

} // namespace

KnowledgeGraph KnowledgeGraph::load_triples(const std::string& path) {
    std::vector<std::string> lines = read_lines(path);

    KnowledgeGraph kg;
    std::vector<Triple> triples;
    triples.reserve(lines.size());

    for (size_t i = 0; i < lines.size(); ++i) {
        const std::string& line = lines[i];
        if (line.empty()) continue;
        size_t t1 = line.find('\t');
        size_t t2 = t1 == std::string::npos ? std::string::npos : line.find('\t', t1 + 1);
        if (t1 == std::string::npos || t2 == std::string::npos || line.find('\t', t2 + 1) != std::string::npos) {
            throw DataError(path + ":" + std::to_string(i + 1) +
                            ": expected head<TAB>relation<TAB>tail");
        }
        std::string head = line.substr(0, t1);
        std::string rel = line.substr(t1 + 1, t2 - t1 - 1);
        std::string tail = line.substr(t2 + 1);
        if (head.empty() || rel.empty() || tail.empty()) {
            throw DataError(path + ":" + std::to_string(i + 1) + ": empty field");
        }
        uint32_t h = intern(kg.entity_ids_, kg.entity_names_, head);
        uint32_t r = intern(kg.relation_ids_, kg.relation_names_, rel);
        uint32_t t = intern(kg.entity_ids_, kg.entity_names_, tail);
        triples.push_back({h, r, t});
    }

    kg.build_csr(std::move(triples));
    return kg;
}

KnowledgeGraph KnowledgeGraph::from_rows(const std::vector<std::array<std::string, 3>>& rows) {
    KnowledgeGraph kg;
    std::vector<Triple> triples;
    triples.reserve(rows.size());
    for (const auto& row : rows) {
        if (row[0].empty() || row[1].empty() || row[2].empty()) throw DataError("empty field in triple row");
        uint32_t h = intern(kg.entity_ids_, kg.entity_names_, row[0]);
        uint32_t r = intern(kg.relation_ids_, kg.relation_names_, row[1]);
        uint32_t t = intern(kg.entity_ids_, kg.entity_names_, row[2]);
        triples.push_back({h, r, t});
    }
    kg.build_csr(std::move(triples));
    return kg;
}

void KnowledgeGraph::build_csr(std::vector<Triple> triples) {
    // Dedup base triples, then materialize reverses.
    auto key = [](const Triple& t) {
        return std::tuple<uint32_t, uint32_t, uint32_t>(t.head, t.relation, t.tail);
    };
    std::sort(triples.begin(), triples.end(), [&](const Triple& a, const Triple& b) { return key(a) < key(b); });
    triples.erase(std::unique(triples.begin(), triples.end()), triples.end());
    base_triple_count_ = triples.size();

    const uint32_t r_count = static_cast<uint32_t>(relation_names_.size());
    std::vector<Triple> all;
    all.reserve(triples.size() * 2);
    for (const Triple& t : triples) {
        all.push_back(t);
        all.push_back({t.tail, r_count + t.relation, t.head});
    }
    std::sort(all.begin(), all.end(), [&](const Triple& a, const Triple& b) { return key(a) < key(b); });
    all.erase(std::unique(all.begin(), all.end()), all.end());

    offsets_.assign(entity_count() + 1, 0);
    edges_.clear();
    edges_.reserve(all.size());
    for (const Triple& t : all) offsets_[t.head + 1]++;
    for (size_t i = 1; i < offsets_.size(); ++i) offsets_[i] += offsets_[i - 1];
    for (const Triple& t : all) edges_.push_back({t.relation, t.tail});

    max_out_degree_ = 0;
    for (size_t e = 0; e < entity_count(); ++e) {
        max_out_degree_ = std::max(max_out_degree_, offsets_[e + 1] - offsets_[e]);
    }
}

uint32_t KnowledgeGraph::reverse_relation(uint32_t base) const {
    if (!is_base(base)) throw std::invalid_argument("reverse_relation: not a base relation id");
    return base + static_cast<uint32_t>(relation_names_.size());
}

uint32_t KnowledgeGraph::base_relation(uint32_t rel) const {
    if (is_base(rel)) return rel;
    if (is_reverse(rel)) return rel - static_cast<uint32_t>(relation_names_.size());
    throw std::invalid_argument("base_relation: identity relation has no base");
}

std::span<const EdgeTarget> KnowledgeGraph::out_edges(uint32_t e) const {
    if (e >= entity_count()) throw std::invalid_argument("out_edges: entity id out of range");
    return {edges_.data() + offsets_[e], offsets_[e + 1] - offsets_[e]};
}

const std::string& KnowledgeGraph::entity_name(uint32_t id) const {
    if (id >= entity_names_.size()) throw std::invalid_argument("entity_name: id out of range");
    return entity_names_[id];
}

const std::string& KnowledgeGraph::relation_name(uint32_t base_rel) const {
    if (base_rel >= relation_names_.size()) throw std::invalid_argument("relation_name: id out of range");
    return relation_names_[base_rel];
}

std::optional<uint32_t> KnowledgeGraph::entity_id(std::string_view name) const {
    auto it = entity_ids_.find(std::string(name));
    if (it == entity_ids_.end()) return std::nullopt;
    return it->second;
}

std::optional<uint32_t> KnowledgeGraph::relation_id(std::string_view name) const {
    auto it = relation_ids_.find(std::string(name));
    if (it == relation_ids_.end()) return std::nullopt;
    return it->second;
}

} // namespace etd
