#include "etd/encoder.hpp"

#include "etd/errors.hpp"
#include "etd/rng.hpp"

#include <cctype>
#include <fstream>
#include <sstream>

namespace etd {
namespace {

std::string trim_copy(const std::string& s) {
    size_t a = 0, b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
    return s.substr(a, b - a);
}

} // namespace

Vec HashEmbeddingProvider::encode(const std::string& text) const {
    if (trim_copy(text).empty()) throw std::invalid_argument("encode: empty text");

    Vec v(dim_, 0.0);
    std::string token;
    auto flush = [&] {
        if (token.empty()) return;
        uint64_t h = splitmix64(fnv1a64(token) ^ seed_);
        size_t bucket = static_cast<size_t>(h % dim_);
        double sign = (h >> 63) ? -1.0 : 1.0;
        v[bucket] += sign;
        token.clear();
    };
    for (char c : text) {
        if (std::isspace(static_cast<unsigned char>(c))) {
            flush();
        } else {
            token.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
        }
    }
    flush();

    double norm = l2_norm(v);
    if (norm > 0.0) {
        for (double& x : v) x /= norm;
    }
    return v;
}

FileEmbeddingProvider FileEmbeddingProvider::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open embedding file " + path);

    FileEmbeddingProvider p;
    std::string line;
    if (!std::getline(in, line)) throw DataError(path + ": missing d_L header");
    std::string header = trim_copy(line);
    if (header.rfind("d_L=", 0) != 0) throw DataError(path + ":1: expected header d_L=<n>");
    try {
        p.dim_ = static_cast<size_t>(std::stoull(header.substr(4)));
    } catch (const std::exception&) {
        throw DataError(path + ":1: malformed d_L header");
    }
    if (p.dim_ == 0) throw DataError(path + ":1: d_L must be positive");

    size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (trim_copy(line).empty()) continue;
        size_t tab = line.find('\t');
        if (tab == std::string::npos) {
            throw DataError(path + ":" + std::to_string(lineno) + ": expected <text><TAB><floats>");
        }
        std::string text = line.substr(0, tab);
        Vec vec;
        vec.reserve(p.dim_);
        std::istringstream ss(line.substr(tab + 1));
        double x = 0.0;
        while (ss >> x) vec.push_back(x);
        if (vec.size() != p.dim_) {
            throw DataError(path + ":" + std::to_string(lineno) + ": expected " + std::to_string(p.dim_) +
                            " floats, got " + std::to_string(vec.size()));
        }
        p.table_[text] = std::move(vec);
    }
    return p;
}

Vec FileEmbeddingProvider::encode(const std::string& text) const {
    if (trim_copy(text).empty()) throw std::invalid_argument("encode: empty text");
    auto it = table_.find(text);
    if (it == table_.end()) throw DataError("embedding file has no entry for text: " + text);
    return it->second;
}

std::unique_ptr<EmbeddingProvider> make_provider(const std::string& kind, size_t hash_dim,
                                                 const std::string& file_path) {
    if (kind == "hash") return std::make_unique<HashEmbeddingProvider>(hash_dim);
    if (kind == "file") {
        if (file_path.empty()) throw ConfigError("encoder.provider=file requires encoder.file");
        return std::make_unique<FileEmbeddingProvider>(FileEmbeddingProvider::load(file_path));
    }
    throw ConfigError("unknown encoder.provider '" + kind + "' (expected file or hash)");
}

Vec project(const EncoderParams& params, const Vec& raw) {
    if (raw.size() != params.raw_dim()) {
        throw std::invalid_argument("project: raw vector has length " + std::to_string(raw.size()) +
                                    ", expected " + std::to_string(params.raw_dim()));
    }
    return matvec(params.w_proj, raw);
}

KgTextFeatures collect_relation_features(const EmbeddingProvider& provider, const KnowledgeGraph& kg) {
    KgTextFeatures f;
    f.raw_relations.reserve(kg.base_relation_count());
    for (size_t r = 0; r < kg.base_relation_count(); ++r) {
        f.raw_relations.push_back(provider.encode(kg.relation_name(static_cast<uint32_t>(r))));
    }
    return f;
}

std::vector<Vec> encode_relations(const EncoderParams& params, const KgTextFeatures& features) {
    const size_t r_count = features.raw_relations.size();
    std::vector<Vec> table;
    table.reserve(2 * r_count + 1);
    for (size_t r = 0; r < r_count; ++r) table.push_back(project(params, features.raw_relations[r]));
    for (size_t r = 0; r < r_count; ++r) {
        Vec v = matvec(params.w_reverse, table[r]);
        axpy(1.0, params.b_reverse, v);
        table.push_back(std::move(v));
    }
    table.push_back(params.h_identity);
    return table;
}

Vec relation_embedding(const EncoderParams& params, const KnowledgeGraph& kg,
                       const EmbeddingProvider& provider, uint32_t rel) {
    if (rel >= kg.augmented_relation_count()) {
        throw std::invalid_argument("relation_embedding: relation id out of range");
    }
    if (kg.is_identity(rel)) return params.h_identity;
    Vec base = project(params, provider.encode(kg.relation_name(kg.base_relation(rel))));
    if (kg.is_base(rel)) return base;
    Vec v = matvec(params.w_reverse, base);
    axpy(1.0, params.b_reverse, v);
    return v;
}

} // namespace etd
