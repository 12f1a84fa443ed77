#include "etd/synth.hpp"

#include "etd/errors.hpp"
#include "etd/rng.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <set>

namespace etd {

namespace {

std::string entity_name(size_t i) {
    std::string num = std::to_string(i);
    num.insert(0, num.size() < 4 ? 4 - num.size() : 0, '0');
    return "ent" + num;
}

std::string relation_name(size_t i) { return "rel" + std::to_string(i); }

// Entities reached by following exactly the pattern relation sequence.
std::vector<size_t> pattern_reachable(const std::vector<std::vector<std::pair<size_t, size_t>>>& adj,
                                      size_t topic, const std::vector<size_t>& pattern) {
    std::set<size_t> layer{topic};
    for (size_t rel : pattern) {
        std::set<size_t> next;
        for (size_t e : layer) {
            for (const auto& [r, t] : adj[e]) {
                if (r == rel) next.insert(t);
            }
        }
        layer = std::move(next);
        if (layer.empty()) break;
    }
    return {layer.begin(), layer.end()};
}

std::string question_text(const std::vector<std::string>& pattern, const std::string& topic) {
    std::string trail = pattern.front();
    for (size_t i = 1; i < pattern.size(); ++i) trail += " then " + pattern[i];
    return "which entities does the " + trail + " trail reach from " + topic + "?";
}

} // namespace

SynthData gen_synthetic(const SynthSpec& spec) {
    if (spec.pattern_hops < 1) throw ConfigError("synthetic pattern needs at least one hop");
    if (spec.pattern_hops > spec.hop_budget) {
        throw ConfigError("synthetic pattern is longer than the hop budget");
    }
    if (spec.relations < spec.pattern_hops) {
        throw ConfigError("synthetic pattern needs pattern_hops distinct relations");
    }
    const size_t questions = spec.train_questions + spec.test_questions;
    if (questions == 0) throw ConfigError("synthetic spec generates no questions");
    // One unique topic per question plus room for intermediates and answers.
    if (spec.entities < questions + spec.pattern_hops) {
        throw ConfigError("synthetic spec has fewer entities than questions");
    }

    Rng rng(spec.seed);
    SynthData data;
    for (size_t i = 0; i < spec.pattern_hops; ++i) data.pattern.push_back(relation_name(i));

    // Topics are unique (no train/test leakage); chain interiors and answers
    // are drawn from the remaining pool and may be shared across questions.
    std::vector<size_t> pool(spec.entities);
    std::iota(pool.begin(), pool.end(), size_t{0});
    rng.shuffle(pool);
    const std::vector<size_t> topics(pool.begin(), pool.begin() + static_cast<long>(questions));
    const std::vector<size_t> others(pool.begin() + static_cast<long>(questions), pool.end());

    std::vector<std::array<size_t, 3>> rows; // head, rel, tail as indices

    for (size_t q = 0; q < questions; ++q) {
        size_t cursor = topics[q];
        for (size_t hop = 0; hop < spec.pattern_hops; ++hop) {
            const size_t next = others[rng.next_below(others.size())];
            rows.push_back({cursor, hop, next});
            cursor = next;
        }
    }

    const size_t distractors =
        static_cast<size_t>(spec.distractor_density * static_cast<double>(spec.entities));
    for (size_t i = 0; i < distractors; ++i) {
        const size_t head = rng.next_below(spec.entities);
        size_t tail = rng.next_below(spec.entities);
        while (tail == head) tail = rng.next_below(spec.entities);
        const size_t rel = rng.next_below(spec.relations);
        rows.push_back({head, rel, tail});
    }

    // Dedup so path counting over the file is exact.
    std::sort(rows.begin(), rows.end());
    rows.erase(std::unique(rows.begin(), rows.end()), rows.end());

    std::vector<std::vector<std::pair<size_t, size_t>>> adj(spec.entities);
    for (const auto& [head, rel, tail] : rows) adj[head].push_back({rel, tail});

    std::vector<size_t> pattern_ids(spec.pattern_hops);
    std::iota(pattern_ids.begin(), pattern_ids.end(), size_t{0});

    for (size_t q = 0; q < questions; ++q) {
        const std::vector<size_t> answers = pattern_reachable(adj, topics[q], pattern_ids);
        QaExample ex;
        ex.question = question_text(data.pattern, entity_name(topics[q]));
        ex.topic_entities.push_back(entity_name(topics[q]));
        for (size_t a : answers) ex.answers.push_back(entity_name(a));
        (q < spec.train_questions ? data.train : data.test).push_back(std::move(ex));
    }

    data.triples.reserve(rows.size());
    for (const auto& [head, rel, tail] : rows) {
        data.triples.push_back({entity_name(head), relation_name(rel), entity_name(tail)});
    }
    return data;
}

void write_synth(const SynthData& data, const std::string& dir) {
    std::filesystem::create_directories(dir);
    const std::string triples_path = dir + "/triples.tsv";
    std::ofstream triples(triples_path, std::ios::trunc);
    if (!triples) throw DataError(triples_path + ": cannot open for writing");
    for (const auto& [head, rel, tail] : data.triples) {
        triples << head << "\t" << rel << "\t" << tail << "\n";
    }
    if (!triples) throw DataError(triples_path + ": write failed");
    write_dataset(dir + "/train.jsonl", data.train);
    write_dataset(dir + "/test.jsonl", data.test);
}

} // namespace etd
