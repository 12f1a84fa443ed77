#pragma once

#include "etd/dataset.hpp"

#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace etd {

// Planted-pattern benchmark: every question asks for the entities reached
// from its topic by following a fixed relation sequence, with random
// distractor edges layered on top.
struct SynthSpec {
    size_t entities = 1000;
    size_t relations = 8;    // base relation count
    size_t pattern_hops = 2; // length of the planted relation sequence
    size_t hop_budget = 2;   // exploration depth the benchmark is built for
    size_t train_questions = 500;
    size_t test_questions = 100;
    double distractor_density = 4.0; // random edges per entity
    uint64_t seed = 7;
};

struct SynthData {
    std::vector<std::array<std::string, 3>> triples; // head, relation, tail
    std::vector<std::string> pattern;                // the planted relation names, in order
    std::vector<QaExample> train;
    std::vector<QaExample> test;
};

// Deterministic in the spec (same spec -> identical data). Gold answer sets
// are recomputed over the final edge list, so distractors that extend the
// pattern enlarge the answers instead of corrupting them. Throws ConfigError
// when the pattern cannot fit the hop budget or the pools do not fit.
SynthData gen_synthetic(const SynthSpec& spec);

// Writes triples.tsv, train.jsonl and test.jsonl under dir (created if
// needed).
void write_synth(const SynthData& data, const std::string& dir);

} // namespace etd
