// Microbenchmarks for the exploration hot path: attention scoring, frontier
// expansion with pruning, propagation, and the full per-question pipeline.

#include "etd/encoder.hpp"
#include "etd/explorer.hpp"
#include "etd/kg.hpp"
#include "etd/rng.hpp"
#include "etd/synth.hpp"
#include "etd/trainer.hpp"

#include <benchmark/benchmark.h>

#include <cstdint>
#include <vector>

namespace {

constexpr int kD = 64;
constexpr int kDL = 128;
constexpr uint64_t kSeed = 17;

struct Fixture {
    etd::KnowledgeGraph kg;
    etd::Model model;
    std::vector<etd::Vec> relation_embs;
    std::vector<etd::Vec> queries;           // projected, one per question
    std::vector<std::vector<uint32_t>> topics;

    Fixture() {
        etd::SynthSpec spec;
        spec.entities = 2000;
        spec.relations = 8;
        spec.train_questions = 64;
        spec.test_questions = 1;
        spec.distractor_density = 8.0;
        spec.seed = kSeed;
        const etd::SynthData data = etd::gen_synthetic(spec);
        kg = etd::KnowledgeGraph::from_rows(data.triples);

        const etd::HashEmbeddingProvider provider(kDL);
        model = etd::random_init(kD, kDL, 2, 100, kSeed);
        relation_embs = etd::encode_relations(model.encoder,
                                              etd::collect_relation_features(provider, kg));
        for (const etd::QaExample& row : data.train) {
            queries.push_back(etd::project(model.encoder, provider.encode(row.question)));
            std::vector<uint32_t> ids;
            for (const std::string& name : row.topic_entities) ids.push_back(*kg.entity_id(name));
            topics.push_back(std::move(ids));
        }
    }
};

const Fixture& fixture() {
    static Fixture f;
    return f;
}

void BM_AttentionScore(benchmark::State& state) {
    const Fixture& f = fixture();
    const etd::StepParams& step = f.model.explorer.steps[0];
    const etd::Vec& h_q = f.queries[0];
    etd::Rng rng(kSeed);
    etd::Vec h_s(kD), h_r(kD);
    for (double& v : h_s) v = rng.uniform(-1.0, 1.0);
    for (double& v : h_r) v = rng.uniform(-1.0, 1.0);
    for (auto _ : state) {
        benchmark::DoNotOptimize(etd::attention_score(step, h_s, h_r, h_q));
    }
}
BENCHMARK(BM_AttentionScore);

void BM_ExpandAndPrune(benchmark::State& state) {
    const Fixture& f = fixture();
    etd::ExplorerParams params = f.model.explorer;
    params.top_k = static_cast<int>(state.range(0));
    const size_t q = 0;
    etd::ReprMap frontier;
    frontier.entities = f.topics[q];
    frontier.reprs.assign(frontier.entities.size(), f.queries[q]);
    for (auto _ : state) {
        benchmark::DoNotOptimize(
            etd::expand_and_prune(f.kg, params, 1, frontier, f.relation_embs, f.queries[q]));
    }
}
BENCHMARK(BM_ExpandAndPrune)->Arg(20)->Arg(100)->Arg(1000);

void BM_FullExplore(benchmark::State& state) {
    const Fixture& f = fixture();
    etd::ExplorerParams params = f.model.explorer;
    params.top_k = static_cast<int>(state.range(0));
    size_t q = 0;
    for (auto _ : state) {
        benchmark::DoNotOptimize(
            etd::explore(f.kg, f.relation_embs, params, f.queries[q], f.topics[q]));
        q = (q + 1) % f.queries.size();
    }
}
BENCHMARK(BM_FullExplore)->Arg(20)->Arg(100);

void BM_ScoreCandidates(benchmark::State& state) {
    const Fixture& f = fixture();
    const size_t n = static_cast<size_t>(state.range(0));
    etd::Rng rng(kSeed);
    std::vector<etd::Vec> reprs(n, etd::Vec(kD));
    for (etd::Vec& v : reprs) {
        for (double& x : v) x = rng.uniform(-1.0, 1.0);
    }
    for (auto _ : state) {
        benchmark::DoNotOptimize(
            etd::score_candidates(f.model.explorer.scorer, reprs, f.queries[0]));
    }
}
BENCHMARK(BM_ScoreCandidates)->Arg(16)->Arg(256);

} // namespace

BENCHMARK_MAIN();
