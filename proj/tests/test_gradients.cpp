#include "etd/kg.hpp"
#include "etd/trainer.hpp"

#include "support.hpp"

#include <doctest.h>

#include <cmath>
#include <string>
#include <vector>

using namespace etd;

namespace {

constexpr double kStep = 1e-4;
constexpr double kTolerance = 1e-4;

struct Instance {
    KnowledgeGraph kg;
    KgTextFeatures relations;
    Model model;
    std::vector<TrainExample> batch;
    std::vector<Vec> raw_questions;
};

// Small random instance with answers drawn from the actually explored
// candidate set, so most loss terms carry gradient.
Instance make_instance(uint64_t seed, int top_k) {
    Instance inst;
    inst.kg = KnowledgeGraph::from_rows(testsupport::random_rows(8, 3, 4, seed));
    const testsupport::RandomProvider provider(8, seed * 31 + 7);
    inst.model = random_init(4, 8, 2, top_k, seed + 1);
    inst.relations = collect_relation_features(provider, inst.kg);

    Rng rng(seed ^ 0xabcdef);
    const std::vector<Vec> relation_embs = encode_relations(inst.model.encoder, inst.relations);
    for (int q = 0; q < 3; ++q) {
        TrainExample ex;
        ex.question = "question " + std::to_string(seed) + " " + std::to_string(q);
        ex.topic_entities = {static_cast<uint32_t>(rng.next_below(inst.kg.entity_count()))};
        const Vec raw = provider.encode(ex.question);
        const Vec h_q = project(inst.model.encoder, raw);
        const ExplorationResult r =
            explore(inst.kg, relation_embs, inst.model.explorer, h_q, ex.topic_entities);
        REQUIRE_FALSE(r.candidates.empty());
        // Two answers per question, spread over the candidate list.
        ex.answers.push_back(r.candidates[rng.next_below(r.candidates.size())]);
        ex.answers.push_back(r.candidates[rng.next_below(r.candidates.size())]);
        inst.batch.push_back(ex);
        inst.raw_questions.push_back(raw);
    }
    return inst;
}

double loss_of(const Instance& inst, const Model& model) {
    return batch_loss(inst.kg, model, inst.relations, inst.batch, inst.raw_questions).loss;
}

// Central-difference gradient of the batch loss for every parameter, block
// by block, compared to the reverse-mode result by relative L2 error.
void check_instance(uint64_t seed, int top_k) {
    Instance inst = make_instance(seed, top_k);

    Model analytic = zeros_like(inst.model);
    batch_gradients(inst.kg, inst.model, inst.relations, inst.batch, inst.raw_questions, analytic);

    const std::vector<ParamBlock> param = parameter_blocks(inst.model);
    const std::vector<ParamBlock> grad = parameter_blocks(analytic);
    REQUIRE(param.size() == grad.size());

    for (size_t b = 0; b < param.size(); ++b) {
        double diff2 = 0.0, a2 = 0.0, f2 = 0.0;
        for (size_t i = 0; i < param[b].values.size(); ++i) {
            double& theta = param[b].values[i];
            const double saved = theta;
            theta = saved + kStep;
            const double up = loss_of(inst, inst.model);
            theta = saved - kStep;
            const double down = loss_of(inst, inst.model);
            theta = saved;
            const double fd = (up - down) / (2.0 * kStep);
            const double an = grad[b].values[i];
            diff2 += (an - fd) * (an - fd);
            a2 += an * an;
            f2 += fd * fd;
        }
        // The floor keeps blocks whose true gradient is numerically zero
        // (both sides below central-difference noise) from dividing 0 by 0.
        const double rel =
            std::sqrt(diff2) / std::max({std::sqrt(a2), std::sqrt(f2), 1e-6});
        INFO("seed ", seed, " block ", param[b].name, " rel err ", rel);
        CHECK(rel < kTolerance);
    }
}

} // namespace

TEST_CASE("reverse-mode gradients match central differences without pruning") {
    // K exceeds any possible out-degree, so retention is total and the loss
    // is smooth around the evaluation point (up to measure-zero relu kinks).
    for (uint64_t seed = 1; seed <= 10; ++seed) check_instance(seed, 64);
}

TEST_CASE("reverse-mode gradients match central differences with pruning active") {
    // Small K exercises the retained-edge code path; top-K selection is
    // locally constant so the comparison is still valid.
    for (uint64_t seed = 21; seed <= 24; ++seed) check_instance(seed, 2);
}

TEST_CASE("gradients of a batch equal the sum over singleton batches") {
    Instance inst = make_instance(77, 64);

    Model whole = zeros_like(inst.model);
    batch_gradients(inst.kg, inst.model, inst.relations, inst.batch, inst.raw_questions, whole);

    Model summed = zeros_like(inst.model);
    for (size_t q = 0; q < inst.batch.size(); ++q) {
        Model single = zeros_like(inst.model);
        batch_gradients(inst.kg, inst.model, inst.relations, {inst.batch[q]},
                        {inst.raw_questions[q]}, single);
        auto dst = parameter_blocks(summed);
        auto src = parameter_blocks(single);
        for (size_t b = 0; b < dst.size(); ++b) {
            for (size_t i = 0; i < dst[b].values.size(); ++i) {
                dst[b].values[i] += src[b].values[i];
            }
        }
    }

    auto a = parameter_blocks(whole);
    auto b = parameter_blocks(summed);
    for (size_t blk = 0; blk < a.size(); ++blk) {
        for (size_t i = 0; i < a[blk].values.size(); ++i) {
            CHECK(a[blk].values[i] == doctest::Approx(b[blk].values[i]).epsilon(1e-12));
        }
    }
}

TEST_CASE("gradients are deterministic per thread count and consistent across counts") {
    Instance inst = make_instance(123, 8);

    Model first = zeros_like(inst.model);
    const LossStats sa = batch_gradients(inst.kg, inst.model, inst.relations, inst.batch,
                                         inst.raw_questions, first, 3);
    Model second = zeros_like(inst.model);
    const LossStats sb = batch_gradients(inst.kg, inst.model, inst.relations, inst.batch,
                                         inst.raw_questions, second, 3);

    // Same thread count: bit-identical.
    CHECK(sa.loss == sb.loss);
    CHECK(sa.missed == sb.missed);
    auto a = parameter_blocks(first);
    auto b = parameter_blocks(second);
    for (size_t blk = 0; blk < a.size(); ++blk) {
        for (size_t i = 0; i < a[blk].values.size(); ++i) {
            CHECK(a[blk].values[i] == b[blk].values[i]);
        }
    }

    // Different thread count: same result up to summation reordering.
    Model serial = zeros_like(inst.model);
    const LossStats ss = batch_gradients(inst.kg, inst.model, inst.relations, inst.batch,
                                         inst.raw_questions, serial, 1);
    CHECK(ss.loss == doctest::Approx(sa.loss).epsilon(1e-12));
    CHECK(ss.missed == sa.missed);
    CHECK(ss.answer_terms == sa.answer_terms);
    auto c = parameter_blocks(serial);
    for (size_t blk = 0; blk < a.size(); ++blk) {
        for (size_t i = 0; i < a[blk].values.size(); ++i) {
            CHECK(c[blk].values[i] == doctest::Approx(a[blk].values[i]).epsilon(1e-9));
        }
    }
}
