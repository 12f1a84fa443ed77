#pragma once

#include "etd/encoder.hpp"
#include "etd/explorer.hpp"
#include "etd/kg.hpp"
#include "etd/rng.hpp"
#include "etd/tensor.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace etd {

// Probability floor for answers the explorer failed to reach (or crushed).
inline constexpr double kLossEpsilon = 1e-12;

// Every trainable tensor: encoder projections plus the explorer stack.
struct Model {
    int d = 0;
    int d_L = 0;
    EncoderParams encoder;
    ExplorerParams explorer;
};

// Allocates a model of the given shape with all parameters zero.
Model make_model(int d, int d_L, int num_steps, int top_k);

// Xavier-uniform init, a = sqrt(6 / (fan_in + fan_out)); biases zero.
// Blocks are filled in canonical block order from one seeded stream.
Model random_init(int d, int d_L, int num_steps, int top_k, uint64_t seed);

Model zeros_like(const Model& model);

struct ParamBlock {
    std::string name;
    std::span<double> values;
};
struct ConstParamBlock {
    std::string name;
    std::span<const double> values;
};

// Canonical block order: enc.w_proj, enc.w_reverse, enc.b_reverse,
// enc.h_identity, step<i>.{w_head,w_rel,w_query,w_qrel,w_prop} for i=1..L,
// scorer.{w1,b1,w2,b2}. Init, Adam, checkpoints and the gradient check all
// rely on this order.
std::vector<ParamBlock> parameter_blocks(Model& model);
std::vector<ConstParamBlock> parameter_blocks(const Model& model);

struct TrainExample {
    std::string question;
    std::vector<uint32_t> topic_entities;
    std::vector<uint32_t> answers;
};

struct LossStats {
    double loss = 0.0;
    size_t answer_terms = 0; // distinct answer entities summed over questions
    size_t missed = 0;       // answers absent from the explored candidate set
    size_t questions = 0;
    size_t dead_ends = 0;
};

// Raw d_L features shared by every question of a run.
struct FeatureCache {
    KgTextFeatures relations;       // one raw vector per base relation
    std::vector<Vec> raw_questions; // parallel to the example list it was built from
};

FeatureCache build_feature_cache(const KnowledgeGraph& kg, const EmbeddingProvider& provider,
                                 const std::vector<TrainExample>& examples);

// Sum over (question, answer) pairs of -log p(q, e_a); absent answers
// contribute -log(kLossEpsilon) and are counted as missed.
LossStats batch_loss(const KnowledgeGraph& kg, const Model& model, const KgTextFeatures& relations,
                     const std::vector<TrainExample>& batch, const std::vector<Vec>& raw_questions);

// Reverse-mode gradients of batch_loss. Top-K selection is treated as
// constant: pruned edges contribute nothing. Throws on non-finite output,
// naming the offending block.
LossStats batch_gradients(const KnowledgeGraph& kg, const Model& model, const KgTextFeatures& relations,
                          const std::vector<TrainExample>& batch,
                          const std::vector<Vec>& raw_questions, Model& grads, int threads = 1);

struct AdamState {
    Model m;
    Model v;
    uint64_t t = 0;
};

struct AdamConfig {
    double learning_rate = 1e-4;
    double weight_decay = 1e-3; // decoupled
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

// One decoupled-weight-decay Adam step; with zero gradients and zero decay
// the parameters are left bit-identical.
void adam_step(Model& model, const Model& grads, AdamState& state, const AdamConfig& config);

struct TrainConfig {
    int d = 256;
    int d_L = 512;
    int num_steps = 3; // L
    int top_k = 200;   // K
    double learning_rate = 1e-4;
    double weight_decay = 1e-3;
    int batch_size = 20;
    int max_epochs = 30;
    uint64_t seed = 0;
    std::string validation_metric = "hits1"; // or "loss"
    int threads = 1;
};

struct EpochStats {
    double train_loss = 0.0;      // summed over the epoch
    double missed_rate = 0.0;     // missed / answer_terms
    double val_hits1 = -1.0;      // -1 when no validation split
    double val_loss = -1.0;
};

struct TrainOutcome {
    Model model; // best-validation state when a validation split is given, else last
    AdamState adam;
    std::vector<EpochStats> epochs;
    std::vector<double> loss_curve; // train loss per epoch
    int best_epoch = -1;            // -1 when no validation split
};

// Explore-only Hits@1 by entity id: argmax candidate vs the gold id set.
double explore_hits1(const KnowledgeGraph& kg, const Model& model, const KgTextFeatures& relations,
                     const std::vector<TrainExample>& examples, const std::vector<Vec>& raw_questions,
                     int threads = 1);

// Full loop: seeded epoch shuffle, mini-batches, AdamW updates, optional
// validation-based model selection. `initial` (when given) must match d and
// d_L; a step-count mismatch reuses the first min(L) step blocks and
// initializes the rest from the seed.
TrainOutcome train(const KnowledgeGraph& kg, const EmbeddingProvider& provider,
                   const std::vector<TrainExample>& train_set,
                   const std::vector<TrainExample>& val_set, const TrainConfig& config,
                   const Model* initial = nullptr);

} // namespace etd
