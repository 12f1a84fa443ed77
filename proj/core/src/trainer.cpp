#include "etd/trainer.hpp"

#include "etd/errors.hpp"

#include <algorithm>
#include <atomic>
#include <cassert>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <thread>
#include <utility>

namespace etd {

Model make_model(int d, int d_L, int num_steps, int top_k) {
    if (d < 1 || d_L < 1 || num_steps < 1 || top_k < 1) {
        throw std::invalid_argument("model shape values must be positive");
    }
    Model m;
    m.d = d;
    m.d_L = d_L;
    const size_t du = static_cast<size_t>(d);
    m.encoder.w_proj = Matrix(du, static_cast<size_t>(d_L));
    m.encoder.w_reverse = Matrix(du, du);
    m.encoder.b_reverse.assign(du, 0.0);
    m.encoder.h_identity.assign(du, 0.0);
    m.explorer.num_steps = num_steps;
    m.explorer.top_k = top_k;
    m.explorer.steps.resize(static_cast<size_t>(num_steps));
    for (StepParams& s : m.explorer.steps) {
        s.w_head.assign(du, 0.0);
        s.w_rel.assign(du, 0.0);
        s.w_query.assign(du, 0.0);
        s.w_qrel.assign(du, 0.0);
        s.w_prop = Matrix(du, du);
    }
    m.explorer.scorer.w1 = Matrix(du, 2 * du);
    m.explorer.scorer.b1.assign(du, 0.0);
    m.explorer.scorer.w2.assign(du, 0.0);
    m.explorer.scorer.b2.assign(1, 0.0);
    return m;
}

namespace {

double xavier_bound(size_t fan_in, size_t fan_out) {
    return std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
}

void fill_uniform(Rng& rng, double bound, std::span<double> values) {
    for (double& v : values) v = rng.uniform(-bound, bound);
}

} // namespace

Model random_init(int d, int d_L, int num_steps, int top_k, uint64_t seed) {
    Model m = make_model(d, d_L, num_steps, top_k);
    const size_t du = static_cast<size_t>(d);
    const size_t dl = static_cast<size_t>(d_L);
    Rng rng(seed);
    // Draw order is the canonical block order; biases stay zero.
    fill_uniform(rng, xavier_bound(dl, du), m.encoder.w_proj.data);
    fill_uniform(rng, xavier_bound(du, du), m.encoder.w_reverse.data);
    fill_uniform(rng, xavier_bound(du, du), m.encoder.h_identity);
    for (StepParams& s : m.explorer.steps) {
        fill_uniform(rng, xavier_bound(du, 1), s.w_head);
        fill_uniform(rng, xavier_bound(du, 1), s.w_rel);
        fill_uniform(rng, xavier_bound(du, 1), s.w_query);
        fill_uniform(rng, xavier_bound(du, 1), s.w_qrel);
        fill_uniform(rng, xavier_bound(du, du), s.w_prop.data);
    }
    fill_uniform(rng, xavier_bound(2 * du, du), m.explorer.scorer.w1.data);
    fill_uniform(rng, xavier_bound(du, 1), m.explorer.scorer.w2);
    return m;
}

Model zeros_like(const Model& model) {
    return make_model(model.d, model.d_L, model.explorer.num_steps, model.explorer.top_k);
}

namespace {

template <typename ModelT, typename BlockT, typename SpanT>
std::vector<BlockT> blocks_impl(ModelT& m) {
    std::vector<BlockT> out;
    out.reserve(8 + 5 * m.explorer.steps.size());
    out.push_back({"enc.w_proj", SpanT(m.encoder.w_proj.data)});
    out.push_back({"enc.w_reverse", SpanT(m.encoder.w_reverse.data)});
    out.push_back({"enc.b_reverse", SpanT(m.encoder.b_reverse)});
    out.push_back({"enc.h_identity", SpanT(m.encoder.h_identity)});
    for (size_t i = 0; i < m.explorer.steps.size(); ++i) {
        auto& s = m.explorer.steps[i];
        const std::string p = "step" + std::to_string(i + 1) + ".";
        out.push_back({p + "w_head", SpanT(s.w_head)});
        out.push_back({p + "w_rel", SpanT(s.w_rel)});
        out.push_back({p + "w_query", SpanT(s.w_query)});
        out.push_back({p + "w_qrel", SpanT(s.w_qrel)});
        out.push_back({p + "w_prop", SpanT(s.w_prop.data)});
    }
    out.push_back({"scorer.w1", SpanT(m.explorer.scorer.w1.data)});
    out.push_back({"scorer.b1", SpanT(m.explorer.scorer.b1)});
    out.push_back({"scorer.w2", SpanT(m.explorer.scorer.w2)});
    out.push_back({"scorer.b2", SpanT(m.explorer.scorer.b2)});
    return out;
}

} // namespace

std::vector<ParamBlock> parameter_blocks(Model& model) {
    return blocks_impl<Model, ParamBlock, std::span<double>>(model);
}

std::vector<ConstParamBlock> parameter_blocks(const Model& model) {
    return blocks_impl<const Model, ConstParamBlock, std::span<const double>>(model);
}

FeatureCache build_feature_cache(const KnowledgeGraph& kg, const EmbeddingProvider& provider,
                                 const std::vector<TrainExample>& examples) {
    FeatureCache cache;
    cache.relations = collect_relation_features(provider, kg);
    cache.raw_questions.reserve(examples.size());
    for (const TrainExample& ex : examples) cache.raw_questions.push_back(provider.encode(ex.question));
    return cache;
}

namespace {

struct QuestionLoss {
    double loss = 0.0;
    size_t terms = 0;
    size_t missed = 0;
    bool dead_end = false;
    std::vector<double> g_logit; // empty when the question carries no gradient
};

// -log p per (question, answer) pair; answers outside the candidate set are
// clamped at kLossEpsilon and carry no gradient, as does any p below it.
QuestionLoss question_loss(const ExplorationResult& result, const std::vector<uint32_t>& answers,
                           bool want_gradient) {
    QuestionLoss out;
    std::vector<uint32_t> uniq = answers;
    std::sort(uniq.begin(), uniq.end());
    uniq.erase(std::unique(uniq.begin(), uniq.end()), uniq.end());

    std::vector<size_t> effective;
    for (uint32_t a : uniq) {
        ++out.terms;
        const std::optional<size_t> idx = result.index_of(a);
        if (!idx) {
            out.loss += -std::log(kLossEpsilon);
            ++out.missed;
            continue;
        }
        const double p = result.probabilities[*idx];
        out.loss += -std::log(std::max(p, kLossEpsilon));
        if (p >= kLossEpsilon) effective.push_back(*idx);
    }
    if (want_gradient && !effective.empty()) {
        const double n = static_cast<double>(effective.size());
        out.g_logit.assign(result.probabilities.size(), 0.0);
        for (size_t i = 0; i < result.probabilities.size(); ++i) {
            out.g_logit[i] = n * result.probabilities[i];
        }
        for (size_t idx : effective) out.g_logit[idx] -= 1.0;
    }
    return out;
}

// Reverse-mode pass through scoring, propagation, attention and the encoder,
// mirroring explore_traced step by step. The top-K selection is a constant.
void backward_question(const KnowledgeGraph& kg, const Model& model, const std::vector<Vec>& embs,
                       const KgTextFeatures& relations, const Vec& raw_q, const QuestionTrace& trace,
                       const std::vector<double>& g_logit, Model& grads) {
    const size_t d = static_cast<size_t>(model.d);
    const ExplorerParams& xp = model.explorer;
    const Vec& h_q = trace.h_query;

    Vec g_h_q(d, 0.0);
    std::vector<std::vector<Vec>> layer_grads(trace.layer_reprs.size());
    for (size_t l = 0; l < layer_grads.size(); ++l) layer_grads[l].resize(trace.layer_reprs[l].size());
    std::vector<Vec> g_emb(embs.size());

    auto grad_slot = [&](std::vector<Vec>& slots, size_t idx) -> Vec& {
        if (slots[idx].empty()) slots[idx].assign(d, 0.0);
        return slots[idx];
    };

    // Scorer: logit_i = w2 . relu(W1 [h_i; h_q] + b1) + b2.
    const auto& candidates = trace.result.candidates;
    for (size_t i = 0; i < candidates.size(); ++i) {
        const double gl = g_logit[i];
        const Vec& hidden = trace.scorer_hidden[i];
        const Vec x = concat(trace.result.representations[i], h_q);
        axpy(gl, hidden, grads.explorer.scorer.w2);
        grads.explorer.scorer.b2[0] += gl;
        Vec g_m(d, 0.0);
        for (size_t j = 0; j < d; ++j) g_m[j] = hidden[j] > 0.0 ? gl * xp.scorer.w2[j] : 0.0;
        add_outer(grads.explorer.scorer.w1, g_m, x);
        axpy(1.0, g_m, grads.explorer.scorer.b1);
        const Vec g_x = matvec_transposed(xp.scorer.w1, g_m);

        const size_t layer = static_cast<size_t>(trace.candidate_layer[i]);
        const size_t pos = trace.layer_reprs[layer].index_of(candidates[i]).value();
        Vec& gh = grad_slot(layer_grads[layer], pos);
        for (size_t j = 0; j < d; ++j) gh[j] += g_x[j];
        for (size_t j = 0; j < d; ++j) g_h_q[j] += g_x[d + j];
    }

    // Steps, last to first: h_o = relu(W_prop u_o), u_o = sum alpha (h_s . h_r),
    // alpha = sigmoid(w_head.h_s + w_rel.h_r + w_query.h_q + w_qrel.(h_r.h_q)).
    for (size_t l = trace.result.steps.size(); l >= 1; --l) {
        const StepRecord& rec = trace.result.steps[l - 1];
        const ReprMap& layer = trace.layer_reprs[l];
        const ReprMap& prev = trace.layer_reprs[l - 1];
        const ReprMap& agg = trace.aggregates[l - 1];
        const StepParams& sp = xp.steps[l - 1];
        StepParams& gsp = grads.explorer.steps[l - 1];

        std::vector<Vec> g_u(layer.size());
        for (size_t i = 0; i < layer.size(); ++i) {
            const Vec& g_out = layer_grads[l][i];
            if (g_out.empty()) continue;
            const Vec& h = layer.reprs[i];
            Vec g_z(d, 0.0);
            for (size_t j = 0; j < d; ++j) g_z[j] = h[j] > 0.0 ? g_out[j] : 0.0;
            add_outer(gsp.w_prop, g_z, agg.reprs[i]);
            g_u[i] = matvec_transposed(sp.w_prop, g_z);
        }

        for (const RetainedEdge& e : rec.edges) {
            const size_t ti = layer.index_of(e.tail).value();
            if (g_u[ti].empty()) continue;
            const Vec& gu = g_u[ti];
            const size_t si = prev.index_of(e.head).value();
            const Vec& h_s = prev.reprs[si];
            const Vec& h_r = embs[e.relation];

            double g_alpha = 0.0;
            for (size_t j = 0; j < d; ++j) g_alpha += gu[j] * h_s[j] * h_r[j];

            Vec& gs = grad_slot(layer_grads[l - 1], si);
            Vec& ge = grad_slot(g_emb, e.relation);
            for (size_t j = 0; j < d; ++j) gs[j] += e.alpha * gu[j] * h_r[j];
            for (size_t j = 0; j < d; ++j) ge[j] += e.alpha * gu[j] * h_s[j];

            const double g_pre = g_alpha * e.alpha * (1.0 - e.alpha);
            axpy(g_pre, h_s, gsp.w_head);
            axpy(g_pre, h_r, gsp.w_rel);
            axpy(g_pre, h_q, gsp.w_query);
            for (size_t j = 0; j < d; ++j) gsp.w_qrel[j] += g_pre * h_r[j] * h_q[j];
            for (size_t j = 0; j < d; ++j) gs[j] += g_pre * sp.w_head[j];
            for (size_t j = 0; j < d; ++j) ge[j] += g_pre * (sp.w_rel[j] + sp.w_qrel[j] * h_q[j]);
            for (size_t j = 0; j < d; ++j) g_h_q[j] += g_pre * (sp.w_query[j] + sp.w_qrel[j] * h_r[j]);
        }
    }

    // Layer 0 representations are h_q itself.
    for (const Vec& g : layer_grads[0]) {
        if (!g.empty()) axpy(1.0, g, g_h_q);
    }

    // Relation table: base j = W_proj raw_j, reverse R+j = W_rev base + b_rev,
    // identity learned directly. embs[j] for j < R is exactly the base vector.
    const size_t R = kg.base_relation_count();
    for (size_t j = 0; j < R; ++j) {
        const Vec& g_rev = g_emb[R + j];
        if (g_rev.empty()) continue;
        add_outer(grads.encoder.w_reverse, g_rev, embs[j]);
        axpy(1.0, g_rev, grads.encoder.b_reverse);
        const Vec back = matvec_transposed(model.encoder.w_reverse, g_rev);
        axpy(1.0, back, grad_slot(g_emb, j));
    }
    if (!g_emb[2 * R].empty()) axpy(1.0, g_emb[2 * R], grads.encoder.h_identity);
    for (size_t j = 0; j < R; ++j) {
        if (!g_emb[j].empty()) add_outer(grads.encoder.w_proj, g_emb[j], relations.raw_relations[j]);
    }
    add_outer(grads.encoder.w_proj, g_h_q, raw_q);
}

void check_batch(const std::vector<TrainExample>& batch, const std::vector<Vec>& raw_questions) {
    if (batch.empty()) throw std::invalid_argument("empty batch");
    if (batch.size() != raw_questions.size()) {
        throw std::invalid_argument("raw question features do not match the batch");
    }
}

void merge(LossStats& into, const QuestionLoss& q) {
    into.loss += q.loss;
    into.answer_terms += q.terms;
    into.missed += q.missed;
    ++into.questions;
}

} // namespace

LossStats batch_loss(const KnowledgeGraph& kg, const Model& model, const KgTextFeatures& relations,
                     const std::vector<TrainExample>& batch, const std::vector<Vec>& raw_questions) {
    check_batch(batch, raw_questions);
    const std::vector<Vec> embs = encode_relations(model.encoder, relations);
    LossStats stats;
    for (size_t i = 0; i < batch.size(); ++i) {
        const Vec h_q = project(model.encoder, raw_questions[i]);
        const ExplorationResult result =
            explore(kg, embs, model.explorer, h_q, batch[i].topic_entities);
        if (result.dead_end) ++stats.dead_ends;
        merge(stats, question_loss(result, batch[i].answers, false));
    }
    return stats;
}

LossStats batch_gradients(const KnowledgeGraph& kg, const Model& model, const KgTextFeatures& relations,
                          const std::vector<TrainExample>& batch,
                          const std::vector<Vec>& raw_questions, Model& grads, int threads) {
    check_batch(batch, raw_questions);
    const std::vector<Vec> embs = encode_relations(model.encoder, relations);

    const size_t n = batch.size();
    const size_t workers =
        std::max<size_t>(1, std::min<size_t>(static_cast<size_t>(std::max(threads, 1)), n));

    std::vector<Model> worker_grads;
    std::vector<std::vector<QuestionLoss>> worker_loss(workers);
    for (size_t w = 0; w < workers; ++w) worker_grads.push_back(zeros_like(model));

    // Worker w handles questions w, w+W, w+2W, ... in ascending order; the
    // final reduction runs w = 0..W-1, so accumulation order is fixed for a
    // given thread count.
    auto run_worker = [&](size_t w) {
        for (size_t i = w; i < n; i += workers) {
            const Vec h_q = project(model.encoder, raw_questions[i]);
            const QuestionTrace trace =
                explore_traced(kg, embs, model.explorer, h_q, batch[i].topic_entities);
            QuestionLoss ql = question_loss(trace.result, batch[i].answers, true);
            ql.dead_end = trace.result.dead_end;
            if (!ql.g_logit.empty()) {
                backward_question(kg, model, embs, relations, raw_questions[i], trace, ql.g_logit,
                                  worker_grads[w]);
            }
            ql.g_logit = {};
            worker_loss[w].push_back(std::move(ql));
        }
    };

    if (workers == 1) {
        run_worker(0);
    } else {
        std::vector<std::thread> pool;
        pool.reserve(workers);
        for (size_t w = 0; w < workers; ++w) pool.emplace_back(run_worker, w);
        for (std::thread& t : pool) t.join();
    }

    LossStats stats;
    for (size_t w = 0; w < workers; ++w) {
        for (const QuestionLoss& ql : worker_loss[w]) {
            merge(stats, ql);
            if (ql.dead_end) ++stats.dead_ends;
        }
    }
    const auto grad_blocks = parameter_blocks(grads);
    for (size_t w = 0; w < workers; ++w) {
        const auto src_blocks = parameter_blocks(std::as_const(worker_grads[w]));
        for (size_t b = 0; b < grad_blocks.size(); ++b) {
            for (size_t i = 0; i < grad_blocks[b].values.size(); ++i) {
                grad_blocks[b].values[i] += src_blocks[b].values[i];
            }
        }
    }
    for (const auto& block : grad_blocks) {
        for (double v : block.values) {
            if (!std::isfinite(v)) {
                throw std::runtime_error("non-finite gradient in block " + block.name);
            }
        }
    }
    return stats;
}

void adam_step(Model& model, const Model& grads, AdamState& state, const AdamConfig& config) {
    if (config.learning_rate <= 0.0) throw std::invalid_argument("learning rate must be positive");
    state.t += 1;
    const double bc1 = 1.0 - std::pow(config.beta1, static_cast<double>(state.t));
    const double bc2 = 1.0 - std::pow(config.beta2, static_cast<double>(state.t));

    const auto p = parameter_blocks(model);
    const auto g = parameter_blocks(grads);
    const auto m = parameter_blocks(state.m);
    const auto v = parameter_blocks(state.v);
    for (size_t b = 0; b < p.size(); ++b) {
        check_dim(p[b].values.size() == g[b].values.size() && p[b].values.size() == m[b].values.size(),
                  "adam_step blocks");
        for (size_t i = 0; i < p[b].values.size(); ++i) {
            const double gi = g[b].values[i];
            double& mi = m[b].values[i];
            double& vi = v[b].values[i];
            mi = config.beta1 * mi + (1.0 - config.beta1) * gi;
            vi = config.beta2 * vi + (1.0 - config.beta2) * gi * gi;
            const double m_hat = mi / bc1;
            const double v_hat = vi / bc2;
            double& theta = p[b].values[i];
            // Decoupled weight decay: the decay term bypasses the moments.
            theta -= config.learning_rate * (m_hat / (std::sqrt(v_hat) + config.eps));
            if (config.weight_decay != 0.0) theta -= config.learning_rate * config.weight_decay * theta;
        }
    }
}

double explore_hits1(const KnowledgeGraph& kg, const Model& model, const KgTextFeatures& relations,
                     const std::vector<TrainExample>& examples, const std::vector<Vec>& raw_questions,
                     int threads) {
    check_batch(examples, raw_questions);
    const std::vector<Vec> embs = encode_relations(model.encoder, relations);
    const size_t n = examples.size();
    std::vector<uint8_t> hit(n, 0);

    const size_t workers =
        std::max<size_t>(1, std::min<size_t>(static_cast<size_t>(std::max(threads, 1)), n));
    std::atomic<size_t> next{0};
    auto run_worker = [&] {
        for (size_t i = next.fetch_add(1); i < n; i = next.fetch_add(1)) {
            const Vec h_q = project(model.encoder, raw_questions[i]);
            const ExplorationResult result =
                explore(kg, embs, model.explorer, h_q, examples[i].topic_entities);
            const uint32_t top = result.argmax_candidate();
            hit[i] = std::find(examples[i].answers.begin(), examples[i].answers.end(), top) !=
                             examples[i].answers.end()
                         ? 1
                         : 0;
        }
    };
    if (workers == 1) {
        run_worker();
    } else {
        std::vector<std::thread> pool;
        for (size_t w = 0; w < workers; ++w) pool.emplace_back(run_worker);
        for (std::thread& t : pool) t.join();
    }
    size_t hits = std::accumulate(hit.begin(), hit.end(), size_t{0});
    return n == 0 ? 0.0 : static_cast<double>(hits) / static_cast<double>(n);
}

namespace {

// Keeps the first min(L) step blocks of `from`, fresh-initializes the rest.
Model adapt_initial(const Model& from, const TrainConfig& config) {
    if (from.d != config.d || from.d_L != config.d_L) {
        throw DataError("initial checkpoint shape mismatch: d/d_L differ from config");
    }
    if (from.explorer.num_steps == config.num_steps) {
        Model m = from;
        m.explorer.top_k = config.top_k;
        return m;
    }
    Model m = random_init(config.d, config.d_L, config.num_steps, config.top_k, config.seed);
    m.encoder = from.encoder;
    m.explorer.scorer = from.explorer.scorer;
    const size_t shared = std::min(from.explorer.steps.size(), m.explorer.steps.size());
    for (size_t i = 0; i < shared; ++i) m.explorer.steps[i] = from.explorer.steps[i];
    return m;
}

} // namespace

TrainOutcome train(const KnowledgeGraph& kg, const EmbeddingProvider& provider,
                   const std::vector<TrainExample>& train_set,
                   const std::vector<TrainExample>& val_set, const TrainConfig& config,
                   const Model* initial) {
    if (train_set.empty()) throw std::invalid_argument("empty training set");
    if (config.batch_size < 1) throw std::invalid_argument("batch_size must be >= 1");
    if (config.max_epochs < 1) throw std::invalid_argument("max_epochs must be >= 1");
    if (config.validation_metric != "hits1" && config.validation_metric != "loss") {
        throw ConfigError("validation_metric must be 'hits1' or 'loss'");
    }
    if (static_cast<size_t>(provider.dim()) != static_cast<size_t>(config.d_L)) {
        throw ConfigError("provider dimension does not match configured d_L");
    }

    TrainOutcome out;
    out.model = initial ? adapt_initial(*initial, config)
                        : random_init(config.d, config.d_L, config.num_steps, config.top_k, config.seed);
    out.adam.m = zeros_like(out.model);
    out.adam.v = zeros_like(out.model);
    out.adam.t = 0;

    AdamConfig adam;
    adam.learning_rate = config.learning_rate;
    adam.weight_decay = config.weight_decay;

    const FeatureCache cache = build_feature_cache(kg, provider, train_set);
    std::vector<Vec> val_raw;
    val_raw.reserve(val_set.size());
    for (const TrainExample& ex : val_set) val_raw.push_back(provider.encode(ex.question));

    Rng rng(config.seed);
    std::vector<size_t> order(train_set.size());
    std::iota(order.begin(), order.end(), size_t{0});

    Model best_model = out.model;
    AdamState best_adam = out.adam;
    double best_metric = 0.0;
    bool have_best = false;

    for (int epoch = 0; epoch < config.max_epochs; ++epoch) {
        rng.shuffle(order);
        EpochStats es;
        size_t answer_terms = 0, missed = 0;
        for (size_t start = 0; start < order.size(); start += static_cast<size_t>(config.batch_size)) {
            const size_t end = std::min(order.size(), start + static_cast<size_t>(config.batch_size));
            std::vector<TrainExample> batch;
            std::vector<Vec> raw;
            batch.reserve(end - start);
            raw.reserve(end - start);
            for (size_t i = start; i < end; ++i) {
                batch.push_back(train_set[order[i]]);
                raw.push_back(cache.raw_questions[order[i]]);
            }
            Model grads = zeros_like(out.model);
            const LossStats stats =
                batch_gradients(kg, out.model, cache.relations, batch, raw, grads, config.threads);
            adam_step(out.model, grads, out.adam, adam);
            es.train_loss += stats.loss;
            answer_terms += stats.answer_terms;
            missed += stats.missed;
        }
        es.missed_rate =
            answer_terms == 0 ? 0.0 : static_cast<double>(missed) / static_cast<double>(answer_terms);

        if (!val_set.empty()) {
            es.val_hits1 =
                explore_hits1(kg, out.model, cache.relations, val_set, val_raw, config.threads);
            const LossStats vl = batch_loss(kg, out.model, cache.relations, val_set, val_raw);
            es.val_loss = vl.loss / static_cast<double>(val_set.size());
            const double metric = config.validation_metric == "hits1" ? es.val_hits1 : -es.val_loss;
            if (!have_best || metric > best_metric) {
                have_best = true;
                best_metric = metric;
                best_model = out.model;
                best_adam = out.adam;
                out.best_epoch = epoch;
            }
        }
        out.epochs.push_back(es);
        out.loss_curve.push_back(es.train_loss);
    }

    if (have_best) {
        out.model = best_model;
        out.adam = best_adam;
    }
    return out;
}

} // namespace etd
