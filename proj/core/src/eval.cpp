#include "etd/eval.hpp"

#include "etd/errors.hpp"
#include "etd/evidence.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <map>
#include <stdexcept>
#include <thread>

namespace etd {

double eval_hits1(const KnowledgeGraph& kg, const std::vector<uint32_t>& predictions,
                  const std::vector<std::vector<std::string>>& gold) {
    if (predictions.size() != gold.size()) {
        throw std::invalid_argument("eval_hits1: one prediction per question required");
    }
    if (predictions.empty()) return 0.0;
    size_t hits = 0;
    for (size_t i = 0; i < predictions.size(); ++i) {
        const std::string name = normalize_answer(kg.entity_name(predictions[i]));
        for (const std::string& g : gold[i]) {
            if (normalize_answer(g) == name) {
                ++hits;
                break;
            }
        }
    }
    return static_cast<double>(hits) / static_cast<double>(predictions.size());
}

namespace {

bool name_hits(const std::string& predicted, const std::vector<std::string>& gold) {
    const std::string norm = normalize_answer(predicted);
    for (const std::string& g : gold) {
        if (normalize_answer(g) == norm) return true;
    }
    return false;
}

struct QuestionOutcome {
    QuestionRecord record;
    std::vector<size_t> retained_edges;
    std::vector<size_t> considered_edges;
    std::vector<size_t> frontier_size;
    std::vector<size_t> considered_candidates;
    size_t gold_resolved = 0;
    size_t gold_missed = 0;
    double seconds_explore = 0.0;
    double seconds_llm = 0.0;
};

} // namespace

EvalReport run_eval(const KnowledgeGraph& kg, const EmbeddingProvider& provider, const Model& model,
                    const ResolvedDataset& dataset, const GatewayConfig& gateway,
                    const EvalOptions& options) {
    EvalReport report;
    report.skipped = dataset.skipped;
    const size_t n = dataset.examples.size();
    if (n == 0) return report;
    if (options.top_n < 1) throw std::invalid_argument("run_eval: top_n must be >= 1");

    const std::vector<Vec> relation_embs =
        encode_relations(model.encoder, collect_relation_features(provider, kg));
    const std::string_view task =
        options.task_description.empty() ? kTaskDescriptionV1 : std::string_view(options.task_description);

    std::vector<QuestionOutcome> outcomes(n);
    std::atomic<size_t> next{0};

    auto run_worker = [&] {
        for (size_t i = next.fetch_add(1); i < n; i = next.fetch_add(1)) {
            const TrainExample& ex = dataset.examples[i];
            const QaExample& src = dataset.sources[i];
            QuestionOutcome& out = outcomes[i];
            out.record.question = src.question;
            out.record.gold = src.answers;

            const auto t0 = std::chrono::steady_clock::now();
            const Vec h_q = project(model.encoder, provider.encode(ex.question));
            const ExplorationResult result =
                explore(kg, relation_embs, model.explorer, h_q, ex.topic_entities);
            const auto t1 = std::chrono::steady_clock::now();
            out.seconds_explore = std::chrono::duration<double>(t1 - t0).count();

            for (const StepRecord& step : result.steps) {
                out.retained_edges.push_back(step.edges.size());
                out.considered_edges.push_back(step.considered_edges);
                out.frontier_size.push_back(step.frontier_size);
                out.considered_candidates.push_back(step.considered_candidates);
            }
            out.record.dead_end = result.dead_end;

            for (uint32_t a : ex.answers) {
                ++out.gold_resolved;
                if (!result.index_of(a)) ++out.gold_missed;
            }

            const uint32_t top = result.argmax_candidate();
            out.record.explore_predicted = kg.entity_name(top);
            out.record.explore_correct = name_hits(out.record.explore_predicted, src.answers);

            if (!options.with_llm) {
                out.record.predicted = out.record.explore_predicted;
                out.record.method = "explore-only";
                out.record.correct = out.record.explore_correct;
                continue;
            }

            std::vector<CandidateOffer> offered;
            for (size_t idx : select_top_n(result, options.top_n)) {
                CandidateOffer offer;
                offer.entity = result.candidates[idx];
                offer.name = kg.entity_name(offer.entity);
                offer.probability = result.probabilities[idx];
                offer.facts = render_path(backtrack(result, offer.entity), kg);
                offered.push_back(std::move(offer));
            }
            const PromptBundle prompt = build_prompt(ex.question, offered, options.variant, task);
            const Determination det = determine(gateway, prompt);
            const auto t2 = std::chrono::steady_clock::now();
            out.seconds_llm = std::chrono::duration<double>(t2 - t1).count();

            out.record.predicted = kg.entity_name(det.chosen);
            out.record.method = det.method;
            out.record.correct = name_hits(out.record.predicted, src.answers);
        }
    };

    const size_t workers =
        std::max<size_t>(1, std::min<size_t>(static_cast<size_t>(std::max(options.threads, 1)), n));
    if (workers == 1) {
        run_worker();
    } else {
        std::vector<std::thread> pool;
        for (size_t w = 0; w < workers; ++w) pool.emplace_back(run_worker);
        for (std::thread& t : pool) t.join();
    }

    report.questions = n;
    size_t hits = 0, explore_hits = 0, gold_total = 0, gold_missed = 0;
    std::vector<double> retained, considered, frontier, cand;
    std::vector<size_t> counts;
    for (const QuestionOutcome& out : outcomes) {
        report.records.push_back(out.record);
        hits += out.record.correct ? 1 : 0;
        explore_hits += out.record.explore_correct ? 1 : 0;
        gold_total += out.gold_resolved;
        gold_missed += out.gold_missed;
        report.seconds_explore += out.seconds_explore;
        report.seconds_llm += out.seconds_llm;
        for (size_t s = 0; s < out.retained_edges.size(); ++s) {
            if (s >= retained.size()) {
                retained.resize(s + 1, 0.0);
                considered.resize(s + 1, 0.0);
                frontier.resize(s + 1, 0.0);
                cand.resize(s + 1, 0.0);
                counts.resize(s + 1, 0);
            }
            retained[s] += static_cast<double>(out.retained_edges[s]);
            considered[s] += static_cast<double>(out.considered_edges[s]);
            frontier[s] += static_cast<double>(out.frontier_size[s]);
            cand[s] += static_cast<double>(out.considered_candidates[s]);
            counts[s] += 1;
        }
    }
    report.hits1 = static_cast<double>(hits) / static_cast<double>(n);
    report.explore_only_hits1 = static_cast<double>(explore_hits) / static_cast<double>(n);
    report.missed_answer_rate =
        gold_total == 0 ? 0.0 : static_cast<double>(gold_missed) / static_cast<double>(gold_total);
    for (size_t s = 0; s < retained.size(); ++s) {
        const double c = static_cast<double>(counts[s]);
        report.mean_retained_edges.push_back(retained[s] / c);
        report.mean_considered_edges.push_back(considered[s] / c);
        report.mean_frontier_size.push_back(frontier[s] / c);
        report.mean_considered_candidates.push_back(cand[s] / c);
    }
    return report;
}

PruneStats prune_stats(const std::vector<ExplorationResult>& results) {
    PruneStats stats;
    std::vector<double> retained, considered, frontier, cand;
    std::vector<size_t> counts;
    for (const ExplorationResult& result : results) {
        for (size_t s = 0; s < result.steps.size(); ++s) {
            const StepRecord& step = result.steps[s];
            if (s >= retained.size()) {
                retained.resize(s + 1, 0.0);
                considered.resize(s + 1, 0.0);
                frontier.resize(s + 1, 0.0);
                cand.resize(s + 1, 0.0);
                counts.resize(s + 1, 0);
            }
            retained[s] += static_cast<double>(step.edges.size());
            considered[s] += static_cast<double>(step.considered_edges);
            frontier[s] += static_cast<double>(step.frontier_size);
            cand[s] += static_cast<double>(step.considered_candidates);
            counts[s] += 1;

            // Retained edges are in (tail, head, relation) order; count per
            // head through a map to find the per-head maximum.
            std::map<uint32_t, size_t> per_head;
            for (const RetainedEdge& e : step.edges) ++per_head[e.head];
            for (const auto& [head, count] : per_head) {
                (void)head;
                stats.max_retained_per_head = std::max(stats.max_retained_per_head, count);
            }
        }
    }
    for (size_t s = 0; s < retained.size(); ++s) {
        const double c = static_cast<double>(counts[s]);
        stats.mean_retained_edges.push_back(retained[s] / c);
        stats.mean_considered_edges.push_back(considered[s] / c);
        stats.mean_frontier_size.push_back(frontier[s] / c);
        stats.mean_considered_candidates.push_back(cand[s] / c);
    }
    return stats;
}

} // namespace etd
