#pragma once

#include "etd/dataset.hpp"
#include "etd/gateway.hpp"
#include "etd/prompter.hpp"
#include "etd/trainer.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace etd {

// Fraction of questions whose predicted entity's normalized name matches any
// normalized gold name. Throws on length mismatch.
double eval_hits1(const KnowledgeGraph& kg, const std::vector<uint32_t>& predictions,
                  const std::vector<std::vector<std::string>>& gold);

struct QuestionRecord {
    std::string question;
    std::string predicted;         // full pipeline
    std::string explore_predicted; // explorer argmax
    std::string method;            // label | name-match | fallback-top1 | explore-only
    std::vector<std::string> gold;
    bool correct = false;
    bool explore_correct = false;
    bool dead_end = false;
};

struct EvalReport {
    size_t questions = 0;
    size_t skipped = 0;
    double hits1 = 0.0;
    double explore_only_hits1 = 0.0;
    double missed_answer_rate = 0.0; // resolvable gold answers absent from candidates
    // Index ell-1 = step ell means over questions.
    std::vector<double> mean_retained_edges;
    std::vector<double> mean_considered_edges;
    std::vector<double> mean_frontier_size;
    std::vector<double> mean_considered_candidates;
    double seconds_explore = 0.0;
    double seconds_llm = 0.0;
    std::vector<QuestionRecord> records;
};

struct EvalOptions {
    bool with_llm = true; // false = explore-only report
    size_t top_n = 3;
    PromptVariant variant = PromptVariant::mcp;
    std::string task_description; // empty = built-in
    int threads = 1;
};

// Full pipeline over resolved examples: explore, prompt, determine, score.
// The per-question loop runs on a bounded worker pool; aggregation order is
// fixed by question index.
EvalReport run_eval(const KnowledgeGraph& kg, const EmbeddingProvider& provider, const Model& model,
                    const ResolvedDataset& dataset, const GatewayConfig& gateway,
                    const EvalOptions& options);

// Per-step means over finished explorations, for pruning comparisons.
struct PruneStats {
    std::vector<double> mean_retained_edges;
    std::vector<double> mean_considered_edges;
    std::vector<double> mean_frontier_size;
    std::vector<double> mean_considered_candidates;
    size_t max_retained_per_head = 0;
};

PruneStats prune_stats(const std::vector<ExplorationResult>& results);

} // namespace etd
