#pragma once

#include "etd/explorer.hpp"

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace etd {

enum class PromptVariant { mcp, wo_mcp, wo_cand, wo_prob, wo_path };

// Throws ConfigError on anything outside {mcp, wo_mcp, wo_cand, wo_prob, wo_path}.
PromptVariant parse_variant(const std::string& name);
std::string_view variant_name(PromptVariant variant);

// Instruction paragraph sent as the system message. Versioned so recorded
// responses stay replayable if the wording ever changes.
inline constexpr std::string_view kTaskDescriptionV1 =
    "Given a question, and the reference answers with their correct probabilities and associated "
    "retrieved knowledge graph triples (entity, relation, entity) as related facts, you are asked "
    "to answer the question with this information and your own knowledge. If the reference answers "
    "contain the correct answer, please output the label and content of the answer; If not, please "
    "answer the question based on your own knowledge.";

struct CandidateOffer {
    uint32_t entity = 0;
    std::string name;
    double probability = 0.0;
    std::vector<std::string> facts; // rendered "(head, relation, tail)" strings
};

struct PromptBundle {
    PromptVariant variant = PromptVariant::mcp;
    std::string task_description;
    std::string body;
    std::vector<CandidateOffer> offered; // offer i carries label 'A'+i

    std::string full_text() const { return task_description + "\n\n" + body; }
};

// Shortest decimal within 3 places, round half up: 0.7, 0.0, 0.285, 0.996.
std::string format_probability(double p);

// Indices of the top-n candidates by probability (ties: lower entity id).
// Returns all candidates when fewer than n exist; throws DataError when the
// result has no candidates.
std::vector<size_t> select_top_n(const ExplorationResult& result, size_t n);

// Renders the question and offered candidates in the requested layout. The
// mcp layout labels each candidate with its probability and fact group; the
// wo_* layouts drop one ingredient each.
PromptBundle build_prompt(const std::string& question, const std::vector<CandidateOffer>& offered,
                          PromptVariant variant, std::string_view task_description = kTaskDescriptionV1);

} // namespace etd
