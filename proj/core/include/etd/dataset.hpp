#pragma once

#include "etd/kg.hpp"
#include "etd/trainer.hpp"

#include <string>
#include <vector>

namespace etd {

// One dataset row, still in surface form.
struct QaExample {
    std::string question;
    std::vector<std::string> topic_entities;
    std::vector<std::string> answers;
};

// JSONL, one object per line with keys question/topic_entities/answers.
// Blank lines are ignored; anything else malformed names its line number.
std::vector<QaExample> load_dataset(const std::string& path);

struct ResolvedDataset {
    std::vector<TrainExample> examples; // ids against the graph
    std::vector<QaExample> sources;     // parallel surface forms
    size_t skipped = 0;                 // rows with an unresolvable topic entity
};

// Rows whose topic entities all resolve survive; answers resolve best-effort
// (an answer outside the graph just cannot contribute a training signal).
ResolvedDataset resolve_dataset(const KnowledgeGraph& kg, const std::vector<QaExample>& rows);

void write_dataset(const std::string& path, const std::vector<QaExample>& rows);

} // namespace etd
