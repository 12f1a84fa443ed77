#include "etd/dataset.hpp"

#include "etd/errors.hpp"

#include <json.hpp>

#include <fstream>

namespace etd {

namespace {

std::vector<std::string> string_list(const nlohmann::json& obj, const char* key,
                                     const std::string& where) {
    if (!obj.contains(key) || !obj[key].is_array()) {
        throw DataError(where + ": missing or non-array field '" + key + "'");
    }
    std::vector<std::string> out;
    for (const auto& item : obj[key]) {
        if (!item.is_string()) throw DataError(where + ": field '" + key + "' holds a non-string");
        out.push_back(item.get<std::string>());
    }
    return out;
}

} // namespace

std::vector<QaExample> load_dataset(const std::string& path) {
    std::ifstream file(path);
    if (!file) throw DataError(path + ": cannot open dataset");

    std::vector<QaExample> rows;
    std::string line;
    size_t line_no = 0;
    while (std::getline(file, line)) {
        ++line_no;
        if (line.empty()) continue;
        const std::string where = path + ":" + std::to_string(line_no);
        nlohmann::json obj;
        try {
            obj = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception& e) {
            throw DataError(where + ": " + e.what());
        }
        if (!obj.is_object()) throw DataError(where + ": line is not a JSON object");
        if (!obj.contains("question") || !obj["question"].is_string()) {
            throw DataError(where + ": missing or non-string field 'question'");
        }
        QaExample row;
        row.question = obj["question"].get<std::string>();
        row.topic_entities = string_list(obj, "topic_entities", where);
        row.answers = string_list(obj, "answers", where);
        rows.push_back(std::move(row));
    }
    return rows;
}

ResolvedDataset resolve_dataset(const KnowledgeGraph& kg, const std::vector<QaExample>& rows) {
    ResolvedDataset out;
    for (const QaExample& row : rows) {
        TrainExample ex;
        ex.question = row.question;
        bool ok = !row.topic_entities.empty();
        for (const std::string& name : row.topic_entities) {
            const auto id = kg.entity_id(name);
            if (!id) {
                ok = false;
                break;
            }
            ex.topic_entities.push_back(*id);
        }
        if (!ok) {
            ++out.skipped;
            continue;
        }
        for (const std::string& name : row.answers) {
            if (const auto id = kg.entity_id(name)) ex.answers.push_back(*id);
        }
        out.examples.push_back(std::move(ex));
        out.sources.push_back(row);
    }
    return out;
}

void write_dataset(const std::string& path, const std::vector<QaExample>& rows) {
    std::ofstream file(path, std::ios::trunc);
    if (!file) throw DataError(path + ": cannot open dataset for writing");
    for (const QaExample& row : rows) {
        const nlohmann::json obj = {
            {"question", row.question},
            {"topic_entities", row.topic_entities},
            {"answers", row.answers},
        };
        file << obj.dump() << "\n";
    }
    if (!file) throw DataError(path + ": dataset write failed");
}

} // namespace etd
