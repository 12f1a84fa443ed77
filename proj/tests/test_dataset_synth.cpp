#include <doctest.h>

#include "etd/dataset.hpp"
#include "etd/errors.hpp"
#include "etd/kg.hpp"
#include "etd/synth.hpp"

#include <unistd.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <string>
#include <vector>

using namespace etd;

namespace {

struct TempDir {
    std::filesystem::path path;

    TempDir() {
        path = std::filesystem::temp_directory_path() /
               ("etd_dataset_test_" + std::to_string(getpid()));
        std::filesystem::create_directories(path);
    }
    ~TempDir() { std::filesystem::remove_all(path); }

    std::string file(const std::string& name) const { return (path / name).string(); }
};

void write_text(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::trunc);
    out << content;
}

std::string read_text(const std::string& path) {
    std::ifstream in(path);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// Name-level pattern walk over the emitted triple list, independent of the
// generator's internal adjacency.
std::set<std::string> follow_pattern(const std::vector<std::array<std::string, 3>>& triples,
                                     const std::string& topic,
                                     const std::vector<std::string>& pattern) {
    std::map<std::string, std::vector<std::pair<std::string, std::string>>> adj;
    for (const auto& [h, r, t] : triples) adj[h].push_back({r, t});
    std::set<std::string> layer{topic};
    for (const std::string& rel : pattern) {
        std::set<std::string> next;
        for (const std::string& e : layer) {
            const auto it = adj.find(e);
            if (it == adj.end()) continue;
            for (const auto& [r, t] : it->second) {
                if (r == rel) next.insert(t);
            }
        }
        layer = std::move(next);
        if (layer.empty()) break;
    }
    return layer;
}

bool same_examples(const std::vector<QaExample>& a, const std::vector<QaExample>& b) {
    if (a.size() != b.size()) return false;
    for (size_t i = 0; i < a.size(); ++i) {
        if (a[i].question != b[i].question || a[i].topic_entities != b[i].topic_entities ||
            a[i].answers != b[i].answers) {
            return false;
        }
    }
    return true;
}

} // namespace

TEST_CASE("jsonl datasets load with blank lines ignored") {
    TempDir dir;
    const std::string path = dir.file("qa.jsonl");
    write_text(path,
               R"({"question":"who likes b?","topic_entities":["b"],"answers":["a"]})"
               "\n\n"
               R"({"question":"multi","topic_entities":["a","c"],"answers":[]})"
               "\n");

    const std::vector<QaExample> rows = load_dataset(path);
    REQUIRE(rows.size() == 2);
    CHECK(rows[0].question == "who likes b?");
    CHECK(rows[0].topic_entities == std::vector<std::string>{"b"});
    CHECK(rows[0].answers == std::vector<std::string>{"a"});
    CHECK(rows[1].topic_entities == std::vector<std::string>{"a", "c"});
    CHECK(rows[1].answers.empty());
}

TEST_CASE("malformed dataset lines name the file and line number") {
    TempDir dir;
    const std::string path = dir.file("bad.jsonl");

    SUBCASE("invalid json") {
        write_text(path, R"({"question":"ok","topic_entities":["a"],"answers":[]})"
                         "\n{oops\n");
        CHECK_THROWS_WITH_AS(load_dataset(path), doctest::Contains("bad.jsonl:2"), DataError);
    }
    SUBCASE("not an object") {
        write_text(path, "[1,2,3]\n");
        CHECK_THROWS_WITH_AS(load_dataset(path), doctest::Contains("not a JSON object"), DataError);
    }
    SUBCASE("missing question") {
        write_text(path, R"({"topic_entities":["a"],"answers":[]})" "\n");
        CHECK_THROWS_WITH_AS(load_dataset(path), doctest::Contains("question"), DataError);
    }
    SUBCASE("non-array topics") {
        write_text(path, R"({"question":"q","topic_entities":"a","answers":[]})" "\n");
        CHECK_THROWS_WITH_AS(load_dataset(path), doctest::Contains("topic_entities"), DataError);
    }
    SUBCASE("non-string answer entry") {
        write_text(path, R"({"question":"q","topic_entities":["a"],"answers":[3]})" "\n");
        CHECK_THROWS_WITH_AS(load_dataset(path), doctest::Contains("answers"), DataError);
    }
    SUBCASE("missing file") {
        CHECK_THROWS_AS(load_dataset(dir.file("absent.jsonl")), DataError);
    }
}

TEST_CASE("resolution keeps rows whose topics all intern") {
    const KnowledgeGraph kg = KnowledgeGraph::from_rows({
        {"a", "likes", "b"},
        {"b", "likes", "c"},
    });
    std::vector<QaExample> rows(4);
    rows[0] = {"good", {"a"}, {"c", "zz"}};        // unknown answer dropped, row kept
    rows[1] = {"bad topic", {"a", "zz"}, {"c"}};   // one unresolvable topic kills the row
    rows[2] = {"no topics", {}, {"c"}};            // empty topic list kills the row
    rows[3] = {"two topics", {"b", "a"}, {"b"}};

    const ResolvedDataset resolved = resolve_dataset(kg, rows);
    CHECK(resolved.skipped == 2);
    REQUIRE(resolved.examples.size() == 2);
    REQUIRE(resolved.sources.size() == 2);

    CHECK(resolved.examples[0].question == "good");
    CHECK(resolved.examples[0].topic_entities == std::vector<uint32_t>{*kg.entity_id("a")});
    CHECK(resolved.examples[0].answers == std::vector<uint32_t>{*kg.entity_id("c")});
    CHECK(resolved.sources[0].question == "good");

    CHECK(resolved.examples[1].question == "two topics");
    CHECK(resolved.examples[1].topic_entities ==
          std::vector<uint32_t>{*kg.entity_id("b"), *kg.entity_id("a")});
    CHECK(resolved.sources[1].answers == std::vector<std::string>{"b"});
}

TEST_CASE("dataset writes are deterministic and round-trip") {
    TempDir dir;
    const std::vector<QaExample> rows = {
        {"q with \"quotes\" and\ttabs", {"t1", "t2"}, {"a1"}},
        {"unicode köln", {"k"}, {}},
    };
    const std::string first = dir.file("one.jsonl");
    const std::string second = dir.file("two.jsonl");
    write_dataset(first, rows);
    write_dataset(second, rows);
    CHECK(read_text(first) == read_text(second));
    CHECK(same_examples(load_dataset(first), rows));

    CHECK_THROWS_WITH_AS(write_dataset(dir.file("no/such/dir/x.jsonl"), rows),
                         doctest::Contains("cannot open"), DataError);
}

TEST_CASE("synthetic generation is deterministic in the spec") {
    SynthSpec spec;
    spec.entities = 80;
    spec.relations = 4;
    spec.train_questions = 12;
    spec.test_questions = 4;
    spec.distractor_density = 3.0;
    spec.seed = 21;

    const SynthData a = gen_synthetic(spec);
    const SynthData b = gen_synthetic(spec);
    CHECK(a.triples == b.triples);
    CHECK(a.pattern == b.pattern);
    CHECK(same_examples(a.train, b.train));
    CHECK(same_examples(a.test, b.test));

    spec.seed = 22;
    const SynthData c = gen_synthetic(spec);
    CHECK(a.triples != c.triples);
}

TEST_CASE("synthetic triples are sorted and free of duplicates") {
    SynthSpec spec;
    spec.entities = 60;
    spec.relations = 5;
    spec.train_questions = 10;
    spec.test_questions = 2;
    spec.distractor_density = 6.0;
    spec.seed = 3;

    const SynthData data = gen_synthetic(spec);
    REQUIRE(!data.triples.empty());
    // Zero-padded entity names and single-digit relation ids make the
    // lexicographic order match the generator's numeric one.
    CHECK(std::is_sorted(data.triples.begin(), data.triples.end()));
    CHECK(std::adjacent_find(data.triples.begin(), data.triples.end()) == data.triples.end());

    CHECK(data.pattern == std::vector<std::string>{"rel0", "rel1"});
    CHECK(data.train.size() == 10);
    CHECK(data.test.size() == 2);
}

TEST_CASE("every question owns a unique topic entity") {
    SynthSpec spec;
    spec.entities = 70;
    spec.relations = 3;
    spec.train_questions = 20;
    spec.test_questions = 10;
    spec.seed = 5;

    const SynthData data = gen_synthetic(spec);
    std::set<std::string> topics;
    for (const std::vector<QaExample>* split : {&data.train, &data.test}) {
        for (const QaExample& ex : *split) {
            REQUIRE(ex.topic_entities.size() == 1);
            CHECK(topics.insert(ex.topic_entities[0]).second);
            CHECK(ex.question.find(ex.topic_entities[0]) != std::string::npos);
        }
    }
    CHECK(topics.size() == 30);
}

TEST_CASE("gold answers equal a pattern walk over the emitted triples") {
    SynthSpec spec;
    spec.entities = 50;
    spec.relations = 4;
    spec.pattern_hops = 2;
    spec.train_questions = 8;
    spec.test_questions = 4;
    spec.distractor_density = 5.0; // dense enough that distractors extend some walks
    spec.seed = 13;

    const SynthData data = gen_synthetic(spec);
    for (const std::vector<QaExample>* split : {&data.train, &data.test}) {
        for (const QaExample& ex : *split) {
            const std::set<std::string> reached =
                follow_pattern(data.triples, ex.topic_entities[0], data.pattern);
            CHECK(std::set<std::string>(ex.answers.begin(), ex.answers.end()) == reached);
            CHECK(!ex.answers.empty());
        }
    }
}

TEST_CASE("single-hop patterns and hop slack are honored") {
    SynthSpec spec;
    spec.entities = 40;
    spec.relations = 3;
    spec.pattern_hops = 1;
    spec.hop_budget = 2;
    spec.train_questions = 6;
    spec.test_questions = 2;
    spec.seed = 9;

    const SynthData data = gen_synthetic(spec);
    CHECK(data.pattern == std::vector<std::string>{"rel0"});
    for (const QaExample& ex : data.train) {
        CHECK(std::set<std::string>(ex.answers.begin(), ex.answers.end()) ==
              follow_pattern(data.triples, ex.topic_entities[0], data.pattern));
    }
}

TEST_CASE("impossible synthetic specs are rejected") {
    SynthSpec spec;
    spec.entities = 40;
    spec.relations = 3;
    spec.train_questions = 6;
    spec.test_questions = 2;

    SynthSpec bad = spec;
    bad.pattern_hops = 0;
    CHECK_THROWS_AS(gen_synthetic(bad), ConfigError);

    bad = spec;
    bad.pattern_hops = 3;
    bad.hop_budget = 2;
    CHECK_THROWS_AS(gen_synthetic(bad), ConfigError);

    bad = spec;
    bad.relations = 1;
    bad.pattern_hops = 2;
    bad.hop_budget = 2;
    CHECK_THROWS_AS(gen_synthetic(bad), ConfigError);

    bad = spec;
    bad.entities = 7;
    CHECK_THROWS_AS(gen_synthetic(bad), ConfigError);

    bad = spec;
    bad.train_questions = 0;
    bad.test_questions = 0;
    CHECK_THROWS_AS(gen_synthetic(bad), ConfigError);
}

TEST_CASE("written synthetic corpora load back through the normal readers") {
    TempDir dir;
    SynthSpec spec;
    spec.entities = 64;
    spec.relations = 3;
    spec.train_questions = 10;
    spec.test_questions = 5;
    spec.seed = 31;

    const SynthData data = gen_synthetic(spec);
    const std::string out = (dir.path / "corpus").string();
    write_synth(data, out);

    const KnowledgeGraph kg = KnowledgeGraph::load_triples(out + "/triples.tsv");
    CHECK(kg.base_triple_count() == data.triples.size());

    const std::vector<QaExample> train = load_dataset(out + "/train.jsonl");
    const std::vector<QaExample> test = load_dataset(out + "/test.jsonl");
    CHECK(same_examples(train, data.train));
    CHECK(same_examples(test, data.test));

    // Every topic and every answer came from the triple file, so resolution
    // loses nothing.
    const ResolvedDataset resolved = resolve_dataset(kg, train);
    CHECK(resolved.skipped == 0);
    REQUIRE(resolved.examples.size() == train.size());
    for (size_t i = 0; i < train.size(); ++i) {
        CHECK(resolved.examples[i].answers.size() == train[i].answers.size());
    }
}
