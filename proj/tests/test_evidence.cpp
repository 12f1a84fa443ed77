#include <doctest.h>

#include "etd/evidence.hpp"
#include "etd/explorer.hpp"
#include "etd/trainer.hpp"

#include "support.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>
#include <vector>

using namespace etd;

namespace {

// Full-scan argmax in-edge: highest alpha, then lower relation, then lower head.
const RetainedEdge* scan_best(const StepRecord& record, uint32_t entity) {
    const RetainedEdge* best = nullptr;
    for (const RetainedEdge& e : record.edges) {
        if (e.tail != entity) continue;
        if (!best) {
            best = &e;
        } else if (e.alpha != best->alpha) {
            if (e.alpha > best->alpha) best = &e;
        } else if (e.relation != best->relation) {
            if (e.relation < best->relation) best = &e;
        } else if (e.head < best->head) {
            best = &e;
        }
    }
    return best;
}

EvidencePath oracle_backtrack(const ExplorationResult& result, uint32_t candidate) {
    EvidencePath path;
    path.candidate = candidate;
    size_t start = 0;
    for (size_t l = result.steps.size(); l >= 1; --l) {
        if (scan_best(result.steps[l - 1], candidate)) {
            start = l;
            break;
        }
    }
    path.partial = start < result.steps.size();
    uint32_t cursor = candidate;
    for (size_t l = start; l >= 1; --l) {
        const RetainedEdge* e = scan_best(result.steps[l - 1], cursor);
        REQUIRE(e != nullptr);
        path.steps.push_back(*e);
        cursor = e->head;
    }
    std::reverse(path.steps.begin(), path.steps.end());
    return path;
}

bool same_edge(const RetainedEdge& a, const RetainedEdge& b) {
    return a.head == b.head && a.relation == b.relation && a.tail == b.tail && a.alpha == b.alpha;
}

bool edge_recorded(const StepRecord& record, const RetainedEdge& edge) {
    return std::any_of(record.edges.begin(), record.edges.end(),
                       [&](const RetainedEdge& e) { return same_edge(e, edge); });
}

struct Fixture {
    KnowledgeGraph kg;
    Model model;
    std::vector<Vec> relation_embs;
    Vec h_query;
    std::vector<uint32_t> topics;

    Fixture(size_t entities, size_t relations, size_t fanout, uint64_t seed, int num_steps,
            int top_k) {
        kg = KnowledgeGraph::from_rows(testsupport::random_rows(entities, relations, fanout, seed));
        testsupport::RandomProvider provider(16, seed + 5);
        model = random_init(6, 16, num_steps, top_k, seed + 1);
        relation_embs = encode_relations(model.encoder, collect_relation_features(provider, kg));
        h_query = project(model.encoder, provider.encode("trace the evidence"));
        Rng rng(seed ^ 0x5eed);
        topics = {static_cast<uint32_t>(rng.next_below(kg.entity_count()))};
    }

    ExplorationResult run() const {
        return explore(kg, relation_embs, model.explorer, h_query, topics);
    }
};

void zero_attention(Model& model) {
    for (StepParams& sp : model.explorer.steps) {
        std::fill(sp.w_head.begin(), sp.w_head.end(), 0.0);
        std::fill(sp.w_rel.begin(), sp.w_rel.end(), 0.0);
        std::fill(sp.w_query.begin(), sp.w_query.end(), 0.0);
        std::fill(sp.w_qrel.begin(), sp.w_qrel.end(), 0.0);
    }
}

} // namespace

TEST_CASE("backtrack matches the full-scan argmax walk on random graphs") {
    for (uint64_t seed : {3u, 14u, 159u, 2653u}) {
        for (int top_k : {2, 3, 100}) {
            const Fixture fx(20, 4, 3, seed, 2, top_k);
            const ExplorationResult result = fx.run();
            REQUIRE(!result.candidates.empty());
            for (uint32_t candidate : result.candidates) {
                const EvidencePath got = backtrack(result, candidate);
                const EvidencePath want = oracle_backtrack(result, candidate);
                CHECK(got.candidate == candidate);
                CHECK(got.partial == want.partial);
                REQUIRE(got.steps.size() == want.steps.size());
                for (size_t i = 0; i < got.steps.size(); ++i) {
                    CHECK(same_edge(got.steps[i], want.steps[i]));
                }
            }
        }
    }
}

TEST_CASE("paths are connected chains of recorded edges ending at the candidate") {
    const Fixture fx(24, 3, 3, 77, 3, 4);
    const ExplorationResult result = fx.run();
    REQUIRE(!result.candidates.empty());

    for (uint32_t candidate : result.candidates) {
        const EvidencePath path = backtrack(result, candidate);
        if (path.steps.empty()) continue;
        CHECK(path.steps.back().tail == candidate);
        // A complete chain spans every executed step; a partial one stops early.
        if (!path.partial) CHECK(path.steps.size() == result.steps.size());
        if (path.partial) CHECK(path.steps.size() < result.steps.size());
        // The walk always bottoms out at a topic entity.
        CHECK(std::find(fx.topics.begin(), fx.topics.end(), path.steps.front().head) !=
              fx.topics.end());
        for (size_t i = 0; i + 1 < path.steps.size(); ++i) {
            CHECK(path.steps[i].tail == path.steps[i + 1].head);
        }
        // Step i of the chain is one of the edges retained at exploration step i.
        for (size_t i = 0; i < path.steps.size(); ++i) {
            CHECK(edge_recorded(result.steps[i], path.steps[i]));
        }
    }
}

TEST_CASE("equal alphas break ties by relation id then head id") {
    // Three in-edges of m: two share the first-seen relation, one uses the
    // second. Zeroed attention makes every alpha 0.5.
    const KnowledgeGraph kg = KnowledgeGraph::from_rows({
        {"t", "ra", "m"},
        {"u", "rb", "m"},
        {"v", "ra", "m"},
    });
    testsupport::RandomProvider provider(16, 9);
    Model model = random_init(6, 16, 1, 50, 9);
    zero_attention(model);
    const std::vector<Vec> embs =
        encode_relations(model.encoder, collect_relation_features(provider, kg));
    const Vec h_q = project(model.encoder, provider.encode("which one"));

    const uint32_t t = *kg.entity_id("t"), u = *kg.entity_id("u"), v = *kg.entity_id("v");
    const uint32_t m = *kg.entity_id("m");
    const ExplorationResult result = explore(kg, embs, model.explorer, h_q, {t, u, v});

    const EvidencePath path = backtrack(result, m);
    REQUIRE(path.steps.size() == 1);
    CHECK(path.steps[0].head == t); // relation ra beats rb; head t beats v
    CHECK(path.steps[0].relation == *kg.relation_id("ra"));
    CHECK(path.steps[0].tail == m);
    CHECK(!path.partial);
    CHECK(u < v); // interning order the tie-break relies on
}

TEST_CASE("rendered paths elide identity hops and flip reverse edges") {
    const KnowledgeGraph kg = KnowledgeGraph::from_rows({{"t", "r", "x"}});
    testsupport::RandomProvider provider(16, 4);
    Model model = random_init(6, 16, 2, 50, 4);
    zero_attention(model);
    const std::vector<Vec> embs =
        encode_relations(model.encoder, collect_relation_features(provider, kg));
    const Vec h_q = project(model.encoder, provider.encode("where to"));

    const uint32_t t = *kg.entity_id("t"), x = *kg.entity_id("x");
    const ExplorationResult result = explore(kg, embs, model.explorer, h_q, {t});

    // x is only reachable at step 2 by idling on t first: (t, identity, t)
    // then (t, r, x). The identity hop must not appear in the rendering.
    const EvidencePath to_x = backtrack(result, x);
    REQUIRE(to_x.steps.size() == 2);
    CHECK(kg.is_identity(to_x.steps[0].relation));
    CHECK(to_x.steps[0].head == t);
    CHECK(to_x.steps[0].tail == t);
    CHECK(kg.is_base(to_x.steps[1].relation));
    CHECK(render_path(to_x, kg) == std::vector<std::string>{"(t, r, x)"});

    // t's best chain bounces out and back: the reverse hop renders as the
    // base triple with swapped endpoints.
    const EvidencePath to_t = backtrack(result, t);
    REQUIRE(to_t.steps.size() == 2);
    CHECK(kg.is_base(to_t.steps[0].relation));
    CHECK(kg.is_reverse(to_t.steps[1].relation));
    CHECK(to_t.steps[1].head == x);
    CHECK(to_t.steps[1].tail == t);
    CHECK(render_path(to_t, kg) ==
          std::vector<std::string>{"(t, r, x)", "(t, r, x)"});
}

TEST_CASE("pruned-out candidates report partial chains") {
    // K=1 with uniform alphas funnels the frontier down a single edge per
    // step: a -> b -> d. b stays a candidate but leaves the frontier.
    const KnowledgeGraph kg = KnowledgeGraph::from_rows({
        {"a", "likes", "b"},
        {"a", "knows", "c"},
        {"b", "likes", "d"},
    });
    testsupport::RandomProvider provider(16, 8);
    Model model = random_init(6, 16, 2, 1, 8);
    zero_attention(model);
    const std::vector<Vec> embs =
        encode_relations(model.encoder, collect_relation_features(provider, kg));
    const Vec h_q = project(model.encoder, provider.encode("who"));

    const uint32_t a = *kg.entity_id("a"), b = *kg.entity_id("b");
    const uint32_t c = *kg.entity_id("c"), d = *kg.entity_id("d");
    const ExplorationResult result = explore(kg, embs, model.explorer, h_q, {a});
    CHECK(result.candidates == std::vector<uint32_t>{a, b, d});

    const EvidencePath full = backtrack(result, d);
    CHECK(!full.partial);
    REQUIRE(full.steps.size() == 2);
    CHECK(render_path(full, kg) ==
          std::vector<std::string>{"(a, likes, b)", "(b, likes, d)"});

    const EvidencePath clipped = backtrack(result, b);
    CHECK(clipped.partial);
    REQUIRE(clipped.steps.size() == 1);
    CHECK(clipped.steps[0].head == a);
    CHECK(clipped.steps[0].tail == b);

    // a itself lost even its identity loop to the budget: candidate with an
    // empty, partial chain.
    const EvidencePath empty = backtrack(result, a);
    CHECK(empty.partial);
    CHECK(empty.steps.empty());
    CHECK(render_path(empty, kg).empty());

    // c was never reached at all.
    CHECK_THROWS_AS(backtrack(result, c), std::invalid_argument);
    CHECK_THROWS_AS(backtrack(result, 999), std::invalid_argument);
}

TEST_CASE("single-entity graphs keep the topic alive through identity loops") {
    const KnowledgeGraph kg = KnowledgeGraph::from_rows({{"solo", "self", "solo"}});
    testsupport::RandomProvider provider(16, 2);
    const Model model = random_init(6, 16, 2, 50, 2);
    const std::vector<Vec> embs =
        encode_relations(model.encoder, collect_relation_features(provider, kg));
    const Vec h_q = project(model.encoder, provider.encode("alone"));

    const uint32_t solo = *kg.entity_id("solo");
    const ExplorationResult result = explore(kg, embs, model.explorer, h_q, {solo});
    const EvidencePath path = backtrack(result, solo);
    CHECK(!path.partial);
    CHECK(path.steps.size() == 2);
    // Every hop stays on the loop entity whichever relation wins.
    for (const RetainedEdge& e : path.steps) {
        CHECK(e.head == solo);
        CHECK(e.tail == solo);
    }
}
