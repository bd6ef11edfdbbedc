#include <gtest/gtest.h>

#include <map>
#include <numeric>

#include "cpsr/oracle.hpp"
#include "cpsr/path_reasoner.hpp"
#include "test_util.hpp"

using namespace cpsr;

namespace {

// W = [I; I] so that phi(r_q, r) = h_{r_q} + h_r.
ModelParams sum_params(std::size_t num_relations, std::size_t d) {
    ModelParams p = ModelParams::zeros({num_relations, d, false});
    for (RelationId q = 0; q < num_relations; ++q) {
        auto w = p.mix_matrix(q);
        for (std::size_t i = 0; i < d; ++i) {
            w[i * d + i] = 1.0;
            w[(d + i) * d + i] = 1.0;
        }
    }
    return p;
}

Frontier frontier_with_acc(std::vector<double> acc) {
    Frontier f;
    f.hop = 1;
    for (std::size_t i = 0; i < acc.size(); ++i) f.entities.push_back(static_cast<EntityId>(i));
    f.acc = std::move(acc);
    f.embedding.assign(f.entities.size(), 0.0);
    return f;
}

ReasonerConfig unlimited(std::uint32_t hops) {
    ReasonerConfig c;
    c.hops = hops;
    c.top_k = ReasonerConfig::kUnlimited;
    return c;
}

const Frontier& final_frontier(const ForwardResult& r) { return r.trace.hops.back().frontier; }

}  // namespace

TEST(EdgeMessage, ZeroMatrixGivesZero) {
    ModelParams p = ModelParams::random({2, 3, false}, 1);
    std::fill(p.mix.begin(), p.mix.end(), 0.0);
    for (double x : edge_message(p, 0, 1)) EXPECT_EQ(x, 0.0);
}

TEST(EdgeMessage, IdentityBlocks) {
    ModelParams p = sum_params(2, 2);
    p.relation(0)[0] = 1.0;
    p.relation(1)[1] = 1.0;
    EXPECT_EQ(edge_message(p, 0, 1), (std::vector<double>{1.0, 1.0}));
}

TEST(EdgeMessage, AddsPredecessor) {
    const ModelParams p = ModelParams::random({3, 4, false}, 2);
    const std::vector<double> pred = {0.5, -1.0, 2.0, 0.25};
    const auto f = edge_message(p, 1, 2);
    const auto g = edge_message(p, 1, 2, std::span<const double>(pred));
    for (std::size_t i = 0; i < 4; ++i) EXPECT_EQ(g[i], pred[i] + f[i]);
    const std::vector<double> wrong(3, 0.0);
    EXPECT_THROW(edge_message(p, 1, 2, std::span<const double>(wrong)), std::invalid_argument);
}

TEST(EdgeMessage, SharedMixUsesOneMatrix) {
    ModelParams p = ModelParams::random({3, 2, true}, 4);
    EXPECT_EQ(p.mix.size(), 8u);
    p.rel_emb = {1, 0, 1, 0, 0, 1};
    EXPECT_EQ(edge_message(p, 0, 2), edge_message(p, 1, 2));
}

TEST(NodeScore, Examples) {
    ModelParams p = ModelParams::zeros({1, 2, false});
    p.w_path = {1.0, 2.0};
    const std::vector<double> h = {3.0, 4.0}, zero = {0.0, 0.0};
    EXPECT_EQ(node_score(p, h), 11.0);
    EXPECT_EQ(node_score(p, zero), 0.0);
    EXPECT_EQ(node_score(p, h, 0), 0.0);
}

TEST(CumulativeScore, Examples) {
    EXPECT_DOUBLE_EQ(cumulative_score(0.0, 0.2), 0.2);
    EXPECT_DOUBLE_EQ(cumulative_score(0.2, 0.3), 0.5);
    EXPECT_DOUBLE_EQ(cumulative_score(cumulative_score(cumulative_score(0.0, 0.1), 0.2), 0.3), 0.6);
}

TEST(SelectTopk, Examples) {
    EXPECT_EQ(select_topk(frontier_with_acc({0.3, 0.4}), 150), (std::vector<std::uint32_t>{0, 1}));
    EXPECT_EQ(select_topk(frontier_with_acc({0.9, 0.1, 0.5}), 2), (std::vector<std::uint32_t>{0, 2}));
    EXPECT_EQ(select_topk(frontier_with_acc({0.5, 0.5}), 1), (std::vector<std::uint32_t>{0}));
    EXPECT_THROW(select_topk(frontier_with_acc({0.5}), 0), std::invalid_argument);
}

TEST(SelectTopk, MatchesFullSort) {
    std::mt19937_64 rng(53);
    std::uniform_int_distribution<int> v(0, 5);
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<double> acc(1 + trial % 17);
        for (double& a : acc) a = v(rng);
        const std::size_t k = 1 + trial % 7;
        std::vector<std::uint32_t> idx(acc.size());
        std::iota(idx.begin(), idx.end(), 0u);
        std::stable_sort(idx.begin(), idx.end(), [&](auto a, auto b) { return acc[a] > acc[b]; });
        idx.resize(std::min(k, idx.size()));
        std::sort(idx.begin(), idx.end());
        EXPECT_EQ(select_topk(frontier_with_acc(acc), k), idx);
    }
}

TEST(Forward, ChainMessages) {
    const std::vector<RawTriple> raw = {{"s", "r", "a"}, {"a", "r", "b"}};
    const auto kg = build_graph(raw, {false, false});
    ModelParams p = sum_params(1, 2);
    p.relation(0)[0] = 0.5;
    p.relation(0)[1] = 0.25;
    p.w_out = {1.0, -2.0};
    const std::vector<double> f = edge_message(p, 0, 0);
    const auto r1 = forward(kg, p, {*kg.find_entity("s"), 0, {}}, unlimited(1));
    ASSERT_EQ(final_frontier(r1).entities, (std::vector<EntityId>{*kg.find_entity("a")}));
    EXPECT_EQ(final_frontier(r1).embedding, f);

    const auto r2 = forward(kg, p, {*kg.find_entity("s"), 0, {}}, unlimited(2));
    const EntityId b = *kg.find_entity("b");
    ASSERT_EQ(final_frontier(r2).entities, (std::vector<EntityId>{b}));
    EXPECT_EQ(final_frontier(r2).embedding, (std::vector<double>{2 * f[0], 2 * f[1]}));
    EXPECT_EQ(r2.scores.score(b), 2 * f[0] - 4 * f[1]);
    EXPECT_EQ(r2.scores.score(*kg.find_entity("a")), 0.0);
}

TEST(Forward, ParallelEdgesSum) {
    const std::vector<RawTriple> raw = {{"s", "r1", "a"}, {"s", "r2", "a"}};
    const auto kg = build_graph(raw, {false, false});
    const ModelParams p = ModelParams::random({2, 3, false}, 8);
    const auto f1 = edge_message(p, 0, 0), f2 = edge_message(p, 0, 1);
    const auto r = forward(kg, p, {0, 0, {}}, unlimited(1));
    for (std::size_t i = 0; i < 3; ++i) EXPECT_EQ(final_frontier(r).embedding[i], f1[i] + f2[i]);
}

TEST(PropagateHop, MaskedOnlyEdgeLeavesTargetOut) {
    const std::vector<RawTriple> raw = {{"s", "r1", "a"}, {"s", "r2", "b"}};
    const auto kg = build_graph(raw, {false, false});
    const ModelParams p = ModelParams::random({2, 2, false}, 9);
    HopMask m;
    m.hop = 1;
    m.candidates = {0, 1};
    m.drop_probability = {0.0, 0.5};
    m.retained = {0};
    const Query q{0, 0, {}};
    const auto rec = propagate_hop(kg, p, message_table(p, 0), q, origin_frontier(0, 2), &m, unlimited(1));
    EXPECT_EQ(rec.frontier.entities, (std::vector<EntityId>{*kg.find_entity("a")}));
}

TEST(Forward, ExcludedEdgeIsHidden) {
    const std::vector<RawTriple> raw = {{"s", "r", "a"}, {"s", "r", "b"}};
    const auto kg = build_graph(raw, {false, false});
    const ModelParams p = ModelParams::random({1, 2, false}, 10);
    const EdgeId e = *kg.find_edge({0, 0, *kg.find_entity("a")});
    const auto r = forward(kg, p, {0, 0, {e}}, unlimited(1));
    EXPECT_EQ(final_frontier(r).entities, (std::vector<EntityId>{*kg.find_entity("b")}));
}

TEST(Forward, NoEdgesScoresZero) {
    const std::vector<RawTriple> raw = {{"a", "r", "s"}};
    const auto kg = build_graph(raw, {false, false});
    const ModelParams p = ModelParams::random({1, 2, false}, 11);
    const auto r = forward(kg, p, {*kg.find_entity("s"), 0, {}}, unlimited(2));
    EXPECT_FALSE(r.trace.reached_final_hop());
    for (double x : r.scores.dense()) EXPECT_EQ(x, 0.0);
}

TEST(Forward, Errors) {
    const auto kg = fixtures::toy_graph();
    const ModelParams p = ModelParams::random({kg.num_relations(), 2, false}, 12);
    EXPECT_THROW(forward(kg, p, {99, 0, {}}, unlimited(1)), std::invalid_argument);
    EXPECT_THROW(forward(kg, p, {0, 0, {}}, unlimited(0)), std::invalid_argument);
    const ModelParams wrong = ModelParams::random({kg.num_relations() + 1, 2, false}, 12);
    EXPECT_THROW(forward(kg, wrong, {0, 0, {}}, unlimited(1)), std::invalid_argument);
}

TEST(Forward, MatchesPathSumOracle) {
    std::mt19937_64 rng(59);
    for (int trial = 0; trial < 60; ++trial) {
        const auto kg = build_graph(fixtures::random_raw(rng, 12, 4, 30), {trial % 2 == 0, false});
        const std::uint32_t hops = 1 + trial % 3;
        const ModelParams p = ModelParams::random({kg.num_relations(), 3, false}, 100 + trial);
        const EntityId s = static_cast<EntityId>(trial % kg.num_entities());
        const RelationId q = static_cast<RelationId>(trial % kg.num_relations());
        const auto r = forward(kg, p, {s, q, {}}, unlimited(hops));
        for (EntityId x = 0; x < kg.num_entities(); ++x) {
            const bool has_walk = !oracle::enumerate_paths(kg, s, x, hops).empty();
            const bool reached = r.trace.reached_final_hop() && final_frontier(r).index_of(x).has_value();
            ASSERT_EQ(has_walk, reached);
            if (!reached) continue;
            const auto expect = oracle::brute_embedding(kg, p, q, s, x, hops);
            const auto got = final_frontier(r).emb(*final_frontier(r).index_of(x), 3);
            double diff = 0.0, scale = 0.0;
            for (std::size_t i = 0; i < 3; ++i) {
                diff = std::max(diff, std::abs(got[i] - expect[i]));
                scale = std::max(scale, std::abs(expect[i]));
            }
            EXPECT_LE(diff, 1e-12 * std::max(scale, 1e-300));
        }
    }
}

TEST(Forward, AccEqualsBestPredecessorPlusNodeScore) {
    std::mt19937_64 rng(61);
    for (int trial = 0; trial < 50; ++trial) {
        const auto kg = build_graph(fixtures::random_raw(rng, 15, 4, 40), {true, true});
        const ModelParams p = ModelParams::random({kg.num_relations(), 4, false}, 200 + trial);
        ReasonerConfig cfg;
        cfg.hops = 3;
        cfg.top_k = 4;
        const auto r = forward(kg, p, {0, 0, {}}, cfg);
        const Frontier* prev = &r.trace.origin;
        for (const HopRecord& h : r.trace.hops) {
            const Frontier& f = h.frontier;
            EXPECT_LE(f.selected.size(), cfg.top_k);
            for (std::size_t i = 0; i < f.size(); ++i) {
                double best = -std::numeric_limits<double>::infinity();
                for (std::size_t e = 0; e < h.edge_dst.size(); ++e) {
                    if (h.edge_dst[e] == i) best = std::max(best, prev->acc[h.edge_src[e]]);
                }
                EXPECT_EQ(f.acc[i], best + node_score(p, f.emb(i, 4), f.hop));
                EXPECT_EQ(prev->acc[f.best_pred[i]], best);
            }
            prev = &f;
        }
    }
}

TEST(Forward, AccIsSumOfNodeScoresAlongBestChain) {
    std::mt19937_64 rng(67);
    for (int trial = 0; trial < 50; ++trial) {
        const auto kg = build_graph(fixtures::random_raw(rng, 12, 3, 30), {true, false});
        const ModelParams p = fixtures::dyadic_params({kg.num_relations(), 2, false}, 300 + trial);
        ReasonerConfig cfg;
        cfg.hops = 3;
        cfg.top_k = 3;
        const auto r = forward(kg, p, {0, 0, {}}, cfg);
        if (!r.trace.reached_final_hop()) continue;
        const auto& hops = r.trace.hops;
        for (std::size_t i = 0; i < hops.back().frontier.size(); ++i) {
            double total = 0.0;
            std::size_t at = i;
            for (std::size_t l = hops.size(); l-- > 0;) {
                const Frontier& f = hops[l].frontier;
                total += node_score(p, f.emb(at, 2), f.hop);
                at = f.best_pred[at];
            }
            EXPECT_EQ(hops.back().frontier.acc[i], total);
        }
    }
}

TEST(Forward, PermutationEquivariant) {
    std::mt19937_64 rng(71);
    for (int trial = 0; trial < 40; ++trial) {
        auto raw = fixtures::random_raw(rng, 12, 3, 30);
        const auto kg = build_graph(raw, {true, true});
        std::shuffle(raw.begin(), raw.end(), rng);
        const auto permuted = build_graph(raw, kg.relations());
        const ModelParams p = fixtures::dyadic_params({kg.num_relations(), 2, false}, 400 + trial);
        const ReasonerConfig cfg = unlimited(2);
        const EntityId s = static_cast<EntityId>(trial % kg.num_entities());
        const RelationId q = static_cast<RelationId>(trial % kg.num_relations());
        const auto a = forward(kg, p, {s, q, {}}, cfg);
        const auto b = forward(permuted, p, {*permuted.find_entity(kg.entity_name(s)), q, {}}, cfg);
        for (EntityId x = 0; x < kg.num_entities(); ++x) {
            EXPECT_EQ(a.scores.score(x), b.scores.score(*permuted.find_entity(kg.entity_name(x))));
        }
    }
}

// A larger finite K also changes the accumulated scores of entities that
// were already reached, so later Top-k cuts can pick a different set; only
// the unlimited K is guaranteed to keep everything a finite K reaches.
TEST(Forward, UnlimitedKNeverLosesEntities) {
    std::mt19937_64 rng(73);
    for (int trial = 0; trial < 60; ++trial) {
        const auto kg = build_graph(fixtures::random_raw(rng, 15, 4, 40), {true, false});
        const ModelParams p = ModelParams::random({kg.num_relations(), 3, false}, 500 + trial);
        const auto all = forward(kg, p, {0, 0, {}}, unlimited(3)).scores.entities;
        for (std::size_t k : {1, 2, 3, 5, 8}) {
            ReasonerConfig cfg;
            cfg.hops = 3;
            cfg.top_k = k;
            const auto r = forward(kg, p, {0, 0, {}}, cfg);
            for (EntityId v : r.scores.entities) EXPECT_TRUE(std::binary_search(all.begin(), all.end(), v)) << "K " << k;
        }
    }
}

TEST(Forward, Deterministic) {
    std::mt19937_64 rng(79);
    const auto kg = build_graph(fixtures::random_raw(rng, 12, 4, 30), {true, true});
    const auto table = mine_confidence(kg);
    const ModelParams p = ModelParams::random({kg.num_relations(), 4, false}, 1);
    MaskContext mc{&table, {0.5, 0.5, 7}, 3, 11};
    const auto a = forward(kg, p, {0, 1, {}}, unlimited(3), mc);
    const auto b = forward(kg, p, {0, 1, {}}, unlimited(3), mc);
    EXPECT_EQ(a.scores.entities, b.scores.entities);
    EXPECT_EQ(a.scores.scores, b.scores.scores);
}

TEST(Forward, SumAggregationAddsPredecessorScores) {
    const std::vector<RawTriple> raw = {{"s", "r", "a"}, {"s", "r", "b"}, {"a", "r", "c"}, {"b", "r", "c"}};
    const auto kg = build_graph(raw, {false, false});
    ModelParams p = sum_params(1, 1);
    p.rel_emb = {0.5};
    p.w_path = {1.0};
    ReasonerConfig cfg = unlimited(2);
    cfg.score_agg = ScoreAgg::Sum;
    const auto r = forward(kg, p, {0, 0, {}}, cfg);
    // phi = 1, h_a = h_b = 1, acc = 1 each; h_c = 2 + 2 = 4.
    ASSERT_EQ(final_frontier(r).entities.size(), 1u);
    EXPECT_EQ(final_frontier(r).acc[0], 1.0 + 1.0 + 4.0);
    cfg.score_agg = ScoreAgg::Max;
    EXPECT_EQ(final_frontier(forward(kg, p, {0, 0, {}}, cfg)).acc[0], 1.0 + 4.0);
}

TEST(Forward, RectifierClampsNegativeStates) {
    const std::vector<RawTriple> raw = {{"s", "r", "a"}};
    const auto kg = build_graph(raw, {false, false});
    ModelParams p = sum_params(1, 2);
    p.rel_emb = {-1.0, 0.5};
    ReasonerConfig cfg = unlimited(1);
    cfg.rectifier = true;
    const auto r = forward(kg, p, {0, 0, {}}, cfg);
    EXPECT_EQ(final_frontier(r).embedding, (std::vector<double>{0.0, 1.0}));
}

TEST(Forward, ScoreMapDenseMatchesLookup) {
    std::mt19937_64 rng(83);
    const auto kg = build_graph(fixtures::random_raw(rng, 12, 3, 30), {true, true});
    const ModelParams p = ModelParams::random({kg.num_relations(), 3, false}, 2);
    const auto r = forward(kg, p, {0, 0, {}}, unlimited(2));
    const auto dense = r.scores.dense();
    ASSERT_EQ(dense.size(), kg.num_entities());
    for (EntityId v = 0; v < kg.num_entities(); ++v) EXPECT_EQ(dense[v], r.scores.score(v));
}
