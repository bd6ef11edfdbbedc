#include <gtest/gtest.h>

#include <set>

#include "cpsr/query_masking.hpp"
#include "test_util.hpp"

using namespace cpsr;

TEST(CandidateRelations, ToyGraph) {
    const auto kg = fixtures::toy_graph();
    const EntityId a = *kg.find_entity("a"), d = *kg.find_entity("d"), b = *kg.find_entity("b");
    const RelationId r1 = *kg.relations().find("r1"), r2 = *kg.relations().find("r2");
    const std::vector<EntityId> fa = {a}, fad = {a, d}, sinks = {b, *kg.find_entity("c")};
    EXPECT_EQ(candidate_relations(kg, fa), (std::vector<RelationId>{r1, r2}));
    EXPECT_EQ(candidate_relations(kg, fad), (std::vector<RelationId>{r1, r2}));
    EXPECT_TRUE(candidate_relations(kg, sinks).empty());
}

TEST(CandidateRelations, MatchesAdjacencyScan) {
    std::mt19937_64 rng(41);
    for (int trial = 0; trial < 50; ++trial) {
        const auto kg = build_graph(fixtures::random_raw(rng, 12, 4, 30), {true, false});
        std::vector<EntityId> frontier;
        for (EntityId v = 0; v < kg.num_entities(); v += 2) frontier.push_back(v);
        std::set<RelationId> expect;
        for (const Triple& t : kg.triples()) {
            if (t.head % 2 == 0) expect.insert(t.rel);
        }
        EXPECT_EQ(candidate_relations(kg, frontier), std::vector<RelationId>(expect.begin(), expect.end()));
    }
}

TEST(DropProbability, Examples) {
    EXPECT_EQ(drop_probability(1.0, 1.0, 0.75, 0.5, 0.5), 0.0);
    EXPECT_EQ(drop_probability(0.5, 1.0, 0.75, 0.5, 0.5), 0.5);
    EXPECT_DOUBLE_EQ(drop_probability(0.75, 1.0, 0.75, 0.3, 0.5), 0.3);
    EXPECT_EQ(drop_probability(0.4, 0.4, 0.4, 0.9, 0.5), 0.0);
}

TEST(DropProbability, CapAndMaxSafetyOnRandomInputs) {
    std::mt19937_64 rng(43);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int i = 0; i < 20000; ++i) {
        const double c_max = u(rng), c_avg = c_max * u(rng), c_val = c_max * u(rng);
        const double p_e = u(rng), p_tau = u(rng);
        const double p = drop_probability(c_val, c_max, c_avg, p_e, p_tau);
        EXPECT_GE(p, 0.0);
        EXPECT_LE(p, p_tau);
        EXPECT_EQ(drop_probability(c_max, c_max, c_avg, p_e, p_tau), 0.0);
    }
}

TEST(SampleHopMask, ZeroProbabilitiesKeepAll) {
    const std::vector<RelationId> cands = {0, 3, 5};
    const std::vector<double> probs(3, 0.0);
    KeyedStream rng(1, 2, 3, 4);
    const auto m = sample_hop_mask(cands, probs, rng, 1);
    EXPECT_EQ(m.retained, cands);
    EXPECT_EQ(m.draws, 3u);
}

TEST(SampleHopMask, EmpiricalDropRate) {
    for (double p : {0.1, 0.5}) {
        const std::vector<RelationId> cands = {7};
        const std::vector<double> probs = {p};
        std::size_t dropped = 0;
        for (std::uint64_t q = 0; q < 10000; ++q) {
            KeyedStream rng(42, 1, q, 1);
            if (sample_hop_mask(cands, probs, rng, 1).retained.empty()) ++dropped;
        }
        EXPECT_NEAR(static_cast<double>(dropped) / 10000.0, p, 0.02);
    }
}

TEST(SampleHopMask, Deterministic) {
    const std::vector<RelationId> cands = {0, 1, 2, 3, 4, 5};
    const std::vector<double> probs = {0.5, 0.2, 0.5, 0.1, 0.4, 0.3};
    for (std::uint64_t q = 0; q < 100; ++q) {
        KeyedStream a(9, 3, q, 2), b(9, 3, q, 2);
        EXPECT_EQ(sample_hop_mask(cands, probs, a, 2).retained, sample_hop_mask(cands, probs, b, 2).retained);
    }
}

TEST(KeyedStream, DependsOnEveryKeyPart) {
    const KeyedStream base(1, 2, 3, 4);
    EXPECT_NE(base.at(0), KeyedStream(5, 2, 3, 4).at(0));
    EXPECT_NE(base.at(0), KeyedStream(1, 5, 3, 4).at(0));
    EXPECT_NE(base.at(0), KeyedStream(1, 2, 5, 4).at(0));
    EXPECT_NE(base.at(0), KeyedStream(1, 2, 3, 5).at(0));
    KeyedStream s(1, 2, 3, 4);
    EXPECT_EQ(s.next(), base.at(0));
    EXPECT_EQ(s.next(), base.at(1));
    EXPECT_EQ(s.draws(), 2u);
    for (std::uint64_t i = 0; i < 1000; ++i) {
        EXPECT_GE(base.at(i), 0.0);
        EXPECT_LT(base.at(i), 1.0);
    }
}

TEST(BuildHopMask, InvariantsOnRandomGraphs) {
    std::mt19937_64 rng(47);
    const MaskConfig cfg{0.7, 0.5, 3};
    for (int trial = 0; trial < 100; ++trial) {
        const auto kg = build_graph(fixtures::random_raw(rng, 15, 5, 40), {true, true});
        const auto table = mine_confidence(kg);
        std::vector<EntityId> frontier;
        for (EntityId v = 0; v < kg.num_entities(); v += 3) frontier.push_back(v);
        const auto cands = candidate_relations(kg, frontier);
        if (cands.empty()) continue;
        const RelationId q = static_cast<RelationId>(trial % kg.num_relations());
        KeyedStream ks(cfg.seed, 0, static_cast<std::uint64_t>(trial), 1);
        const auto m = build_hop_mask(table, q, cands, cfg, ks, 1);
        const auto stats = confidence_row_stats(table, q, cands);
        ASSERT_EQ(m.drop_probability.size(), cands.size());
        for (std::size_t i = 0; i < cands.size(); ++i) {
            EXPECT_LE(m.drop_probability[i], cfg.p_tau);
            if (table.confidence(cands[i], q) == stats.max) {
                EXPECT_EQ(m.drop_probability[i], 0.0);
                EXPECT_TRUE(m.retains(cands[i]));
            }
        }
        for (RelationId r : m.retained) EXPECT_TRUE(std::binary_search(cands.begin(), cands.end(), r));
    }
}

TEST(MaskConfig, RejectsOutOfRange) {
    EXPECT_THROW((MaskConfig{1.5, 0.5, 0}.validate()), std::invalid_argument);
    EXPECT_THROW((MaskConfig{0.5, -0.1, 0}.validate()), std::invalid_argument);
    EXPECT_NO_THROW((MaskConfig{0.0, 1.0, 0}.validate()));
}
