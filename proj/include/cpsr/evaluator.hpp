#pragma once
// Filtered ranking. A query's rank counts the candidates scoring above the
// target, skipping other known true answers; ties take the mean position
// among them, rounded up.

#include <cstdint>
#include <span>
#include <unordered_map>
#include <vector>

#include "cpsr/graph_store.hpp"
#include "cpsr/model.hpp"
#include "cpsr/path_reasoner.hpp"
#include "cpsr/rule_confidence.hpp"

namespace cpsr {

// Mask stream epoch reserved for evaluation.
inline constexpr std::uint64_t kEvalEpoch = ~std::uint64_t{0};

struct RankingMetrics {
    std::size_t count = 0;
    double reciprocal_sum = 0.0;
    std::size_t hits1 = 0;
    std::size_t hits3 = 0;
    std::size_t hits10 = 0;

    void add(std::uint64_t rank);
    double mrr() const;
    double hits_at(int k) const;  // k in {1, 3, 10}
};

// Known true tails per (head, relation); inverse facts are added when the
// vocabulary has inverses.
class KnownAnswers {
public:
    KnownAnswers() = default;
    KnownAnswers(std::span<const Triple> base_triples, const RelationVocab& vocab);

    std::span<const EntityId> tails(EntityId head, RelationId rel) const;

private:
    std::unordered_map<std::uint64_t, std::vector<EntityId>> tails_;
};

std::uint64_t filtered_rank(std::span<const double> scores, EntityId target, std::span<const EntityId> known_true);
std::uint64_t filtered_rank(const ScoreMap& scores, EntityId target, std::span<const EntityId> known_true);

struct RankedQuery {
    Query query;
    EntityId target = 0;
};

// (s, r, o) yields (s, r, ?) -> o and, with inverses, (o, r^-1, ?) -> s.
std::vector<RankedQuery> make_ranked_queries(std::span<const Triple> triples, const RelationVocab& vocab);

struct EvalOptions {
    ReasonerConfig reasoner;
    // Masking at evaluation is off when null.
    const ConfidenceTable* mask_table = nullptr;
    MaskConfig mask;
    bool filtered = true;
};

// Parallel over queries, ordered accumulation; equal to evaluate_serial.
RankingMetrics evaluate(const KnowledgeGraph& kg, const ModelParams& params, std::span<const RankedQuery> queries,
                        const KnownAnswers& known, const EvalOptions& options);
RankingMetrics evaluate_serial(const KnowledgeGraph& kg, const ModelParams& params,
                               std::span<const RankedQuery> queries, const KnownAnswers& known,
                               const EvalOptions& options);

// Per-query ranks in query order.
std::vector<std::uint64_t> rank_queries(const KnowledgeGraph& kg, const ModelParams& params,
                                        std::span<const RankedQuery> queries, const KnownAnswers& known,
                                        const EvalOptions& options);

}  // namespace cpsr
