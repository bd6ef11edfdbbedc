#include "cpsr/evaluator.hpp"

#include <algorithm>
#include <exception>
#include <stdexcept>

#include "parallel.hpp"

namespace cpsr {

namespace {

std::uint64_t answer_key(EntityId head, RelationId rel) {
    return (static_cast<std::uint64_t>(head) << 32) | rel;
}

std::vector<EntityId> sorted_unique(std::span<const EntityId> xs, EntityId extra) {
    std::vector<EntityId> out(xs.begin(), xs.end());
    out.push_back(extra);
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

std::uint64_t rank_from_counts(std::uint64_t greater, std::uint64_t ties) {
    return 1 + greater + (ties + 1) / 2;
}

}  // namespace

void RankingMetrics::add(std::uint64_t rank) {
    if (rank == 0) throw std::invalid_argument("ranks start at 1");
    ++count;
    reciprocal_sum += 1.0 / static_cast<double>(rank);
    if (rank <= 1) ++hits1;
    if (rank <= 3) ++hits3;
    if (rank <= 10) ++hits10;
}

double RankingMetrics::mrr() const { return count ? reciprocal_sum / static_cast<double>(count) : 0.0; }

double RankingMetrics::hits_at(int k) const {
    if (count == 0) return 0.0;
    std::size_t h = 0;
    switch (k) {
        case 1: h = hits1; break;
        case 3: h = hits3; break;
        case 10: h = hits10; break;
        default: throw std::invalid_argument("hits@k is tracked for k in {1, 3, 10}");
    }
    return static_cast<double>(h) / static_cast<double>(count);
}

KnownAnswers::KnownAnswers(std::span<const Triple> base_triples, const RelationVocab& vocab) {
    for (const auto& t : base_triples) {
        tails_[answer_key(t.head, t.rel)].push_back(t.tail);
        if (vocab.has_inverse() && vocab.kind(t.rel) == RelationKind::Base) {
            tails_[answer_key(t.tail, vocab.inverse(t.rel))].push_back(t.head);
        }
    }
    for (auto& [key, v] : tails_) {
        std::sort(v.begin(), v.end());
        v.erase(std::unique(v.begin(), v.end()), v.end());
    }
}

std::span<const EntityId> KnownAnswers::tails(EntityId head, RelationId rel) const {
    auto it = tails_.find(answer_key(head, rel));
    if (it == tails_.end()) return {};
    return it->second;
}

std::uint64_t filtered_rank(std::span<const double> scores, EntityId target, std::span<const EntityId> known_true) {
    if (target >= scores.size()) throw std::invalid_argument("target outside the score vector");
    const auto skip = sorted_unique(known_true, target);
    const double t = scores[target];
    std::uint64_t greater = 0, ties = 0;
    for (EntityId x = 0; x < scores.size(); ++x) {
        if (std::binary_search(skip.begin(), skip.end(), x)) continue;
        if (scores[x] > t) ++greater;
        else if (scores[x] == t) ++ties;
    }
    return rank_from_counts(greater, ties);
}

std::uint64_t filtered_rank(const ScoreMap& scores, EntityId target, std::span<const EntityId> known_true) {
    if (target >= scores.num_entities) throw std::invalid_argument("target outside the score map");
    const auto skip = sorted_unique(known_true, target);
    const double t = scores.score(target);
    std::uint64_t greater = 0, ties = 0;
    std::size_t skipped_reached = 0;
    for (std::size_t i = 0; i < scores.entities.size(); ++i) {
        if (std::binary_search(skip.begin(), skip.end(), scores.entities[i])) {
            ++skipped_reached;
            continue;
        }
        if (scores.scores[i] > t) ++greater;
        else if (scores.scores[i] == t) ++ties;
    }
    // Unreached, unfiltered entities all score 0.
    const std::size_t skipped_unreached = skip.size() - skipped_reached;
    const std::uint64_t zeros = scores.num_entities - scores.entities.size() - skipped_unreached;
    if (0.0 > t) greater += zeros;
    else if (0.0 == t) ties += zeros;
    return rank_from_counts(greater, ties);
}

std::vector<RankedQuery> make_ranked_queries(std::span<const Triple> triples, const RelationVocab& vocab) {
    std::vector<RankedQuery> out;
    out.reserve(triples.size() * 2);
    for (const auto& t : triples) {
        out.push_back({Query{t.head, t.rel, {}}, t.tail});
        if (vocab.has_inverse()) out.push_back({Query{t.tail, vocab.inverse(t.rel), {}}, t.head});
    }
    return out;
}

namespace {

std::uint64_t rank_one(const KnowledgeGraph& kg, const ModelParams& params, const RankedQuery& q, std::size_t index,
                       const KnownAnswers& known, const EvalOptions& options) {
    MaskContext mask{options.mask_table, options.mask, kEvalEpoch, index};
    const auto result = forward(kg, params, q.query, options.reasoner, mask);
    const auto filter = options.filtered ? known.tails(q.query.head, q.query.relation) : std::span<const EntityId>{};
    return filtered_rank(result.scores, q.target, filter);
}

RankingMetrics accumulate(std::span<const std::uint64_t> ranks) {
    RankingMetrics m;
    for (auto r : ranks) m.add(r);
    return m;
}

}  // namespace

std::vector<std::uint64_t> rank_queries(const KnowledgeGraph& kg, const ModelParams& params,
                                        std::span<const RankedQuery> queries, const KnownAnswers& known,
                                        const EvalOptions& options) {
    std::vector<std::uint64_t> ranks(queries.size(), 0);
    detail::ExceptionSlot error;
    const auto n = static_cast<std::int64_t>(queries.size());
#pragma omp parallel for schedule(dynamic, 4)
    for (std::int64_t i = 0; i < n; ++i) {
        error.run([&] {
            const auto k = static_cast<std::size_t>(i);
            ranks[k] = rank_one(kg, params, queries[k], k, known, options);
        });
    }
    error.rethrow();
    return ranks;
}

RankingMetrics evaluate(const KnowledgeGraph& kg, const ModelParams& params, std::span<const RankedQuery> queries,
                        const KnownAnswers& known, const EvalOptions& options) {
    return accumulate(rank_queries(kg, params, queries, known, options));
}

RankingMetrics evaluate_serial(const KnowledgeGraph& kg, const ModelParams& params,
                               std::span<const RankedQuery> queries, const KnownAnswers& known,
                               const EvalOptions& options) {
    std::vector<std::uint64_t> ranks(queries.size());
    for (std::size_t i = 0; i < queries.size(); ++i) ranks[i] = rank_one(kg, params, queries[i], i, known, options);
    return accumulate(ranks);
}

}  // namespace cpsr
