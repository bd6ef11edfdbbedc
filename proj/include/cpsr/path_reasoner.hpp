#pragma once
// Query-conditioned hop-by-hop propagation with cumulative path scoring.
//
// For a query (s, r_q, ?) every edge (x, r, o) carries the entity-agnostic
// message phi(r_q, r) = W_mix[r_q]^T [h_{r_q}; h_r]. Hop l builds
//
//   h_o^(l)   = sum over retained edges (x, r, o), x selected at l-1, of
//               h_x^(l-1) + n_x^(l-1) phi(r_q, r)   (h_s^(0) = 0, n_s^(0) = 1)
//   n_o^(l)   = sum of n_x^(l-1) over the same edges
//   acc(o, l) = agg over predecessors x of acc(x, l-1) + w_path . h_o^(l)
//
// n counts the walks from s that end at o through selected entities, so h_o
// is exactly the sum over those walks of the messages along each walk. On a
// graph where every entity is reached by a single walk n is 1 throughout.
// It then keeps the K entities with the highest acc for the next hop. The final
// score of a reached entity is w_out . h^(L); unreached entities score 0.

#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "cpsr/graph_store.hpp"
#include "cpsr/model.hpp"
#include "cpsr/query_masking.hpp"
#include "cpsr/rule_confidence.hpp"

namespace cpsr {

enum class ScoreAgg { Max, Sum };

struct ReasonerConfig {
    static constexpr std::size_t kUnlimited = std::numeric_limits<std::size_t>::max();

    std::uint32_t hops = 3;    // L
    std::size_t top_k = 150;   // K
    ScoreAgg score_agg = ScoreAgg::Max;
    bool rectifier = false;
};

// Masking is off when `table` is null.
struct MaskContext {
    const ConfidenceTable* table = nullptr;
    MaskConfig config;
    std::uint64_t epoch = 0;
    std::uint64_t query_index = 0;
};

struct Query {
    EntityId head = 0;
    RelationId relation = 0;
    // Edges hidden from this query, e.g. the training triple being predicted.
    std::vector<EdgeId> excluded_edges;
};

struct Frontier {
    std::uint32_t hop = 0;
    std::vector<EntityId> entities;  // ascending
    std::vector<double> embedding;   // size() x d
    std::vector<double> pre_activation;  // filled only with the rectifier on
    std::vector<double> walks;           // n, walk counts (constants for the backward pass)
    std::vector<double> acc;
    std::vector<std::uint32_t> best_pred;  // index into the previous frontier
    std::vector<std::uint32_t> selected;   // indices into `entities`, ascending

    std::size_t size() const { return entities.size(); }
    bool empty() const { return entities.empty(); }
    std::span<const double> emb(std::size_t i, std::size_t dim) const {
        return std::span<const double>(embedding).subspan(i * dim, dim);
    }
    std::vector<EntityId> selected_entities() const;
    std::optional<std::size_t> index_of(EntityId v) const;
};

struct HopRecord {
    bool masked = false;
    HopMask mask;
    // Retained edges in accumulation order.
    std::vector<std::uint32_t> edge_src;  // index into the previous frontier
    std::vector<RelationId> edge_rel;
    std::vector<std::uint32_t> edge_dst;  // index into `frontier`
    Frontier frontier;
};

struct ForwardTrace {
    ModelShape shape;
    std::uint64_t fingerprint = 0;
    std::size_t num_entities = 0;
    EntityId head = 0;
    RelationId query_rel = 0;
    std::uint32_t hops_requested = 0;
    bool rectifier = false;
    Frontier origin;
    std::vector<HopRecord> hops;  // shorter than hops_requested after early termination

    bool reached_final_hop() const { return hops.size() == hops_requested; }
};

// Sparse scores: entities absent from `entities` score 0.
struct ScoreMap {
    std::size_t num_entities = 0;
    std::vector<EntityId> entities;  // ascending
    std::vector<double> scores;

    double score(EntityId v) const;
    std::vector<double> dense() const;
};

struct ForwardResult {
    ScoreMap scores;
    ForwardTrace trace;
};

// phi(r_q, r), plus h_pred when given.
std::vector<double> edge_message(const ModelParams& params, RelationId query_rel, RelationId rel,
                                 std::optional<std::span<const double>> h_pred = std::nullopt);

// phi(r_q, r) for every relation r, |R| x d.
std::vector<double> message_table(const ModelParams& params, RelationId query_rel);

// w_path . h, and 0 at hop 0.
double node_score(const ModelParams& params, std::span<const double> h, std::uint32_t hop = 1);

inline double cumulative_score(double prev_path_score, double current_node_score) {
    return prev_path_score + current_node_score;
}

Frontier origin_frontier(EntityId head, std::size_t dim);

// One hop from the selected entities of `prev`. `mask` null means every
// relation is retained. The returned frontier has no selection yet.
HopRecord propagate_hop(const KnowledgeGraph& kg, const ModelParams& params, std::span<const double> messages,
                        const Query& query, const Frontier& prev, const HopMask* mask,
                        const ReasonerConfig& config);

// Indices of the K largest acc values, ties to the smaller entity id; returned
// ascending.
std::vector<std::uint32_t> select_topk(const Frontier& frontier, std::size_t k);

// Throws std::invalid_argument when the query head is not in `kg`.
ForwardResult forward(const KnowledgeGraph& kg, const ModelParams& params, const Query& query,
                      const ReasonerConfig& config, const MaskContext& mask = {});

// Hash of the parameters a trace for `query_rel` depends on.
std::uint64_t params_fingerprint(const ModelParams& params, RelationId query_rel);

}  // namespace cpsr
