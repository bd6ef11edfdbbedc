#pragma once
// Reference implementations for tests. These deliberately share no code with
// the propagation path: walks are enumerated by scanning the raw triple list,
// and messages are recomputed with their own matrix product.

#include <cstdint>
#include <functional>
#include <vector>

#include "cpsr/graph_store.hpp"
#include "cpsr/model.hpp"

namespace cpsr::oracle {

inline constexpr std::uint32_t kMaxWalkLength = 4;

// A walk is a chain of edges; node revisits are allowed.
using Walk = std::vector<Triple>;
using PathList = std::vector<Walk>;

using EdgeFilter = std::function<bool(const Triple&)>;

// All walks of exactly `length` edges from source to target whose edges pass
// `retained` (all edges when empty). Throws std::invalid_argument beyond
// kMaxWalkLength.
PathList enumerate_paths(const KnowledgeGraph& kg, EntityId source, EntityId target, std::uint32_t length,
                         const EdgeFilter& retained = {});

// Sum over walks of the sum over their edges of phi(r_q, r).
std::vector<double> brute_embedding(const KnowledgeGraph& kg, const ModelParams& params, RelationId query_rel,
                                    EntityId source, EntityId target, std::uint32_t length,
                                    const EdgeFilter& retained = {});

struct PlantedRuleSpec {
    std::size_t train_entities = 60;
    std::size_t inference_entities = 30;
    // Distractor triples per rule-body triple.
    double distractor_density = 0.3;
    std::size_t distractor_relations = 3;
    // Fraction of rule-head facts held out as queries.
    double holdout = 0.5;
    std::uint64_t seed = 7;

    std::string body_first = "r1";
    std::string body_second = "r2";
    std::string head = "rq";

    void validate() const;
};

// Entities sit in three layers A -> B -> C. Every a in A has one body_first
// edge into B, every b in B one or two body_second edges into C, and
// head(x, z) holds iff body_first(x, y) and body_second(y, z) for some y.
// Distractor relations connect random entity pairs. Both graphs use the same
// construction on disjoint entity names ("t*" and "i*").
RawSplit generate_planted_raw(const PlantedRuleSpec& spec);
InductiveSplit generate_planted_kg(const PlantedRuleSpec& spec, GraphOptions options);

// Central differences, one parameter entry at a time.
Gradients finite_diff_gradients(const std::function<double(const ModelParams&)>& loss, const ModelParams& params,
                                double step);

}  // namespace cpsr::oracle
