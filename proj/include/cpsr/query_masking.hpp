#pragma once
// Query-dependent relation masking. Per hop, every candidate relation r gets a
// drop probability
//
//   p = min((C_max - C(r => r_q)) / (C_max - C_avg) * p_e, p_tau)
//
// and is dropped by an independent Bernoulli(p) draw. Relations at C_max have
// p = 0 and are always kept; a hop whose candidates all share one confidence
// drops nothing.

#include <cstdint>
#include <span>
#include <vector>

#include "cpsr/graph_store.hpp"
#include "cpsr/rule_confidence.hpp"

namespace cpsr {

struct MaskConfig {
    double p_e = 0.5;
    double p_tau = 0.5;
    std::uint64_t seed = 42;

    void validate() const;
};

// Counter-based uniform stream keyed by (seed, epoch, query, hop): draw i
// depends only on the key and i, never on scheduling.
class KeyedStream {
public:
    KeyedStream(std::uint64_t seed, std::uint64_t epoch, std::uint64_t query, std::uint64_t hop);

    // Uniform in [0, 1).
    double at(std::uint64_t counter) const;
    double next() { return at(counter_++); }
    std::uint64_t draws() const { return counter_; }

private:
    std::uint64_t key_;
    std::uint64_t counter_ = 0;
};

struct HopMask {
    std::uint32_t hop = 0;
    std::vector<RelationId> candidates;  // ascending
    std::vector<double> drop_probability;
    std::vector<RelationId> retained;    // ascending
    std::uint64_t draws = 0;

    bool retains(RelationId r) const;
};

// Union of R(v) over the frontier, ascending.
std::vector<RelationId> candidate_relations(const KnowledgeGraph& kg, std::span<const EntityId> frontier);

double drop_probability(double c_val, double c_max, double c_avg, double p_e, double p_tau);

// Drops candidate i when its draw falls below probabilities[i].
HopMask sample_hop_mask(std::span<const RelationId> candidates, std::span<const double> probabilities,
                        KeyedStream& rng, std::uint32_t hop = 0);

// Probabilities from the confidence table, then sampling.
HopMask build_hop_mask(const ConfidenceTable& table, RelationId query_rel,
                       std::span<const RelationId> candidates, const MaskConfig& config, KeyedStream& rng,
                       std::uint32_t hop);

}  // namespace cpsr
