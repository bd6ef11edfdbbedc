#include "cpsr/query_masking.hpp"

#include <algorithm>
#include <stdexcept>

namespace cpsr {

namespace {

constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

std::uint64_t mix64(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

}  // namespace

void MaskConfig::validate() const {
    if (!(p_e >= 0.0 && p_e <= 1.0)) throw std::invalid_argument("p_e must lie in [0, 1]");
    if (!(p_tau >= 0.0 && p_tau <= 1.0)) throw std::invalid_argument("p_tau must lie in [0, 1]");
}

KeyedStream::KeyedStream(std::uint64_t seed, std::uint64_t epoch, std::uint64_t query, std::uint64_t hop) {
    std::uint64_t k = mix64(seed + kGolden);
    k = mix64(k ^ (epoch + 1) * kGolden);
    k = mix64(k ^ (query + 1) * 0xD1B54A32D192ED03ULL);
    k = mix64(k ^ (hop + 1) * 0x8CB92BA72F3D8DD7ULL);
    key_ = k;
}

double KeyedStream::at(std::uint64_t counter) const {
    const std::uint64_t bits = mix64(key_ + (counter + 1) * kGolden);
    return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

bool HopMask::retains(RelationId r) const {
    return std::binary_search(retained.begin(), retained.end(), r);
}

std::vector<RelationId> candidate_relations(const KnowledgeGraph& kg, std::span<const EntityId> frontier) {
    std::vector<RelationId> out;
    for (EntityId v : frontier) {
        const auto rels = kg.incident_relations(v);
        out.insert(out.end(), rels.begin(), rels.end());
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

double drop_probability(double c_val, double c_max, double c_avg, double p_e, double p_tau) {
    if (c_max <= c_avg) return 0.0;
    const double scaled = (c_max - c_val) / (c_max - c_avg) * p_e;
    return std::min(scaled, p_tau);
}

HopMask sample_hop_mask(std::span<const RelationId> candidates, std::span<const double> probabilities,
                        KeyedStream& rng, std::uint32_t hop) {
    if (candidates.size() != probabilities.size()) {
        throw std::invalid_argument("sample_hop_mask: one probability per candidate required");
    }
    HopMask m;
    m.hop = hop;
    m.candidates.assign(candidates.begin(), candidates.end());
    m.drop_probability.assign(probabilities.begin(), probabilities.end());
    const std::uint64_t start = rng.draws();
    for (std::size_t i = 0; i < candidates.size(); ++i) {
        const bool drop = rng.next() < probabilities[i];
        if (!drop) m.retained.push_back(candidates[i]);
    }
    m.draws = rng.draws() - start;
    std::sort(m.retained.begin(), m.retained.end());
    return m;
}

HopMask build_hop_mask(const ConfidenceTable& table, RelationId query_rel,
                       std::span<const RelationId> candidates, const MaskConfig& config, KeyedStream& rng,
                       std::uint32_t hop) {
    std::vector<double> probs(candidates.size(), 0.0);
    if (!candidates.empty()) {
        const auto stats = confidence_row_stats(table, query_rel, candidates);
        for (std::size_t i = 0; i < candidates.size(); ++i) {
            probs[i] = drop_probability(table.confidence(candidates[i], query_rel), stats.max, stats.avg,
                                        config.p_e, config.p_tau);
        }
    }
    return sample_hop_mask(candidates, probs, rng, hop);
}

}  // namespace cpsr
