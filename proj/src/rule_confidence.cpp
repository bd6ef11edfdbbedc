#include "cpsr/rule_confidence.hpp"

#include <algorithm>
#include <cstdio>
#include <ostream>
#include <stdexcept>

namespace cpsr {

ConfidenceTable::ConfidenceTable(std::size_t num_relations, std::vector<std::uint32_t> numerator,
                                 std::vector<std::uint32_t> denominator)
    : num_relations_(num_relations),
      numerator_(std::move(numerator)),
      denominator_(std::move(denominator)),
      values_(num_relations * num_relations, 0.0) {
    if (numerator_.size() != num_relations * num_relations || denominator_.size() != num_relations) {
        throw std::invalid_argument("confidence table: inconsistent shapes");
    }
    for (std::size_t p = 0; p < num_relations_; ++p) {
        const std::uint32_t den = denominator_[p];
        if (den == 0) continue;
        for (std::size_t c = 0; c < num_relations_; ++c) {
            values_[p * num_relations_ + c] =
                static_cast<double>(numerator_[p * num_relations_ + c]) / static_cast<double>(den);
        }
    }
}

ConfidenceTable mine_confidence_serial(const KnowledgeGraph& kg) {
    const std::size_t nr = kg.num_relations();
    std::vector<std::uint32_t> num(nr * nr, 0), den(nr, 0);
    for (EntityId v = 0; v < kg.num_entities(); ++v) {
        const auto rels = kg.incident_relations(v);
        for (RelationId p : rels) {
            ++den[p];
            for (RelationId c : rels) ++num[p * nr + c];
        }
    }
    return ConfidenceTable(nr, std::move(num), std::move(den));
}

ConfidenceTable mine_confidence(const KnowledgeGraph& kg) {
    const std::size_t nr = kg.num_relations();

    // holders[p] = entities with p in R(v), ascending
    std::vector<std::vector<EntityId>> holders(nr);
    for (EntityId v = 0; v < kg.num_entities(); ++v) {
        for (RelationId p : kg.incident_relations(v)) holders[p].push_back(v);
    }

    std::vector<std::uint32_t> num(nr * nr, 0), den(nr, 0);
    const auto rows = static_cast<std::int64_t>(nr);
#pragma omp parallel for schedule(dynamic)
    for (std::int64_t p = 0; p < rows; ++p) {
        std::uint32_t* row = num.data() + static_cast<std::size_t>(p) * nr;
        den[p] = static_cast<std::uint32_t>(holders[p].size());
        for (EntityId v : holders[p]) {
            for (RelationId c : kg.incident_relations(v)) ++row[c];
        }
    }
    return ConfidenceTable(nr, std::move(num), std::move(den));
}

ConfidenceStats confidence_row_stats(const ConfidenceTable& table, RelationId conclusion,
                                     std::span<const RelationId> candidates) {
    if (candidates.empty()) throw std::invalid_argument("confidence_row_stats: empty candidate set");
    ConfidenceStats s;
    s.max = table.confidence(candidates[0], conclusion);
    for (RelationId r : candidates) s.max = std::max(s.max, table.confidence(r, conclusion));
    // Mean of the gaps below the max keeps avg <= max and exact on uniform rows.
    double gap = 0.0;
    for (RelationId r : candidates) gap += s.max - table.confidence(r, conclusion);
    s.avg = s.max - gap / static_cast<double>(candidates.size());
    return s;
}

void write_confidence_csv(std::ostream& out, const ConfidenceTable& table, const RelationVocab& vocab) {
    out << "premise,conclusion,confidence,support_num,support_den\n";
    char buf[64];
    for (RelationId p = 0; p < table.num_relations(); ++p) {
        for (RelationId c = 0; c < table.num_relations(); ++c) {
            std::snprintf(buf, sizeof buf, "%.17g", table.confidence(p, c));
            out << vocab.name(p) << ',' << vocab.name(c) << ',' << buf << ',' << table.support_num(p, c) << ','
                << table.support_den(p) << '\n';
        }
    }
}

}  // namespace cpsr
