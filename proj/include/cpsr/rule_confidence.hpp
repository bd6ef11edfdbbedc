#pragma once
// Single-rule confidences C(premise => conclusion) counted per head entity:
//   den(p)    = |{v : p in R(v)}|
//   num(p, c) = |{v : p in R(v) and c in R(v)}|
// C = num / den, or 0 when den = 0.

#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "cpsr/graph_store.hpp"

namespace cpsr {

class ConfidenceTable {
public:
    ConfidenceTable() = default;
    ConfidenceTable(std::size_t num_relations, std::vector<std::uint32_t> numerator,
                    std::vector<std::uint32_t> denominator);

    std::size_t num_relations() const { return num_relations_; }
    double confidence(RelationId premise, RelationId conclusion) const {
        return values_[premise * num_relations_ + conclusion];
    }
    std::uint32_t support_num(RelationId premise, RelationId conclusion) const {
        return numerator_[premise * num_relations_ + conclusion];
    }
    std::uint32_t support_den(RelationId premise) const { return denominator_[premise]; }

    bool operator==(const ConfidenceTable&) const = default;

private:
    std::size_t num_relations_ = 0;
    std::vector<std::uint32_t> numerator_;
    std::vector<std::uint32_t> denominator_;
    std::vector<double> values_;
};

// Rows are mined in parallel; identical to the serial reference.
ConfidenceTable mine_confidence(const KnowledgeGraph& kg);
ConfidenceTable mine_confidence_serial(const KnowledgeGraph& kg);

struct ConfidenceStats {
    double max = 0.0;
    double avg = 0.0;
};

// Max and mean of C(r => conclusion) over the candidates. Throws
// std::invalid_argument on an empty candidate set.
ConfidenceStats confidence_row_stats(const ConfidenceTable& table, RelationId conclusion,
                                     std::span<const RelationId> candidates);

// premise,conclusion,confidence,support_num,support_den
void write_confidence_csv(std::ostream& out, const ConfidenceTable& table, const RelationVocab& vocab);

}  // namespace cpsr
