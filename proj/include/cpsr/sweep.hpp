#pragma once

#include <iosfwd>
#include <span>
#include <vector>

#include "cpsr/evaluator.hpp"
#include "cpsr/graph_store.hpp"
#include "cpsr/trainer.hpp"

namespace cpsr {

// Test queries ranked on the inference graph; confidences for masking are
// mined from that graph's facts.
RankingMetrics evaluate_inductive(const InductiveSplit& split, const ModelParams& params, const TrainConfig& config);

struct SweepRow {
    double p_e = 0.0;
    RankingMetrics test;
};

// Trains from scratch per value with the shared seed and reports the test
// metrics of the best-validation parameters.
std::vector<SweepRow> sweep_pe(const InductiveSplit& split, const TrainConfig& config, std::span<const double> values);

// p_e,mrr
void write_sweep_csv(std::ostream& out, std::span<const SweepRow> rows);

}  // namespace cpsr
