#include "cpsr/sweep.hpp"

#include <cstdio>
#include <ostream>
#include <stdexcept>

namespace cpsr {

RankingMetrics evaluate_inductive(const InductiveSplit& split, const ModelParams& params, const TrainConfig& config) {
    const KnowledgeGraph& kg = split.inference;
    const ConfidenceTable table = mine_confidence(kg);
    const auto queries = make_ranked_queries(split.test, kg.relations());
    const KnownAnswers known(split.inference_known, kg.relations());
    return evaluate(kg, params, queries, known, eval_options(config, &table));
}

std::vector<SweepRow> sweep_pe(const InductiveSplit& split, const TrainConfig& config, std::span<const double> values) {
    std::vector<SweepRow> rows;
    for (double p_e : values) {
        if (!(p_e >= 0.0 && p_e <= 1.0)) throw std::invalid_argument("sweep values must lie in [0, 1]");
        TrainConfig c = config;
        c.mask.p_e = p_e;
        c.resume = false;
        const auto trained = fit(split, c);
        rows.push_back({p_e, evaluate_inductive(split, trained.best, c)});
    }
    return rows;
}

void write_sweep_csv(std::ostream& out, std::span<const SweepRow> rows) {
    out << "p_e,mrr\n";
    char buf[64];
    for (const auto& r : rows) {
        std::snprintf(buf, sizeof buf, "%g,%.6f\n", r.p_e, r.test.mrr());
        out << buf;
    }
}

}  // namespace cpsr
