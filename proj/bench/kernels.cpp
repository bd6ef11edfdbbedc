// Serial reference kernels against their OpenMP counterparts on a planted
// graph. Thread count is the benchmark argument; the serial variants ignore it.

#include <benchmark/benchmark.h>
#include <omp.h>

#include "cpsr/evaluator.hpp"
#include "cpsr/oracle.hpp"
#include "cpsr/trainer.hpp"

namespace {

using namespace cpsr;

struct Fixture {
    InductiveSplit split;
    ConfidenceTable table;
    ModelParams params;
    std::vector<TrainQuery> queries;
    BatchContext ctx;
    std::vector<RankedQuery> ranked;
    KnownAnswers known;
    EvalOptions eval;

    Fixture() {
        oracle::PlantedRuleSpec spec;
        spec.train_entities = 600;
        spec.inference_entities = 300;
        spec.distractor_relations = 6;
        spec.distractor_density = 1.0;
        split = oracle::generate_planted_kg(spec, {true, true});
        table = mine_confidence(split.train);
        params = ModelParams::random({split.train.num_relations(), 32, false}, 1);
        queries = make_train_queries(split.train);
        queries.resize(std::min<std::size_t>(queries.size(), 256));
        ctx.kg = &split.train;
        ctx.reasoner.hops = 3;
        ctx.reasoner.top_k = 50;
        ctx.mask_table = &table;
        ranked = make_ranked_queries(split.test, split.inference.relations());
        known = KnownAnswers(split.inference_known, split.inference.relations());
        eval.reasoner = ctx.reasoner;
    }
};

const Fixture& fixture() {
    static const Fixture f;
    return f;
}

void BM_BatchGradientSerial(benchmark::State& state) {
    const auto& f = fixture();
    for (auto _ : state) benchmark::DoNotOptimize(batch_gradient_serial(f.ctx, f.params, f.queries));
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(f.queries.size()));
}

void BM_BatchGradientParallel(benchmark::State& state) {
    const auto& f = fixture();
    omp_set_num_threads(static_cast<int>(state.range(0)));
    for (auto _ : state) benchmark::DoNotOptimize(batch_gradient(f.ctx, f.params, f.queries));
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(f.queries.size()));
}

void BM_EvaluateSerial(benchmark::State& state) {
    const auto& f = fixture();
    const ModelParams p = ModelParams::random({f.split.inference.num_relations(), 32, false}, 2);
    for (auto _ : state) benchmark::DoNotOptimize(evaluate_serial(f.split.inference, p, f.ranked, f.known, f.eval));
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(f.ranked.size()));
}

void BM_EvaluateParallel(benchmark::State& state) {
    const auto& f = fixture();
    const ModelParams p = ModelParams::random({f.split.inference.num_relations(), 32, false}, 2);
    omp_set_num_threads(static_cast<int>(state.range(0)));
    for (auto _ : state) benchmark::DoNotOptimize(evaluate(f.split.inference, p, f.ranked, f.known, f.eval));
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(f.ranked.size()));
}

void BM_MineConfidenceSerial(benchmark::State& state) {
    const auto& f = fixture();
    for (auto _ : state) benchmark::DoNotOptimize(mine_confidence_serial(f.split.train));
}

void BM_MineConfidenceParallel(benchmark::State& state) {
    const auto& f = fixture();
    omp_set_num_threads(static_cast<int>(state.range(0)));
    for (auto _ : state) benchmark::DoNotOptimize(mine_confidence(f.split.train));
}

}  // namespace

BENCHMARK(BM_BatchGradientSerial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_BatchGradientParallel)->RangeMultiplier(2)->Range(1, 8)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_EvaluateSerial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_EvaluateParallel)->RangeMultiplier(2)->Range(1, 8)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_MineConfidenceSerial)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_MineConfidenceParallel)->RangeMultiplier(2)->Range(1, 8)->Unit(benchmark::kMicrosecond)->UseRealTime();

BENCHMARK_MAIN();
