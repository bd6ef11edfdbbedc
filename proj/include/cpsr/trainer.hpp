#pragma once
// Multi-class log-loss over all entities, reverse-mode gradients replayed from
// a ForwardTrace, and the training loop.
//
// Top-k selection and relation masking are discrete choices fixed by the
// forward pass; gradients flow only through the edges it kept. w_path only
// drives selection, so its gradient is zero.

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "cpsr/checkpoint.hpp"
#include "cpsr/evaluator.hpp"
#include "cpsr/graph_store.hpp"
#include "cpsr/model.hpp"
#include "cpsr/optimizer.hpp"
#include "cpsr/path_reasoner.hpp"
#include "cpsr/query_masking.hpp"

namespace cpsr {

// -score(target) + log sum_x exp(score(x)) over every entity; unreached
// entities contribute exp(0).
double multiclass_loss(const ScoreMap& scores, EntityId target);

// Gradient of one query's loss with respect to its edge messages phi(r_q, r)
// and w_out. Everything else follows from these by the chain rule through
// phi = W_mix[r_q]^T [h_{r_q}; h_r].
struct MessageGradient {
    RelationId query_rel = 0;
    std::vector<double> d_messages;  // |R| x d
    std::vector<char> touched;       // per relation
    std::vector<double> d_w_out;     // d
    double loss = 0.0;
};

// Throws std::invalid_argument when the trace was not produced by `params`.
MessageGradient message_gradient(const ForwardTrace& trace, const ModelParams& params, EntityId target);

// grads += scale * (chain rule of `g` into H_rel, W_mix, w_out).
void accumulate_gradient(Gradients& grads, const ModelParams& params, const MessageGradient& g, double scale);

Gradients backward(const ForwardTrace& trace, const ModelParams& params, EntityId target);

struct TrainQuery {
    Query query;
    EntityId target = 0;
    std::uint64_t index = 0;  // stable id, keys the mask stream
};

// One query per fact (s, r, o), plus (o, r^-1, s) with inverses. The fact and
// its inverse edge are hidden from their own query.
std::vector<TrainQuery> make_train_queries(const KnowledgeGraph& kg);

struct BatchContext {
    const KnowledgeGraph* kg = nullptr;
    ReasonerConfig reasoner;
    const ConfidenceTable* mask_table = nullptr;  // null: no masking
    MaskConfig mask;
    std::uint64_t mask_epoch = 0;
};

struct BatchGradient {
    Gradients grad;  // mean over the batch
    double loss_sum = 0.0;
};

// Per-query forward/backward in parallel, reduced in query order; bit-equal to
// batch_gradient_serial for any thread count.
BatchGradient batch_gradient(const BatchContext& ctx, const ModelParams& params, std::span<const TrainQuery> batch);
BatchGradient batch_gradient_serial(const BatchContext& ctx, const ModelParams& params,
                                    std::span<const TrainQuery> batch);

struct TrainConfig {
    ReasonerConfig reasoner;
    MaskConfig mask;
    bool masking = true;
    bool eval_mask = true;
    bool resample_mask_per_epoch = true;
    bool filtered = true;
    std::size_t dim = 64;
    bool shared_mix = false;
    std::size_t batch_size = 100;
    AdamConfig adam;
    std::uint32_t epochs = 20;
    std::uint64_t seed = 42;
    bool resume = false;

    void validate() const;
};

struct EpochRecord {
    std::uint32_t epoch = 0;
    double loss = 0.0;
    RankingMetrics valid;
};

struct FitResult {
    ModelParams best;
    ModelParams last;
    OptimizerState optimizer;
    TrainingState training;
    std::vector<EpochRecord> log;  // epochs run by this call
};

// With a non-empty `out_dir`, writes last.ckpt and best.ckpt after every
// epoch and appends to train_log.csv (epoch,loss,valid_mrr,valid_h1,valid_h10).
// `resume` continues from out_dir/last.ckpt.
FitResult fit(const InductiveSplit& split, const TrainConfig& config, const std::filesystem::path& out_dir = {});

EvalOptions eval_options(const TrainConfig& config, const ConfidenceTable* table);

}  // namespace cpsr
