#include "cpsr/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <optional>
#include <random>
#include <stdexcept>

#include "parallel.hpp"

namespace cpsr {

namespace {

double log_partition(std::span<const double> reached, std::size_t num_entities) {
    const std::size_t unreached = num_entities - reached.size();
    double m = unreached ? 0.0 : -std::numeric_limits<double>::infinity();
    for (double s : reached) m = std::max(m, s);
    double z = static_cast<double>(unreached) * std::exp(-m);
    for (double s : reached) z += std::exp(s - m);
    return m + std::log(z);
}

double dot(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

std::uint64_t epoch_seed(std::uint64_t seed, std::uint64_t epoch) {
    std::uint64_t z = seed ^ (epoch + 1) * 0x9E3779B97F4A7C15ULL;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

}  // namespace

double multiclass_loss(const ScoreMap& scores, EntityId target) {
    if (target >= scores.num_entities) throw std::invalid_argument("target outside the entity vocabulary");
    return log_partition(scores.scores, scores.num_entities) - scores.score(target);
}

MessageGradient message_gradient(const ForwardTrace& trace, const ModelParams& params, EntityId target) {
    if (!(trace.shape == params.shape) || trace.fingerprint != params_fingerprint(params, trace.query_rel)) {
        throw std::invalid_argument("trace was produced by different parameters");
    }
    if (target >= trace.num_entities) throw std::invalid_argument("target outside the entity vocabulary");

    const std::size_t d = params.dim();
    const std::size_t nr = params.shape.num_relations;
    MessageGradient out;
    out.query_rel = trace.query_rel;
    out.d_messages.assign(nr * d, 0.0);
    out.touched.assign(nr, 0);
    out.d_w_out.assign(d, 0.0);

    if (!trace.reached_final_hop()) {
        out.loss = std::log(static_cast<double>(trace.num_entities));
        return out;
    }

    const Frontier& last = trace.hops.back().frontier;
    const std::size_t n = last.size();
    std::vector<double> scores(n);
    for (std::size_t i = 0; i < n; ++i) scores[i] = dot(params.w_out, last.emb(i, d));
    const double lse = log_partition(scores, trace.num_entities);
    const auto t = last.index_of(target);
    out.loss = lse - (t ? scores[*t] : 0.0);

    std::vector<double> g(n * d);
    for (std::size_t i = 0; i < n; ++i) {
        const double coeff = std::exp(scores[i] - lse) - (t && *t == i ? 1.0 : 0.0);
        const auto h = last.emb(i, d);
        for (std::size_t j = 0; j < d; ++j) {
            out.d_w_out[j] += coeff * h[j];
            g[i * d + j] = coeff * params.w_out[j];
        }
    }

    for (std::size_t l = trace.hops.size(); l-- > 0;) {
        const HopRecord& rec = trace.hops[l];
        if (trace.rectifier) {
            const auto& pre = rec.frontier.pre_activation;
            for (std::size_t k = 0; k < g.size(); ++k) {
                if (!(pre[k] > 0.0)) g[k] = 0.0;
            }
        }
        const std::size_t prev_size = l == 0 ? 0 : trace.hops[l - 1].frontier.size();
        const std::vector<double>& walks = l == 0 ? trace.origin.walks : trace.hops[l - 1].frontier.walks;
        std::vector<double> g_prev(prev_size * d, 0.0);
        for (std::size_t k = 0; k < rec.edge_src.size(); ++k) {
            const double* gd = g.data() + rec.edge_dst[k] * d;
            double* dm = out.d_messages.data() + rec.edge_rel[k] * d;
            out.touched[rec.edge_rel[k]] = 1;
            const double n = walks[rec.edge_src[k]];
            for (std::size_t j = 0; j < d; ++j) dm[j] += n * gd[j];
            if (l > 0) {
                double* gp = g_prev.data() + rec.edge_src[k] * d;
                for (std::size_t j = 0; j < d; ++j) gp[j] += gd[j];
            }
        }
        g = std::move(g_prev);
    }
    return out;
}

void accumulate_gradient(Gradients& grads, const ModelParams& params, const MessageGradient& g, double scale) {
    if (!(grads.shape == params.shape)) throw std::invalid_argument("gradient and parameter shapes differ");
    const std::size_t d = params.dim();
    const std::size_t nr = params.shape.num_relations;
    const RelationId q = g.query_rel;
    const auto w = params.mix_matrix(q);
    auto dw = grads.mix_matrix(q);
    const auto hq = params.relation(q);

    std::vector<double> sum(d, 0.0);
    for (RelationId r = 0; r < nr; ++r) {
        if (!g.touched[r]) continue;
        for (std::size_t j = 0; j < d; ++j) sum[j] += g.d_messages[r * d + j];
    }

    // Query half of the concatenation: rows [0, d) of W.
    {
        auto dhq = grads.relation(q);
        for (std::size_t i = 0; i < d; ++i) {
            double acc = 0.0;
            for (std::size_t j = 0; j < d; ++j) {
                dw[i * d + j] += scale * hq[i] * sum[j];
                acc += w[i * d + j] * sum[j];
            }
            dhq[i] += scale * acc;
        }
    }
    // Edge-relation half: rows [d, 2d).
    for (RelationId r = 0; r < nr; ++r) {
        if (!g.touched[r]) continue;
        const double* dphi = g.d_messages.data() + r * d;
        const auto hr = params.relation(r);
        auto dhr = grads.relation(r);
        for (std::size_t i = 0; i < d; ++i) {
            double acc = 0.0;
            const std::size_t row = (d + i) * d;
            for (std::size_t j = 0; j < d; ++j) {
                dw[row + j] += scale * hr[i] * dphi[j];
                acc += w[row + j] * dphi[j];
            }
            dhr[i] += scale * acc;
        }
    }
    for (std::size_t j = 0; j < d; ++j) grads.w_out[j] += scale * g.d_w_out[j];
}

Gradients backward(const ForwardTrace& trace, const ModelParams& params, EntityId target) {
    Gradients grads = Gradients::zeros_like(params);
    accumulate_gradient(grads, params, message_gradient(trace, params, target), 1.0);
    return grads;
}

std::vector<TrainQuery> make_train_queries(const KnowledgeGraph& kg) {
    const auto& vocab = kg.relations();
    std::vector<TrainQuery> out;
    const auto triples = kg.triples();
    for (std::size_t i = 0; i < kg.num_base_triples(); ++i) {
        const Triple t = triples[i];
        std::vector<EdgeId> hidden;
        if (auto e = kg.find_edge(t)) hidden.push_back(*e);
        std::optional<Triple> inv;
        if (vocab.has_inverse()) {
            inv = Triple{t.tail, vocab.inverse(t.rel), t.head};
            if (auto e = kg.find_edge(*inv)) hidden.push_back(*e);
        }
        out.push_back({Query{t.head, t.rel, hidden}, t.tail, 2 * i});
        if (inv) out.push_back({Query{inv->head, inv->rel, hidden}, inv->tail, 2 * i + 1});
    }
    return out;
}

namespace {

MessageGradient query_gradient(const BatchContext& ctx, const ModelParams& params, const TrainQuery& q) {
    const MaskContext mask{ctx.mask_table, ctx.mask, ctx.mask_epoch, q.index};
    const auto result = forward(*ctx.kg, params, q.query, ctx.reasoner, mask);
    return message_gradient(result.trace, params, q.target);
}

// Fixed-order reduction shared by the serial and parallel kernels.
BatchGradient reduce(const ModelParams& params, std::vector<MessageGradient>& per_query) {
    BatchGradient out;
    out.grad = Gradients::zeros_like(params);
    if (per_query.empty()) return out;

    std::map<RelationId, MessageGradient> by_relation;
    for (auto& g : per_query) {
        out.loss_sum += g.loss;
        auto [it, inserted] = by_relation.try_emplace(g.query_rel);
        if (inserted) {
            it->second = std::move(g);
            continue;
        }
        auto& acc = it->second;
        for (std::size_t k = 0; k < acc.d_messages.size(); ++k) acc.d_messages[k] += g.d_messages[k];
        for (std::size_t k = 0; k < acc.touched.size(); ++k) acc.touched[k] |= g.touched[k];
        for (std::size_t k = 0; k < acc.d_w_out.size(); ++k) acc.d_w_out[k] += g.d_w_out[k];
    }
    const double scale = 1.0 / static_cast<double>(per_query.size());
    for (const auto& [rel, g] : by_relation) accumulate_gradient(out.grad, params, g, scale);
    return out;
}

}  // namespace

BatchGradient batch_gradient(const BatchContext& ctx, const ModelParams& params, std::span<const TrainQuery> batch) {
    std::vector<MessageGradient> per_query(batch.size());
    detail::ExceptionSlot error;
    const auto n = static_cast<std::int64_t>(batch.size());
#pragma omp parallel for schedule(dynamic, 1)
    for (std::int64_t i = 0; i < n; ++i) {
        error.run([&] {
            const auto k = static_cast<std::size_t>(i);
            per_query[k] = query_gradient(ctx, params, batch[k]);
        });
    }
    error.rethrow();
    return reduce(params, per_query);
}

BatchGradient batch_gradient_serial(const BatchContext& ctx, const ModelParams& params,
                                    std::span<const TrainQuery> batch) {
    std::vector<MessageGradient> per_query;
    per_query.reserve(batch.size());
    for (const auto& q : batch) per_query.push_back(query_gradient(ctx, params, q));
    return reduce(params, per_query);
}

void TrainConfig::validate() const {
    mask.validate();
    if (batch_size == 0) throw std::invalid_argument("batch_size must be at least 1");
    if (epochs == 0) throw std::invalid_argument("epochs must be at least 1");
    if (dim == 0) throw std::invalid_argument("d must be positive");
    if (reasoner.hops == 0) throw std::invalid_argument("L must be at least 1");
    if (reasoner.top_k == 0) throw std::invalid_argument("K must be at least 1");
    if (!(adam.lr >= 0.0)) throw std::invalid_argument("lr must be non-negative");
}

EvalOptions eval_options(const TrainConfig& config, const ConfidenceTable* table) {
    EvalOptions o;
    o.reasoner = config.reasoner;
    o.mask_table = config.masking && config.eval_mask ? table : nullptr;
    o.mask = config.mask;
    o.filtered = config.filtered;
    return o;
}

namespace {

void append_log_row(const std::filesystem::path& path, const EpochRecord& rec) {
    std::ofstream out(path, std::ios::app | std::ios::binary);
    char buf[160];
    std::snprintf(buf, sizeof buf, "%u,%.10f,%.6f,%.6f,%.6f\n", rec.epoch, rec.loss, rec.valid.mrr(),
                  rec.valid.hits_at(1), rec.valid.hits_at(10));
    out << buf;
}

}  // namespace

FitResult fit(const InductiveSplit& split, const TrainConfig& config, const std::filesystem::path& out_dir) {
    config.validate();
    const KnowledgeGraph& kg = split.train;
    const ModelShape shape{kg.num_relations(), config.dim, config.shared_mix};

    FitResult res;
    res.last = ModelParams::random(shape, config.seed);
    res.best = res.last;
    res.optimizer = OptimizerState::init(res.last, config.adam);

    const bool persist = !out_dir.empty();
    const auto log_path = out_dir / "train_log.csv";
    if (persist) std::filesystem::create_directories(out_dir);

    if (config.resume) {
        if (!persist) throw std::invalid_argument("resume needs an output directory");
        auto ckpt = load_checkpoint(out_dir / "last.ckpt");
        if (!(ckpt.params.shape == shape)) throw std::runtime_error("checkpoint shape disagrees with the config");
        res.last = std::move(ckpt.params);
        res.optimizer = std::move(ckpt.optimizer);
        res.optimizer.config = config.adam;
        res.training = ckpt.training;
        res.best = std::filesystem::exists(out_dir / "best.ckpt") ? load_checkpoint(out_dir / "best.ckpt").params
                                                                  : res.last;
    } else if (persist) {
        std::ofstream(log_path, std::ios::trunc | std::ios::binary) << "epoch,loss,valid_mrr,valid_h1,valid_h10\n";
    }

    const auto queries = make_train_queries(kg);
    const ConfidenceTable table = mine_confidence(kg);
    const auto valid_queries = make_ranked_queries(split.valid, kg.relations());
    const KnownAnswers valid_known(split.train_known, kg.relations());
    const auto valid_opts = eval_options(config, &table);

    BatchContext ctx;
    ctx.kg = &kg;
    ctx.reasoner = config.reasoner;
    ctx.mask_table = config.masking ? &table : nullptr;
    ctx.mask = config.mask;

    std::vector<std::size_t> order(queries.size());
    std::vector<TrainQuery> batch;
    for (std::uint32_t epoch = res.training.epochs_done + 1; epoch <= config.epochs; ++epoch) {
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
        std::mt19937_64 rng(epoch_seed(config.seed, epoch));
        std::shuffle(order.begin(), order.end(), rng);
        ctx.mask_epoch = config.resample_mask_per_epoch ? epoch : 0;

        double loss_sum = 0.0;
        for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
            const std::size_t end = std::min(order.size(), start + config.batch_size);
            batch.clear();
            for (std::size_t k = start; k < end; ++k) batch.push_back(queries[order[k]]);
            auto bg = batch_gradient(ctx, res.last, batch);
            loss_sum += bg.loss_sum;
            adam_step(res.last, bg.grad, res.optimizer);
        }

        EpochRecord rec;
        rec.epoch = epoch;
        rec.loss = queries.empty() ? 0.0 : loss_sum / static_cast<double>(queries.size());
        rec.valid = evaluate(kg, res.last, valid_queries, valid_known, valid_opts);
        if (rec.valid.mrr() > res.training.best_valid_mrr || valid_queries.empty()) {
            res.training.best_valid_mrr = rec.valid.mrr();
            res.training.best_epoch = epoch;
            res.best = res.last;
        }
        res.training.epochs_done = epoch;
        res.log.push_back(rec);

        if (persist) {
            save_checkpoint(out_dir / "last.ckpt", {res.last, res.optimizer, res.training});
            if (res.training.best_epoch == epoch) {
                save_checkpoint(out_dir / "best.ckpt", {res.best, res.optimizer, res.training});
            }
            append_log_row(log_path, rec);
        }
    }
    return res;
}

}  // namespace cpsr
