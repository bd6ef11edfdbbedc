#pragma once
// Relation-level parameters. Nothing here is indexed by entity, so a trained
// model transfers to a graph of unseen entities sharing the relation set.
//
//   rel_emb  |R| x d        relation embeddings h_r
//   mix      M x (2d x d)   one mixing matrix per query relation (M = |R|),
//                           or a single shared matrix (M = 1); row-major
//   w_path   d              scores a reached node for Top-k pruning
//   w_out    d              final entity score w_out . h

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "cpsr/graph_store.hpp"

namespace cpsr {

struct ModelShape {
    std::size_t num_relations = 0;
    std::size_t dim = 0;
    bool shared_mix = false;

    std::size_t num_mix() const { return shared_mix ? 1 : num_relations; }
    bool operator==(const ModelShape&) const = default;
};

struct ParamTensors {
    ModelShape shape;
    std::vector<double> rel_emb;
    std::vector<double> mix;
    std::vector<double> w_path;
    std::vector<double> w_out;

    std::size_t dim() const { return shape.dim; }
    std::size_t size() const { return rel_emb.size() + mix.size() + w_path.size() + w_out.size(); }

    std::span<const double> relation(RelationId r) const {
        return std::span<const double>(rel_emb).subspan(r * shape.dim, shape.dim);
    }
    std::span<double> relation(RelationId r) { return std::span<double>(rel_emb).subspan(r * shape.dim, shape.dim); }

    std::size_t mix_index(RelationId query_rel) const { return shape.shared_mix ? 0 : query_rel; }
    std::span<const double> mix_matrix(RelationId query_rel) const {
        const std::size_t n = 2 * shape.dim * shape.dim;
        return std::span<const double>(mix).subspan(mix_index(query_rel) * n, n);
    }
    std::span<double> mix_matrix(RelationId query_rel) {
        const std::size_t n = 2 * shape.dim * shape.dim;
        return std::span<double>(mix).subspan(mix_index(query_rel) * n, n);
    }

    // Visits rel_emb, mix, w_path, w_out in that (checkpoint) order.
    template <typename F>
    void for_each_block(F&& f) {
        f(rel_emb);
        f(mix);
        f(w_path);
        f(w_out);
    }
    template <typename F>
    void for_each_block(F&& f) const {
        f(rel_emb);
        f(mix);
        f(w_path);
        f(w_out);
    }

    double& at(std::size_t flat);
    double at(std::size_t flat) const;

    bool operator==(const ParamTensors&) const = default;

protected:
    static void allocate(ParamTensors& t, const ModelShape& shape);
};

struct ModelParams : ParamTensors {
    static ModelParams zeros(const ModelShape& shape);
    // Gaussian init scaled by fan-in; deterministic in `seed`.
    static ModelParams random(const ModelShape& shape, std::uint64_t seed);

    bool all_finite() const;
};

struct Gradients : ParamTensors {
    static Gradients zeros(const ModelShape& shape);
    static Gradients zeros_like(const ModelParams& params) { return zeros(params.shape); }

    bool all_finite() const;
    void scale(double factor);
    void add(const Gradients& other);
};

}  // namespace cpsr
