#include "cpsr/model.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

namespace cpsr {

namespace {

bool finite(const ParamTensors& t) {
    bool ok = true;
    t.for_each_block([&ok](const std::vector<double>& block) {
        for (double x : block) ok = ok && std::isfinite(x);
    });
    return ok;
}

}  // namespace

void ParamTensors::allocate(ParamTensors& t, const ModelShape& shape) {
    if (shape.dim == 0) throw std::invalid_argument("embedding dimension must be positive");
    if (shape.num_relations == 0) throw std::invalid_argument("model needs at least one relation");
    t.shape = shape;
    t.rel_emb.assign(shape.num_relations * shape.dim, 0.0);
    t.mix.assign(shape.num_mix() * 2 * shape.dim * shape.dim, 0.0);
    t.w_path.assign(shape.dim, 0.0);
    t.w_out.assign(shape.dim, 0.0);
}

double& ParamTensors::at(std::size_t flat) {
    for (auto* block : {&rel_emb, &mix, &w_path, &w_out}) {
        if (flat < block->size()) return (*block)[flat];
        flat -= block->size();
    }
    throw std::out_of_range("parameter index out of range");
}

double ParamTensors::at(std::size_t flat) const {
    return const_cast<ParamTensors*>(this)->at(flat);
}

ModelParams ModelParams::zeros(const ModelShape& shape) {
    ModelParams p;
    allocate(p, shape);
    return p;
}

ModelParams ModelParams::random(const ModelShape& shape, std::uint64_t seed) {
    ModelParams p = zeros(shape);
    std::mt19937_64 rng(seed);
    const double d = static_cast<double>(shape.dim);
    auto fill = [&rng](std::vector<double>& block, double stddev) {
        std::normal_distribution<double> dist(0.0, stddev);
        for (double& x : block) x = dist(rng);
    };
    fill(p.rel_emb, 1.0 / std::sqrt(d));
    fill(p.mix, 1.0 / std::sqrt(2.0 * d));
    fill(p.w_path, 1.0 / std::sqrt(d));
    fill(p.w_out, 1.0 / std::sqrt(d));
    return p;
}

bool ModelParams::all_finite() const { return finite(*this); }

Gradients Gradients::zeros(const ModelShape& shape) {
    Gradients g;
    allocate(g, shape);
    return g;
}

bool Gradients::all_finite() const { return finite(*this); }

void Gradients::scale(double factor) {
    for_each_block([factor](std::vector<double>& block) {
        for (double& x : block) x *= factor;
    });
}

void Gradients::add(const Gradients& other) {
    if (!(shape == other.shape)) throw std::invalid_argument("gradient shapes differ");
    auto add_block = [](std::vector<double>& a, const std::vector<double>& b) {
        for (std::size_t i = 0; i < a.size(); ++i) a[i] += b[i];
    };
    add_block(rel_emb, other.rel_emb);
    add_block(mix, other.mix);
    add_block(w_path, other.w_path);
    add_block(w_out, other.w_out);
}

}  // namespace cpsr
