#include "cpsr/optimizer.hpp"

#include <cmath>
#include <stdexcept>

namespace cpsr {

OptimizerState OptimizerState::init(const ModelParams& params, const AdamConfig& config) {
    OptimizerState s;
    s.config = config;
    s.m = Gradients::zeros_like(params);
    s.v = Gradients::zeros_like(params);
    return s;
}

void adam_step(ModelParams& params, const Gradients& grads, OptimizerState& state) {
    if (!(grads.shape == params.shape) || !(state.m.shape == params.shape) || !(state.v.shape == params.shape)) {
        throw std::invalid_argument("adam_step: shape mismatch");
    }
    if (!grads.all_finite()) throw std::invalid_argument("adam_step: non-finite gradient");

    const auto& c = state.config;
    ++state.step;
    const double t = static_cast<double>(state.step);
    const double bias1 = 1.0 - std::pow(c.beta1, t);
    const double bias2 = 1.0 - std::pow(c.beta2, t);

    auto update = [&](std::vector<double>& p, const std::vector<double>& g, std::vector<double>& m,
                      std::vector<double>& v) {
        for (std::size_t i = 0; i < p.size(); ++i) {
            m[i] = c.beta1 * m[i] + (1.0 - c.beta1) * g[i];
            v[i] = c.beta2 * v[i] + (1.0 - c.beta2) * g[i] * g[i];
            const double m_hat = m[i] / bias1;
            const double v_hat = v[i] / bias2;
            p[i] -= c.lr * m_hat / (std::sqrt(v_hat) + c.eps);
        }
    };
    update(params.rel_emb, grads.rel_emb, state.m.rel_emb, state.v.rel_emb);
    update(params.mix, grads.mix, state.m.mix, state.v.mix);
    update(params.w_path, grads.w_path, state.m.w_path, state.v.w_path);
    update(params.w_out, grads.w_out, state.m.w_out, state.v.w_out);
}

}  // namespace cpsr
