#pragma once

#include <cstdint>

#include "cpsr/model.hpp"

namespace cpsr {

struct AdamConfig {
    double lr = 5e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;

    bool operator==(const AdamConfig&) const = default;
};

struct OptimizerState {
    AdamConfig config;
    std::uint64_t step = 0;
    Gradients m;  // first moment
    Gradients v;  // second moment

    static OptimizerState init(const ModelParams& params, const AdamConfig& config);
    bool operator==(const OptimizerState&) const = default;
};

// Bias-corrected Adam. Throws std::invalid_argument on a shape mismatch or a
// non-finite gradient, leaving params and state untouched.
void adam_step(ModelParams& params, const Gradients& grads, OptimizerState& state);

}  // namespace cpsr
