#pragma once

#include "gil/mlp.hpp"

namespace gil::nn {

struct AdamConfig {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

/// First/second moment accumulators per parameter tensor, zero at t = 0.
struct AdamState {
    AdamConfig cfg;
    long long t = 0;
    std::vector<Tensor> mw, vw, mb, vb;
};

AdamState make_adam(const Mlp& net, AdamConfig cfg);

/// One bias-corrected update. Throws NumericError naming the parameter if a
/// gradient is non-finite.
void adam_step(Mlp& net, const MlpGrads& grads, AdamState& state);

} // namespace gil::nn
