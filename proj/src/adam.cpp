#include "gil/adam.hpp"

#include <cmath>

namespace gil::nn {

AdamState make_adam(const Mlp& net, AdamConfig cfg) {
    AdamState s;
    s.cfg = cfg;
    for (const Layer& l : net.layers) {
        s.mw.push_back(Tensor::zeros(l.w.shape));
        s.vw.push_back(Tensor::zeros(l.w.shape));
        s.mb.push_back(Tensor::zeros(l.b.shape));
        s.vb.push_back(Tensor::zeros(l.b.shape));
    }
    return s;
}

namespace {

void update_tensor(Tensor& param, const Tensor& grad, Tensor& m, Tensor& v, const AdamConfig& cfg,
                   long long t, const std::string& name) {
    if (!param.same_shape(grad))
        throw DimensionError("adam_step: gradient shape " + shape_str(grad.shape) +
                             " does not match parameter " + name + " " + shape_str(param.shape));
    if (!grad.all_finite())
        throw NumericError("adam_step: non-finite gradient for parameter " + name);
    double c1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(t));
    double c2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(t));
    for (long long i = 0; i < param.numel(); ++i) {
        double g = grad.data[i];
        m.data[i] = cfg.beta1 * m.data[i] + (1.0 - cfg.beta1) * g;
        v.data[i] = cfg.beta2 * v.data[i] + (1.0 - cfg.beta2) * g * g;
        double mhat = m.data[i] / c1;
        double vhat = v.data[i] / c2;
        param.data[i] -= cfg.lr * mhat / (std::sqrt(vhat) + cfg.eps);
    }
}

} // namespace

void adam_step(Mlp& net, const MlpGrads& grads, AdamState& state) {
    if (grads.w.size() != net.layers.size() || grads.b.size() != net.layers.size())
        throw DimensionError("adam_step: gradient layer count does not match network");
    state.t += 1;
    for (size_t i = 0; i < net.layers.size(); ++i) {
        update_tensor(net.layers[i].w, grads.w[i], state.mw[i], state.vw[i], state.cfg, state.t,
                      "layer " + std::to_string(i) + " weight");
        update_tensor(net.layers[i].b, grads.b[i], state.mb[i], state.vb[i], state.cfg, state.t,
                      "layer " + std::to_string(i) + " bias");
    }
}

} // namespace gil::nn
