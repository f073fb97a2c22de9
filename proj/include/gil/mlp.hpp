#pragma once

#include <cstdint>
#include <vector>

#include "gil/graph.hpp"
#include "gil/rng.hpp"
#include "gil/tensor.hpp"

namespace gil::nn {

/// One fully connected layer. Weights are stored input x output so the
/// forward pass is `x * w + b`.
struct Layer {
    Tensor w;
    Tensor b;
    Act act = Act::linear;
    double leak = 0.2;
};

struct Mlp {
    std::vector<Layer> layers;

    int in_dim() const { return layers.empty() ? 0 : layers.front().w.shape[0]; }
    int out_dim() const { return layers.empty() ? 0 : layers.back().w.shape[1]; }
    long long param_count() const;
};

/// He-style initialization; `dims` is {in, h1, ..., out}, one activation per
/// layer.
Mlp make_mlp(const std::vector<int>& dims, const std::vector<Act>& acts, Rng& rng,
             double leak = 0.2);

/// Zero all parameters of the final layer (used for prediction heads that
/// must start at exactly zero output).
void zero_final_layer(Mlp& net);

/// Leaf node ids of one network's parameters inside a graph. Multiple
/// forward passes through the same binding share leaves, so gradients from
/// all of them accumulate.
struct MlpRef {
    const Mlp* net = nullptr;
    std::vector<int> w, b;
};

MlpRef bind(Graph& g, const Mlp& net);

/// Forward pass through a bound network; `preact` holds the pre-activation
/// node of every layer, which the input-gradient construction needs.
struct Trace {
    int input = -1;
    int out = -1;
    std::vector<int> preact;
};

Trace mlp_forward(Graph& g, const MlpRef& ref, int input);

/// Builds graph nodes whose value is d(output)/d(input) for a scalar-output
/// network with piecewise-linear activations. The returned node is itself
/// differentiable w.r.t. the weight leaves, which is what the gradient
/// penalty needs.
int input_gradient_node(Graph& g, const MlpRef& ref, const Trace& trace);

/// Plain inference path (no tape).
Tensor mlp_apply(const Mlp& net, const Tensor& input);

/// Per-layer gradients read back from a graph after backward().
struct MlpGrads {
    std::vector<Tensor> w, b;
};

MlpGrads grads_of(const Graph& g, const MlpRef& ref);

/// FNV-1a over the exact parameter bytes; used for frozen-network checks.
uint64_t param_checksum(const Mlp& net);

} // namespace gil::nn
