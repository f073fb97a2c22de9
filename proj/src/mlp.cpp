#include "gil/mlp.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <cstring>

namespace gil::nn {

long long Mlp::param_count() const {
    long long n = 0;
    for (const Layer& l : layers) n += l.w.numel() + l.b.numel();
    return n;
}

Mlp make_mlp(const std::vector<int>& dims, const std::vector<Act>& acts, Rng& rng, double leak) {
    if (dims.size() < 2 || acts.size() != dims.size() - 1)
        throw DimensionError("make_mlp: need n+1 dims for n activations");
    Mlp net;
    for (size_t i = 0; i + 1 < dims.size(); ++i) {
        Layer l;
        l.w = Tensor::zeros({dims[i], dims[i + 1]});
        double s = std::sqrt(2.0 / dims[i]);
        for (double& v : l.w.data) v = s * rng.normal();
        l.b = Tensor::zeros({dims[i + 1]});
        l.act = acts[i];
        l.leak = leak;
        net.layers.push_back(std::move(l));
    }
    return net;
}

void zero_final_layer(Mlp& net) {
    Layer& l = net.layers.back();
    std::fill(l.w.data.begin(), l.w.data.end(), 0.0);
    std::fill(l.b.data.begin(), l.b.data.end(), 0.0);
}

MlpRef bind(Graph& g, const Mlp& net) {
    MlpRef ref;
    ref.net = &net;
    for (const Layer& l : net.layers) {
        ref.w.push_back(g.leaf(l.w));
        ref.b.push_back(g.leaf(l.b));
    }
    return ref;
}

Trace mlp_forward(Graph& g, const MlpRef& ref, int input) {
    const Mlp& net = *ref.net;
    Trace t;
    t.input = input;
    int h = input;
    for (size_t i = 0; i < net.layers.size(); ++i) {
        const Layer& l = net.layers[i];
        if (g.val(h).cols() != l.w.shape[0])
            throw DimensionError("mlp_forward: layer " + std::to_string(i) + " expects width " +
                                 std::to_string(l.w.shape[0]) + ", got " +
                                 std::to_string(g.val(h).cols()));
        int z = g.add(g.matmul(h, ref.w[i]), ref.b[i]);
        t.preact.push_back(z);
        switch (l.act) {
            case Act::linear: h = z; break;
            case Act::relu: h = g.relu(z); break;
            case Act::leaky_relu: h = g.leaky_relu(z, l.leak); break;
            case Act::tanh: h = g.tanh_act(z); break;
        }
    }
    t.out = h;
    return t;
}

int input_gradient_node(Graph& g, const MlpRef& ref, const Trace& trace) {
    const Mlp& net = *ref.net;
    if (net.layers.empty()) throw ContractError("input_gradient_node: empty network");
    if (net.layers.back().w.shape[1] != 1)
        throw ContractError("input_gradient_node: network output must be scalar per row");
    for (const Layer& l : net.layers)
        if (l.act == Act::tanh)
            throw CapabilityError("input_gradient_node: activation '" + act_name(l.act) +
                                  "' is not supported (piecewise-linear only)");

    int rows = g.val(trace.input).rows();
    int n_layers = static_cast<int>(net.layers.size());

    // d(out)/d(z_L), then walk the chain down: u <- (u * W_l^T) .* mask_{l-1}
    const Layer& top = net.layers[n_layers - 1];
    int u = g.act_mask(trace.preact[n_layers - 1], top.act, top.leak);
    (void)rows;
    for (int l = n_layers - 1; l >= 1; --l) {
        u = g.matmul_bt(u, ref.w[l]);
        const Layer& below = net.layers[l - 1];
        u = g.mul(u, g.act_mask(trace.preact[l - 1], below.act, below.leak));
    }
    return g.matmul_bt(u, ref.w[0]);
}

Tensor mlp_apply(const Mlp& net, const Tensor& input) {
    using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
    if (net.layers.empty()) throw ContractError("mlp_apply: empty network");
    Tensor h = input;
    if (h.rank() == 1) h.shape = {1, h.shape[0]};
    for (size_t i = 0; i < net.layers.size(); ++i) {
        const Layer& l = net.layers[i];
        if (h.cols() != l.w.shape[0])
            throw DimensionError("mlp_apply: layer " + std::to_string(i) + " expects width " +
                                 std::to_string(l.w.shape[0]) + ", got " + std::to_string(h.cols()));
        Tensor z = Tensor::zeros({h.rows(), l.w.shape[1]});
        Eigen::Map<RowMat>(z.data.data(), z.rows(), z.cols()).noalias() =
            Eigen::Map<const RowMat>(h.data.data(), h.rows(), h.cols()) *
            Eigen::Map<const RowMat>(l.w.data.data(), l.w.shape[0], l.w.shape[1]);
        for (int r = 0; r < z.rows(); ++r)
            for (int c = 0; c < z.cols(); ++c) z.at(r, c) += l.b.data[c];
        switch (l.act) {
            case Act::linear: break;
            case Act::relu:
                for (double& v : z.data) v = v > 0.0 ? v : 0.0;
                break;
            case Act::leaky_relu:
                for (double& v : z.data) v = v > 0.0 ? v : l.leak * v;
                break;
            case Act::tanh:
                for (double& v : z.data) v = std::tanh(v);
                break;
        }
        h = std::move(z);
        if (!h.all_finite())
            throw NumericError("mlp_apply: layer " + std::to_string(i) + " produced non-finite values");
    }
    return h;
}

MlpGrads grads_of(const Graph& g, const MlpRef& ref) {
    MlpGrads out;
    for (size_t i = 0; i < ref.w.size(); ++i) {
        out.w.push_back(g.grad(ref.w[i]));
        out.b.push_back(g.grad(ref.b[i]));
    }
    return out;
}

uint64_t param_checksum(const Mlp& net) {
    uint64_t h = 1469598103934665603ULL;
    auto feed = [&](const Tensor& t) {
        for (double v : t.data) {
            unsigned char bytes[sizeof(double)];
            std::memcpy(bytes, &v, sizeof(double));
            for (unsigned char b : bytes) {
                h ^= b;
                h *= 1099511628211ULL;
            }
        }
    };
    for (const Layer& l : net.layers) {
        feed(l.w);
        feed(l.b);
    }
    return h;
}

} // namespace gil::nn
