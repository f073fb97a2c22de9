#include "gil/graph.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>

namespace gil::nn {

namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using CMap = Eigen::Map<const RowMat>;
using MMap = Eigen::Map<RowMat>;

CMap map_of(const Tensor& t) { return CMap(t.data.data(), t.rows(), t.cols()); }
MMap map_of(Tensor& t) { return MMap(t.data.data(), t.rows(), t.cols()); }

const char* op_name(Op op) {
    switch (op) {
        case Op::leaf: return "leaf";
        case Op::constant: return "constant";
        case Op::matmul: return "matmul";
        case Op::matmul_bt: return "matmul_bt";
        case Op::add: return "add";
        case Op::sub: return "sub";
        case Op::mul: return "mul";
        case Op::scale: return "scale";
        case Op::add_scalar: return "add_scalar";
        case Op::relu: return "relu";
        case Op::leaky_relu: return "leaky_relu";
        case Op::tanh_act: return "tanh";
        case Op::act_mask: return "act_mask";
        case Op::concat_cols: return "concat_cols";
        case Op::slice_cols: return "slice_cols";
        case Op::square: return "square";
        case Op::sqrt_op: return "sqrt";
        case Op::rowsum: return "rowsum";
        case Op::mean_all: return "mean_all";
        case Op::softmax_xent: return "softmax_xent";
        case Op::log_mean_exp: return "log_mean_exp";
    }
    return "?";
}

} // namespace

std::string act_name(Act a) {
    switch (a) {
        case Act::linear: return "linear";
        case Act::relu: return "relu";
        case Act::leaky_relu: return "leaky_relu";
        case Act::tanh: return "tanh";
    }
    return "?";
}

int Graph::check(int id) const {
    if (id < 0 || id >= static_cast<int>(nodes_.size()))
        throw ContractError("graph: invalid node id " + std::to_string(id));
    return id;
}

int Graph::push(Node n) {
    if (!n.value.all_finite())
        throw NumericError(std::string("graph: op ") + op_name(n.op) + " produced non-finite values");
    nodes_.push_back(std::move(n));
    return static_cast<int>(nodes_.size()) - 1;
}

int Graph::leaf(Tensor v) {
    Node n{Op::leaf};
    n.value = std::move(v);
    n.track = true;
    return push(std::move(n));
}

int Graph::constant(Tensor v) {
    Node n{Op::constant};
    n.value = std::move(v);
    return push(std::move(n));
}

int Graph::matmul(int a, int b) {
    const Tensor& A = val(a);
    const Tensor& B = val(b);
    if (A.cols() != B.rows())
        throw DimensionError("matmul: inner dimensions disagree, " + shape_str(A.shape) + " * " +
                             shape_str(B.shape));
    Node n{Op::matmul, a, b};
    n.value = Tensor::zeros({A.rows(), B.cols()});
    map_of(n.value).noalias() = map_of(A) * map_of(B);
    n.track = tracked(a) || tracked(b);
    return push(std::move(n));
}

int Graph::matmul_bt(int a, int b) {
    const Tensor& A = val(a);
    const Tensor& B = val(b);
    if (A.cols() != B.cols())
        throw DimensionError("matmul_bt: column counts disagree, " + shape_str(A.shape) + " * " +
                             shape_str(B.shape) + "^T");
    Node n{Op::matmul_bt, a, b};
    n.value = Tensor::zeros({A.rows(), B.rows()});
    map_of(n.value).noalias() = map_of(A) * map_of(B).transpose();
    n.track = tracked(a) || tracked(b);
    return push(std::move(n));
}

int Graph::add(int a, int b) {
    const Tensor& A = val(a);
    const Tensor& B = val(b);
    Node n{Op::add, a, b};
    if (A.same_shape(B)) {
        n.value = A;
        for (long long i = 0; i < A.numel(); ++i) n.value.data[i] += B.data[i];
    } else if (B.rows() == 1 && A.cols() == B.cols()) {
        // bias row broadcast across the batch
        n.value = A;
        for (int r = 0; r < A.rows(); ++r)
            for (int c = 0; c < A.cols(); ++c) n.value.at(r, c) += B.data[c];
    } else {
        throw DimensionError("add: incompatible shapes " + shape_str(A.shape) + " + " +
                             shape_str(B.shape));
    }
    n.track = tracked(a) || tracked(b);
    return push(std::move(n));
}

int Graph::sub(int a, int b) {
    const Tensor& A = val(a);
    const Tensor& B = val(b);
    if (!A.same_shape(B))
        throw DimensionError("sub: incompatible shapes " + shape_str(A.shape) + " - " +
                             shape_str(B.shape));
    Node n{Op::sub, a, b};
    n.value = A;
    for (long long i = 0; i < A.numel(); ++i) n.value.data[i] -= B.data[i];
    n.track = tracked(a) || tracked(b);
    return push(std::move(n));
}

int Graph::mul(int a, int b) {
    const Tensor& A = val(a);
    const Tensor& B = val(b);
    if (!A.same_shape(B))
        throw DimensionError("mul: incompatible shapes " + shape_str(A.shape) + " * " +
                             shape_str(B.shape));
    Node n{Op::mul, a, b};
    n.value = A;
    for (long long i = 0; i < A.numel(); ++i) n.value.data[i] *= B.data[i];
    n.track = tracked(a) || tracked(b);
    return push(std::move(n));
}

int Graph::scale(int a, double c) {
    Node n{Op::scale, a};
    n.c = c;
    n.value = val(a);
    for (double& v : n.value.data) v *= c;
    n.track = tracked(a);
    return push(std::move(n));
}

int Graph::add_scalar(int a, double c) {
    Node n{Op::add_scalar, a};
    n.c = c;
    n.value = val(a);
    for (double& v : n.value.data) v += c;
    n.track = tracked(a);
    return push(std::move(n));
}

int Graph::relu(int a) {
    Node n{Op::relu, a};
    n.value = val(a);
    for (double& v : n.value.data) v = v > 0.0 ? v : 0.0;
    n.track = tracked(a);
    return push(std::move(n));
}

int Graph::leaky_relu(int a, double slope) {
    Node n{Op::leaky_relu, a};
    n.c = slope;
    n.value = val(a);
    for (double& v : n.value.data) v = v > 0.0 ? v : slope * v;
    n.track = tracked(a);
    return push(std::move(n));
}

int Graph::tanh_act(int a) {
    Node n{Op::tanh_act, a};
    n.value = val(a);
    for (double& v : n.value.data) v = std::tanh(v);
    n.track = tracked(a);
    return push(std::move(n));
}

int Graph::act_mask(int a, Act kind, double slope) {
    if (kind == Act::tanh)
        throw CapabilityError("act_mask: activation 'tanh' is not piecewise-linear");
    Node n{Op::act_mask, a};
    n.act = kind;
    n.c = slope;
    n.value = val(a);
    for (double& v : n.value.data) {
        switch (kind) {
            case Act::linear: v = 1.0; break;
            case Act::relu: v = v > 0.0 ? 1.0 : 0.0; break;
            case Act::leaky_relu: v = v > 0.0 ? 1.0 : slope; break;
            default: break;
        }
    }
    n.track = false; // piecewise-constant: zero derivative almost everywhere
    return push(std::move(n));
}

int Graph::concat_cols(int a, int b) {
    const Tensor& A = val(a);
    const Tensor& B = val(b);
    if (A.rows() != B.rows())
        throw DimensionError("concat_cols: row counts disagree, " + shape_str(A.shape) + " ++ " +
                             shape_str(B.shape));
    Node n{Op::concat_cols, a, b};
    n.value = Tensor::zeros({A.rows(), A.cols() + B.cols()});
    for (int r = 0; r < A.rows(); ++r) {
        for (int c = 0; c < A.cols(); ++c) n.value.at(r, c) = A.at(r, c);
        for (int c = 0; c < B.cols(); ++c) n.value.at(r, A.cols() + c) = B.at(r, c);
    }
    n.track = tracked(a) || tracked(b);
    return push(std::move(n));
}

int Graph::slice_cols(int a, int from, int to) {
    const Tensor& A = val(a);
    if (from < 0 || to > A.cols() || from >= to)
        throw DimensionError("slice_cols: range [" + std::to_string(from) + "," +
                             std::to_string(to) + ") invalid for " + shape_str(A.shape));
    Node n{Op::slice_cols, a};
    n.i0 = from;
    n.i1 = to;
    n.value = Tensor::zeros({A.rows(), to - from});
    for (int r = 0; r < A.rows(); ++r)
        for (int c = from; c < to; ++c) n.value.at(r, c - from) = A.at(r, c);
    n.track = tracked(a);
    return push(std::move(n));
}

int Graph::square(int a) {
    Node n{Op::square, a};
    n.value = val(a);
    for (double& v : n.value.data) v *= v;
    n.track = tracked(a);
    return push(std::move(n));
}

int Graph::sqrt_op(int a) {
    Node n{Op::sqrt_op, a};
    n.value = val(a);
    for (double& v : n.value.data) v = std::sqrt(v);
    n.track = tracked(a);
    return push(std::move(n));
}

int Graph::rowsum(int a) {
    const Tensor& A = val(a);
    Node n{Op::rowsum, a};
    n.value = Tensor::zeros({A.rows(), 1});
    for (int r = 0; r < A.rows(); ++r) {
        double s = 0.0;
        for (int c = 0; c < A.cols(); ++c) s += A.at(r, c);
        n.value.data[r] = s;
    }
    n.track = tracked(a);
    return push(std::move(n));
}

int Graph::mean_all(int a) {
    const Tensor& A = val(a);
    Node n{Op::mean_all, a};
    double s = 0.0;
    for (double v : A.data) s += v;
    n.value = Tensor::scalar(s / static_cast<double>(A.numel()));
    n.track = tracked(a);
    return push(std::move(n));
}

int Graph::softmax_xent(int logits, std::vector<int> labels) {
    const Tensor& L = val(logits);
    if (static_cast<int>(labels.size()) != L.rows())
        throw DimensionError("softmax_xent: " + std::to_string(labels.size()) + " labels for " +
                             std::to_string(L.rows()) + " rows");
    for (int y : labels)
        if (y < 0 || y >= L.cols())
            throw InputError("softmax_xent: label " + std::to_string(y) +
                             " outside logit range [0," + std::to_string(L.cols()) + ")");
    Node n{Op::softmax_xent, logits};
    n.labels = std::move(labels);
    n.value = Tensor::zeros({L.rows(), 1});
    for (int r = 0; r < L.rows(); ++r) {
        double m = L.at(r, 0);
        for (int c = 1; c < L.cols(); ++c) m = std::max(m, L.at(r, c));
        double lse = 0.0;
        for (int c = 0; c < L.cols(); ++c) lse += std::exp(L.at(r, c) - m);
        lse = m + std::log(lse);
        n.value.data[r] = lse - L.at(r, n.labels[r]);
    }
    n.track = tracked(logits);
    return push(std::move(n));
}

int Graph::log_mean_exp(int a) {
    const Tensor& A = val(a);
    Node n{Op::log_mean_exp, a};
    double m = A.data[0];
    for (double v : A.data) m = std::max(m, v);
    double s = 0.0;
    for (double v : A.data) s += std::exp(v - m);
    n.value = Tensor::scalar(m + std::log(s / static_cast<double>(A.numel())));
    n.track = tracked(a);
    return push(std::move(n));
}

void Graph::backward(int loss) {
    check(loss);
    if (nodes_[loss].value.numel() != 1)
        throw ContractError("backward: loss node must be scalar, got shape " +
                            shape_str(nodes_[loss].value.shape));
    for (Node& n : nodes_) {
        n.grad = Tensor::zeros(n.value.shape);
        n.has_grad = false;
    }
    nodes_[loss].grad.data[0] = 1.0;
    nodes_[loss].has_grad = true;

    auto bump = [&](int id) { nodes_[id].has_grad = true; };

    for (int id = loss; id >= 0; --id) {
        Node& n = nodes_[id];
        if (!n.has_grad || !n.track) continue;
        const Tensor& gy = n.grad;
        switch (n.op) {
            case Op::leaf:
            case Op::constant:
            case Op::act_mask:
                break;
            case Op::matmul: {
                Node& A = nodes_[n.a];
                Node& B = nodes_[n.b];
                if (A.track) {
                    map_of(A.grad).noalias() += map_of(gy) * map_of(B.value).transpose();
                    bump(n.a);
                }
                if (B.track) {
                    map_of(B.grad).noalias() += map_of(A.value).transpose() * map_of(gy);
                    bump(n.b);
                }
                break;
            }
            case Op::matmul_bt: {
                Node& A = nodes_[n.a];
                Node& B = nodes_[n.b];
                if (A.track) {
                    map_of(A.grad).noalias() += map_of(gy) * map_of(B.value);
                    bump(n.a);
                }
                if (B.track) {
                    map_of(B.grad).noalias() += map_of(gy).transpose() * map_of(A.value);
                    bump(n.b);
                }
                break;
            }
            case Op::add: {
                Node& A = nodes_[n.a];
                Node& B = nodes_[n.b];
                if (A.track) {
                    for (long long i = 0; i < gy.numel(); ++i) A.grad.data[i] += gy.data[i];
                    bump(n.a);
                }
                if (B.track) {
                    if (B.value.same_shape(n.value)) {
                        for (long long i = 0; i < gy.numel(); ++i) B.grad.data[i] += gy.data[i];
                    } else {
                        for (int r = 0; r < gy.rows(); ++r)
                            for (int c = 0; c < gy.cols(); ++c) B.grad.data[c] += gy.at(r, c);
                    }
                    bump(n.b);
                }
                break;
            }
            case Op::sub: {
                Node& A = nodes_[n.a];
                Node& B = nodes_[n.b];
                if (A.track) {
                    for (long long i = 0; i < gy.numel(); ++i) A.grad.data[i] += gy.data[i];
                    bump(n.a);
                }
                if (B.track) {
                    for (long long i = 0; i < gy.numel(); ++i) B.grad.data[i] -= gy.data[i];
                    bump(n.b);
                }
                break;
            }
            case Op::mul: {
                Node& A = nodes_[n.a];
                Node& B = nodes_[n.b];
                if (A.track) {
                    for (long long i = 0; i < gy.numel(); ++i)
                        A.grad.data[i] += gy.data[i] * B.value.data[i];
                    bump(n.a);
                }
                if (B.track) {
                    for (long long i = 0; i < gy.numel(); ++i)
                        B.grad.data[i] += gy.data[i] * A.value.data[i];
                    bump(n.b);
                }
                break;
            }
            case Op::scale: {
                Node& A = nodes_[n.a];
                if (A.track) {
                    for (long long i = 0; i < gy.numel(); ++i) A.grad.data[i] += n.c * gy.data[i];
                    bump(n.a);
                }
                break;
            }
            case Op::add_scalar: {
                Node& A = nodes_[n.a];
                if (A.track) {
                    for (long long i = 0; i < gy.numel(); ++i) A.grad.data[i] += gy.data[i];
                    bump(n.a);
                }
                break;
            }
            case Op::relu: {
                Node& A = nodes_[n.a];
                if (A.track) {
                    for (long long i = 0; i < gy.numel(); ++i)
                        if (A.value.data[i] > 0.0) A.grad.data[i] += gy.data[i];
                    bump(n.a);
                }
                break;
            }
            case Op::leaky_relu: {
                Node& A = nodes_[n.a];
                if (A.track) {
                    for (long long i = 0; i < gy.numel(); ++i)
                        A.grad.data[i] += gy.data[i] * (A.value.data[i] > 0.0 ? 1.0 : n.c);
                    bump(n.a);
                }
                break;
            }
            case Op::tanh_act: {
                Node& A = nodes_[n.a];
                if (A.track) {
                    for (long long i = 0; i < gy.numel(); ++i)
                        A.grad.data[i] += gy.data[i] * (1.0 - n.value.data[i] * n.value.data[i]);
                    bump(n.a);
                }
                break;
            }
            case Op::concat_cols: {
                Node& A = nodes_[n.a];
                Node& B = nodes_[n.b];
                int ca = A.value.cols();
                if (A.track) {
                    for (int r = 0; r < gy.rows(); ++r)
                        for (int c = 0; c < ca; ++c) A.grad.at(r, c) += gy.at(r, c);
                    bump(n.a);
                }
                if (B.track) {
                    for (int r = 0; r < gy.rows(); ++r)
                        for (int c = 0; c < B.value.cols(); ++c) B.grad.at(r, c) += gy.at(r, ca + c);
                    bump(n.b);
                }
                break;
            }
            case Op::slice_cols: {
                Node& A = nodes_[n.a];
                if (A.track) {
                    for (int r = 0; r < gy.rows(); ++r)
                        for (int c = 0; c < gy.cols(); ++c) A.grad.at(r, n.i0 + c) += gy.at(r, c);
                    bump(n.a);
                }
                break;
            }
            case Op::square: {
                Node& A = nodes_[n.a];
                if (A.track) {
                    for (long long i = 0; i < gy.numel(); ++i)
                        A.grad.data[i] += 2.0 * A.value.data[i] * gy.data[i];
                    bump(n.a);
                }
                break;
            }
            case Op::sqrt_op: {
                Node& A = nodes_[n.a];
                if (A.track) {
                    for (long long i = 0; i < gy.numel(); ++i)
                        A.grad.data[i] += gy.data[i] * 0.5 / n.value.data[i];
                    bump(n.a);
                }
                break;
            }
            case Op::rowsum: {
                Node& A = nodes_[n.a];
                if (A.track) {
                    for (int r = 0; r < A.value.rows(); ++r)
                        for (int c = 0; c < A.value.cols(); ++c) A.grad.at(r, c) += gy.data[r];
                    bump(n.a);
                }
                break;
            }
            case Op::mean_all: {
                Node& A = nodes_[n.a];
                if (A.track) {
                    double g = gy.data[0] / static_cast<double>(A.value.numel());
                    for (long long i = 0; i < A.value.numel(); ++i) A.grad.data[i] += g;
                    bump(n.a);
                }
                break;
            }
            case Op::softmax_xent: {
                Node& A = nodes_[n.a];
                if (A.track) {
                    const Tensor& L = A.value;
                    for (int r = 0; r < L.rows(); ++r) {
                        double m = L.at(r, 0);
                        for (int c = 1; c < L.cols(); ++c) m = std::max(m, L.at(r, c));
                        double z = 0.0;
                        for (int c = 0; c < L.cols(); ++c) z += std::exp(L.at(r, c) - m);
                        for (int c = 0; c < L.cols(); ++c) {
                            double p = std::exp(L.at(r, c) - m) / z;
                            double ind = (c == n.labels[r]) ? 1.0 : 0.0;
                            A.grad.at(r, c) += (p - ind) * gy.data[r];
                        }
                    }
                    bump(n.a);
                }
                break;
            }
            case Op::log_mean_exp: {
                Node& A = nodes_[n.a];
                if (A.track) {
                    const Tensor& X = A.value;
                    double m = X.data[0];
                    for (double v : X.data) m = std::max(m, v);
                    double z = 0.0;
                    for (double v : X.data) z += std::exp(v - m);
                    for (long long i = 0; i < X.numel(); ++i)
                        A.grad.data[i] += gy.data[0] * std::exp(X.data[i] - m) / z;
                    bump(n.a);
                }
                break;
            }
        }
    }
}

} // namespace gil::nn
