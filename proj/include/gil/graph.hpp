#pragma once

#include <string>
#include <vector>

#include "gil/tensor.hpp"

namespace gil::nn {

enum class Act { linear, relu, leaky_relu, tanh };

std::string act_name(Act a);

enum class Op {
    leaf,
    constant,
    matmul,      // A[m,k] * B[k,n]
    matmul_bt,   // A[m,n] * B[k,n]^T -> [m,k]
    add,         // elementwise, or row-broadcast of a bias vector
    sub,
    mul,
    scale,       // c * x
    add_scalar,  // x + c
    relu,
    leaky_relu,
    tanh_act,
    act_mask,    // derivative of an activation at x, detached from the tape
    concat_cols,
    slice_cols,
    square,
    sqrt_op,
    rowsum,      // [m,n] -> [m,1]
    mean_all,    // -> [1]
    softmax_xent, // logits [m,k] + labels -> per-row NLL [m,1]
    log_mean_exp  // -> [1], log(mean(exp(x))), computed stably
};

struct Node {
    Op op;
    int a = -1, b = -1;
    Tensor value;
    Tensor grad;
    bool track = false;    // gradient flows through this node
    bool has_grad = false; // set during backward when a gradient lands here
    double c = 0.0;        // scale factor / added constant / leaky slope
    Act act = Act::linear; // act_mask kind
    int i0 = 0, i1 = 0;    // slice_cols range
    std::vector<int> labels;
};

/// Append-only computation tape. Node ids are indices; inputs always precede
/// outputs, so one reverse sweep implements backpropagation. Every op checks
/// its output for NaN/Inf and throws NumericError instead of letting one
/// escape.
class Graph {
public:
    int leaf(Tensor v);
    int constant(Tensor v);

    int matmul(int a, int b);
    int matmul_bt(int a, int b);
    int add(int a, int b);
    int sub(int a, int b);
    int mul(int a, int b);
    int scale(int a, double c);
    int add_scalar(int a, double c);
    int relu(int a);
    int leaky_relu(int a, double slope);
    int tanh_act(int a);
    int act_mask(int a, Act kind, double slope);
    int concat_cols(int a, int b);
    int slice_cols(int a, int from, int to);
    int square(int a);
    int sqrt_op(int a);
    int rowsum(int a);
    int mean_all(int a);
    int softmax_xent(int logits, std::vector<int> labels);
    int log_mean_exp(int a);

    /// Populates grad slots for every tracked node reachable from `loss`.
    /// Untouched leaves keep an all-zero gradient.
    void backward(int loss);

    const Tensor& val(int id) const { return nodes_[check(id)].value; }
    const Tensor& grad(int id) const { return nodes_[check(id)].grad; }
    bool tracked(int id) const { return nodes_[check(id)].track; }
    size_t size() const { return nodes_.size(); }

private:
    int push(Node n);
    int check(int id) const;
    std::vector<Node> nodes_;
};

} // namespace gil::nn
