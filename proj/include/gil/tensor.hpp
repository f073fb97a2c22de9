#pragma once

#include <cmath>
#include <cstdint>
#include <numeric>
#include <string>
#include <vector>

#include "gil/errors.hpp"

namespace gil::nn {

/// Dense row-major tensor of 64-bit reals. Rank is almost always 1 or 2
/// (vectors, batch x features); nothing here assumes more.
struct Tensor {
    std::vector<int> shape;
    std::vector<double> data;

    Tensor() = default;
    Tensor(std::vector<int> s, std::vector<double> d) : shape(std::move(s)), data(std::move(d)) {
        if (numel_of(shape) != static_cast<long long>(data.size()))
            throw DimensionError("tensor: shape does not match data length");
    }

    static long long numel_of(const std::vector<int>& s) {
        long long n = 1;
        for (int v : s) {
            if (v <= 0) throw DimensionError("tensor: shape entries must be positive");
            n *= v;
        }
        return n;
    }

    static Tensor zeros(std::vector<int> s) {
        long long n = numel_of(s);
        return Tensor(std::move(s), std::vector<double>(static_cast<size_t>(n), 0.0));
    }

    static Tensor scalar(double v) { return Tensor({1}, {v}); }

    long long numel() const { return static_cast<long long>(data.size()); }
    int rank() const { return static_cast<int>(shape.size()); }

    /// Rows/cols with rank-1 treated as a single row.
    int rows() const { return rank() == 2 ? shape[0] : 1; }
    int cols() const { return rank() == 2 ? shape[1] : (rank() == 1 ? shape[0] : 1); }

    double& at(int r, int c) { return data[static_cast<size_t>(r) * cols() + c]; }
    double at(int r, int c) const { return data[static_cast<size_t>(r) * cols() + c]; }

    bool same_shape(const Tensor& o) const { return shape == o.shape; }

    bool all_finite() const {
        for (double v : data)
            if (!std::isfinite(v)) return false;
        return true;
    }
};

inline std::string shape_str(const std::vector<int>& s) {
    std::string r = "[";
    for (size_t i = 0; i < s.size(); ++i) {
        if (i) r += ",";
        r += std::to_string(s[i]);
    }
    return r + "]";
}

/// Round to nearest binary32. Data destined for f32 file formats is passed
/// through this at construction so save/load round-trips are bit-exact.
inline double quantize_f32(double v) { return static_cast<double>(static_cast<float>(v)); }

inline void quantize_f32(std::vector<double>& v) {
    for (double& x : v) x = quantize_f32(x);
}

} // namespace gil::nn
