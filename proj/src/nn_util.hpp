#pragma once

// Internal batched-layer helpers shared by the autoencoder and classifier.
// Weights are stored input x output so forward passes avoid transposes.

#include <cmath>
#include <cstddef>

#include "sdom/matrix.hpp"
#include "sdom/rng.hpp"

namespace sdom::nn {

// X (B x in) * W (in x out) + bias (1 x out) broadcast over rows.
inline Matrix linear(const Matrix& x, const Matrix& w, const Matrix& b) {
    Matrix out = matmul(x, w);
    for (std::size_t r = 0; r < out.rows(); ++r) {
        double* row = out.data() + r * out.cols();
        const double* bias = b.data();
        for (std::size_t c = 0; c < out.cols(); ++c) row[c] += bias[c];
    }
    return out;
}

inline void relu_inplace(Matrix& m) {
    double* d = m.data();
    for (std::size_t i = 0; i < m.size(); ++i) {
        if (d[i] < 0.0) d[i] = 0.0;
    }
}

// Zeroes entries of grad where the forward activation was clipped.
inline void relu_backward_inplace(Matrix& grad, const Matrix& activation) {
    double* g = grad.data();
    const double* a = activation.data();
    for (std::size_t i = 0; i < grad.size(); ++i) {
        if (a[i] <= 0.0) g[i] = 0.0;
    }
}

inline Matrix column_sums(const Matrix& m) {
    Matrix out(1, m.cols());
    for (std::size_t r = 0; r < m.rows(); ++r) {
        const double* row = m.data() + r * m.cols();
        for (std::size_t c = 0; c < m.cols(); ++c) out.data()[c] += row[c];
    }
    return out;
}

// Glorot-uniform init in +-sqrt(6 / (fan_in + fan_out)), shaped in x out.
inline Matrix glorot_uniform(std::size_t fan_in, std::size_t fan_out, Rng& rng) {
    const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    Matrix w(fan_in, fan_out);
    double* d = w.data();
    for (std::size_t i = 0; i < w.size(); ++i) d[i] = rng.uniform(-limit, limit);
    return w;
}

} // namespace sdom::nn
