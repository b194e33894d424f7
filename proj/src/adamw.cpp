#include "sdom/adamw.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace sdom {

void AdamW::step(const std::vector<Matrix*>& params, const std::vector<const Matrix*>& grads) {
    if (params.size() != grads.size()) {
        throw std::invalid_argument("adamw: " + std::to_string(params.size()) +
                                    " params vs " + std::to_string(grads.size()) + " grads");
    }
    if (moment1_.empty()) {
        moment1_.reserve(params.size());
        moment2_.reserve(params.size());
        for (const Matrix* p : params) {
            moment1_.emplace_back(p->rows(), p->cols());
            moment2_.emplace_back(p->rows(), p->cols());
        }
    }
    if (moment1_.size() != params.size()) {
        throw std::invalid_argument("adamw: parameter count changed between steps");
    }
    for (std::size_t i = 0; i < params.size(); ++i) {
        if (!params[i]->same_shape(*grads[i]) || !params[i]->same_shape(moment1_[i])) {
            throw std::invalid_argument("adamw shape mismatch at parameter " +
                                        std::to_string(i) + ": param " +
                                        params[i]->shape_str() + ", grad " +
                                        grads[i]->shape_str());
        }
    }

    ++step_;
    const double bc1 = 1.0 - std::pow(config_.beta1, static_cast<double>(step_));
    const double bc2 = 1.0 - std::pow(config_.beta2, static_cast<double>(step_));

    for (std::size_t i = 0; i < params.size(); ++i) {
        double* p = params[i]->data();
        const double* g = grads[i]->data();
        double* m = moment1_[i].data();
        double* v = moment2_[i].data();
        const std::size_t n = params[i]->size();
        for (std::size_t k = 0; k < n; ++k) {
            m[k] = config_.beta1 * m[k] + (1.0 - config_.beta1) * g[k];
            v[k] = config_.beta2 * v[k] + (1.0 - config_.beta2) * g[k] * g[k];
            const double m_hat = m[k] / bc1;
            const double v_hat = v[k] / bc2;
            p[k] -= config_.learning_rate *
                    (m_hat / (std::sqrt(v_hat) + config_.epsilon) +
                     config_.weight_decay * p[k]);
        }
    }
}

Matrix gaussian_noise(Rng& rng, std::size_t rows, std::size_t cols, double sigma) {
    if (sigma < 0.0) {
        throw std::invalid_argument("gaussian_noise: sigma must be >= 0, got " +
                                    std::to_string(sigma));
    }
    Matrix out(rows, cols);
    double* d = out.data();
    for (std::size_t i = 0; i < out.size(); ++i) d[i] = sigma * rng.normal();
    return out;
}

} // namespace sdom
