#pragma once

#include <cstddef>
#include <vector>

#include "sdom/matrix.hpp"
#include "sdom/rng.hpp"

namespace sdom {

struct AdamWConfig {
    double learning_rate = 0.001;
    double weight_decay = 0.01;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

// AdamW with decoupled weight decay: the decay term acts on the parameters
// directly and never enters the moment estimates.
class AdamW {
public:
    AdamW() = default;
    explicit AdamW(AdamWConfig config) : config_(config) {}

    // Updates params in place. Moments adopt the parameter shapes on the
    // first call; every later call must match them.
    void step(const std::vector<Matrix*>& params, const std::vector<const Matrix*>& grads);

    std::size_t step_count() const noexcept { return step_; }
    const AdamWConfig& config() const noexcept { return config_; }

private:
    AdamWConfig config_{};
    std::vector<Matrix> moment1_;
    std::vector<Matrix> moment2_;
    std::size_t step_ = 0;
};

// rows x cols matrix of i.i.d. N(0, sigma^2) draws.
Matrix gaussian_noise(Rng& rng, std::size_t rows, std::size_t cols, double sigma);

} // namespace sdom
