#pragma once

#include <cstdint>
#include <vector>

#include "sdom/dataset.hpp"

namespace sdom {

// Synthetic oscillatory dataset with controlled contamination. Clean trials
// carry a class-specific sinusoid (random phase) on a random subset of
// active channels plus Gaussian noise at the configured SNR; outlier trials
// are pure noise under a class label; label-noise trials are clean signals
// of another class under this label.
struct SynthSpec {
    int num_classes = 2;
    std::size_t channels = 4;
    std::size_t time_points = 64;
    std::size_t trials_per_class = 80;
    std::vector<double> class_frequencies_hz = {5.0, 8.0};
    double snr = 32.0;                // signal power / noise power, > 0
    double outlier_fraction = 0.0;    // in [0, 1], floor(f * trials_per_class) per class
    double label_noise_fraction = 0.0;
    double sample_rate_hz = 62.5;
    double amplitude = 20.0;
    double phase_jitter_rad = 0.4;    // trial phase drawn uniform in +-jitter
    std::uint64_t seed = 42;

    void validate() const;
};

Dataset generate(const SynthSpec& spec);

// Noise levels the generator uses; exposed so tests can reason about them.
double clean_noise_sigma(const SynthSpec& spec);
double outlier_sigma(const SynthSpec& spec);

} // namespace sdom
