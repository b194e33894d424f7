#include "sdom/synth.hpp"

#include <cmath>
#include <numbers>
#include <numeric>
#include <stdexcept>
#include <string>

namespace sdom {

void SynthSpec::validate() const {
    if (num_classes < 1) throw std::invalid_argument("synth: num_classes must be >= 1");
    if (channels < 1) throw std::invalid_argument("synth: channels must be >= 1");
    if (time_points < 4) throw std::invalid_argument("synth: time_points must be >= 4");
    if (trials_per_class < 2) {
        throw std::invalid_argument("synth: trials_per_class must be >= 2");
    }
    if (class_frequencies_hz.size() != static_cast<std::size_t>(num_classes)) {
        throw std::invalid_argument("synth: class_frequencies_hz needs one entry per class");
    }
    if (!(snr > 0.0)) throw std::invalid_argument("synth: snr must be > 0");
    if (outlier_fraction < 0.0 || outlier_fraction > 1.0) {
        throw std::invalid_argument("synth: outlier_fraction must be in [0, 1]");
    }
    if (label_noise_fraction < 0.0 || label_noise_fraction > 1.0) {
        throw std::invalid_argument("synth: label_noise_fraction must be in [0, 1]");
    }
    if (outlier_fraction + label_noise_fraction > 1.0) {
        throw std::invalid_argument(
            "synth: outlier_fraction + label_noise_fraction must be <= 1");
    }
    if (!(sample_rate_hz > 0.0)) throw std::invalid_argument("synth: sample_rate_hz must be > 0");
    if (!(amplitude > 0.0)) throw std::invalid_argument("synth: amplitude must be > 0");
    if (phase_jitter_rad < 0.0) {
        throw std::invalid_argument("synth: phase_jitter_rad must be >= 0");
    }
    if (num_classes == 1 && label_noise_fraction > 0.0) {
        throw std::invalid_argument("synth: label noise needs at least 2 classes");
    }
}

double clean_noise_sigma(const SynthSpec& spec) {
    return spec.amplitude / std::sqrt(2.0 * spec.snr);
}

namespace {

std::size_t min_active(const SynthSpec& spec) { return (spec.channels + 1) / 2; }

double mean_active_fraction(const SynthSpec& spec) {
    const double lo = static_cast<double>(min_active(spec));
    const double hi = static_cast<double>(spec.channels);
    return (lo + hi) / 2.0 / static_cast<double>(spec.channels);
}

} // namespace

double outlier_sigma(const SynthSpec& spec) {
    // the drift term carries A^2/3 of the marginal power; noise makes up the
    // rest so outlier trials are not separable from clean ones by amplitude
    const double sig = clean_noise_sigma(spec);
    const double signal_power =
        mean_active_fraction(spec) * spec.amplitude * spec.amplitude / 2.0;
    const double drift_power = spec.amplitude * spec.amplitude / 3.0;
    return std::sqrt(std::max(signal_power - drift_power, 0.0) + sig * sig);
}

namespace {

Matrix clean_signal(const SynthSpec& spec, int source_class, Rng& rng) {
    const std::size_t c = spec.channels;
    const std::size_t t = spec.time_points;
    const double sigma = clean_noise_sigma(spec);
    const double freq = spec.class_frequencies_hz[static_cast<std::size_t>(source_class)];
    const double phase = spec.phase_jitter_rad > 0.0
                             ? rng.uniform(-spec.phase_jitter_rad, spec.phase_jitter_rad)
                             : 0.0;

    // random active subset of size in [ceil(C/2), C]
    const std::size_t lo = min_active(spec);
    const std::size_t k = lo + rng.uniform_index(c - lo + 1);
    std::vector<std::size_t> order(c);
    std::iota(order.begin(), order.end(), std::size_t{0});
    rng.shuffle(order);
    std::vector<bool> active(c, false);
    for (std::size_t i = 0; i < k; ++i) active[order[i]] = true;

    Matrix signal(c, t);
    const double omega = 2.0 * std::numbers::pi * freq / spec.sample_rate_hz;
    for (std::size_t ch = 0; ch < c; ++ch) {
        for (std::size_t j = 0; j < t; ++j) {
            const double base =
                active[ch] ? spec.amplitude * std::sin(omega * static_cast<double>(j) + phase)
                           : 0.0;
            signal(ch, j) = base + sigma * rng.normal();
        }
    }
    return signal;
}

Matrix outlier_signal(const SynthSpec& spec, Rng& rng) {
    // signal-free trial in the style of a recording artifact: white noise
    // around a random per-channel baseline drift
    const double sigma = outlier_sigma(spec);
    Matrix signal(spec.channels, spec.time_points);
    for (std::size_t ch = 0; ch < spec.channels; ++ch) {
        const double offset = rng.uniform(-spec.amplitude, spec.amplitude);
        for (std::size_t j = 0; j < spec.time_points; ++j) {
            signal(ch, j) = offset + sigma * rng.normal();
        }
    }
    return signal;
}

} // namespace

Dataset generate(const SynthSpec& spec) {
    spec.validate();
    Rng rng(spec.seed);

    const std::size_t n_outlier =
        static_cast<std::size_t>(spec.outlier_fraction * static_cast<double>(spec.trials_per_class));
    const std::size_t n_label_noise = static_cast<std::size_t>(
        spec.label_noise_fraction * static_cast<double>(spec.trials_per_class));
    const std::size_t n_clean = spec.trials_per_class - n_outlier - n_label_noise;

    Dataset ds;
    ds.num_classes = spec.num_classes;
    ds.sample_rate_hz = spec.sample_rate_hz;
    ds.trials.reserve(static_cast<std::size_t>(spec.num_classes) * spec.trials_per_class);
    ds.provenance.reserve(ds.trials.capacity());

    for (int label = 0; label < spec.num_classes; ++label) {
        for (std::size_t i = 0; i < n_clean; ++i) {
            ds.trials.push_back({clean_signal(spec, label, rng), label});
            ds.provenance.push_back(Provenance::clean);
        }
        for (std::size_t i = 0; i < n_label_noise; ++i) {
            // correct signal from another class, wrong label
            const int shift = 1 + static_cast<int>(rng.uniform_index(
                                      static_cast<std::size_t>(spec.num_classes - 1)));
            const int source = (label + shift) % spec.num_classes;
            ds.trials.push_back({clean_signal(spec, source, rng), label});
            ds.provenance.push_back(Provenance::label_noise);
        }
        for (std::size_t i = 0; i < n_outlier; ++i) {
            ds.trials.push_back({outlier_signal(spec, rng), label});
            ds.provenance.push_back(Provenance::outlier);
        }
    }
    ds.validate();
    return ds;
}

} // namespace sdom
