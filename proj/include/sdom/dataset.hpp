#pragma once

#include <cstdint>
#include <vector>

#include "sdom/matrix.hpp"
#include "sdom/rng.hpp"

namespace sdom {

enum class Provenance : std::uint8_t { clean = 0, outlier = 1, label_noise = 2 };

// One labeled multichannel time-series sample, channels x time points.
struct Trial {
    Matrix signal;
    int label = 0;

    std::size_t channels() const { return signal.rows(); }
    std::size_t time_points() const { return signal.cols(); }
};

struct Dataset {
    std::vector<Trial> trials;
    int num_classes = 0;
    double sample_rate_hz = 250.0;
    // Per-trial tags for synthetic data; empty when unknown (ingested data).
    std::vector<Provenance> provenance;

    std::size_t size() const { return trials.size(); }
    bool has_provenance() const { return !provenance.empty(); }
    std::size_t channels() const { return trials.empty() ? 0 : trials.front().channels(); }
    std::size_t time_points() const {
        return trials.empty() ? 0 : trials.front().time_points();
    }
    std::vector<std::size_t> class_counts() const;

    // Throws std::invalid_argument when a structural invariant is broken.
    void validate() const;
};

struct SplitResult {
    Dataset train;
    Dataset test;
};

// Stratified k-fold split; fold_index selects the test fold. Deterministic
// for a given rng seed, and the k folds of one seed partition the dataset.
SplitResult kfold_split(const Dataset& ds, int fold_index, int num_folds, Rng rng);

// Stratified holdout split keeping roughly train_fraction of each class on
// the train side (at least one trial on each side per class).
SplitResult fraction_split(const Dataset& ds, double train_fraction, Rng rng);

std::size_t crop_count(std::size_t time_points, std::size_t window_points,
                       std::size_t stride_points);

// All maximal windows [k*stride, k*stride + window) within the trial.
std::vector<Trial> crop(const Trial& trial, std::size_t window_points,
                        std::size_t stride_points);

} // namespace sdom
