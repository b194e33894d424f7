#include "sdom/dataset.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>
#include <string>

namespace sdom {

std::vector<std::size_t> Dataset::class_counts() const {
    std::vector<std::size_t> counts(num_classes > 0 ? static_cast<std::size_t>(num_classes) : 0, 0);
    for (const Trial& t : trials) {
        if (t.label >= 0 && t.label < num_classes) ++counts[static_cast<std::size_t>(t.label)];
    }
    return counts;
}

void Dataset::validate() const {
    if (trials.empty()) throw std::invalid_argument("dataset: must contain at least one trial");
    if (num_classes < 1) throw std::invalid_argument("dataset: num_classes must be >= 1");
    const std::size_t c = trials.front().channels();
    const std::size_t t = trials.front().time_points();
    if (c < 1) throw std::invalid_argument("dataset: trials need at least one channel");
    if (t < 4) throw std::invalid_argument("dataset: trials need at least 4 time points");
    for (std::size_t i = 0; i < trials.size(); ++i) {
        const Trial& trial = trials[i];
        if (trial.label < 0 || trial.label >= num_classes) {
            throw std::invalid_argument("dataset: trial " + std::to_string(i) + " label " +
                                        std::to_string(trial.label) + " outside [0, " +
                                        std::to_string(num_classes) + ")");
        }
        if (trial.channels() != c || trial.time_points() != t) {
            throw std::invalid_argument("dataset: trial " + std::to_string(i) + " shape " +
                                        trial.signal.shape_str() + " differs from " +
                                        std::to_string(c) + "x" + std::to_string(t));
        }
        if (!trial.signal.all_finite()) {
            throw std::invalid_argument("dataset: trial " + std::to_string(i) +
                                        " contains non-finite values");
        }
    }
    if (!provenance.empty() && provenance.size() != trials.size()) {
        throw std::invalid_argument("dataset: provenance length " +
                                    std::to_string(provenance.size()) + " != trial count " +
                                    std::to_string(trials.size()));
    }
}

namespace {

// Per-class trial indices shuffled by rng; selection results are re-sorted
// so subsets keep the original dataset order.
std::vector<std::vector<std::size_t>> shuffled_class_indices(const Dataset& ds, Rng& rng) {
    std::vector<std::vector<std::size_t>> by_class(static_cast<std::size_t>(ds.num_classes));
    for (std::size_t i = 0; i < ds.trials.size(); ++i) {
        by_class[static_cast<std::size_t>(ds.trials[i].label)].push_back(i);
    }
    for (auto& idx : by_class) rng.shuffle(idx);
    return by_class;
}

Dataset subset(const Dataset& ds, std::vector<std::size_t> indices) {
    std::sort(indices.begin(), indices.end());
    Dataset out;
    out.num_classes = ds.num_classes;
    out.sample_rate_hz = ds.sample_rate_hz;
    out.trials.reserve(indices.size());
    if (ds.has_provenance()) out.provenance.reserve(indices.size());
    for (std::size_t i : indices) {
        out.trials.push_back(ds.trials[i]);
        if (ds.has_provenance()) out.provenance.push_back(ds.provenance[i]);
    }
    return out;
}

} // namespace

SplitResult kfold_split(const Dataset& ds, int fold_index, int num_folds, Rng rng) {
    ds.validate();
    if (num_folds < 2) throw std::invalid_argument("kfold_split: num_folds must be >= 2");
    if (fold_index < 0 || fold_index >= num_folds) {
        throw std::invalid_argument("kfold_split: fold_index " + std::to_string(fold_index) +
                                    " outside [0, " + std::to_string(num_folds) + ")");
    }
    const auto counts = ds.class_counts();
    for (std::size_t c = 0; c < counts.size(); ++c) {
        if (counts[c] < static_cast<std::size_t>(num_folds)) {
            throw std::invalid_argument("kfold_split: class " + std::to_string(c) + " has " +
                                        std::to_string(counts[c]) + " trials, fewer than " +
                                        std::to_string(num_folds) + " folds");
        }
    }

    const auto by_class = shuffled_class_indices(ds, rng);
    std::vector<std::size_t> train_idx, test_idx;
    for (const auto& idx : by_class) {
        const std::size_t m = idx.size();
        const std::size_t k = static_cast<std::size_t>(num_folds);
        const std::size_t f = static_cast<std::size_t>(fold_index);
        const std::size_t begin = f * m / k;
        const std::size_t end = (f + 1) * m / k;
        for (std::size_t j = 0; j < m; ++j) {
            (j >= begin && j < end ? test_idx : train_idx).push_back(idx[j]);
        }
    }
    return {subset(ds, std::move(train_idx)), subset(ds, std::move(test_idx))};
}

SplitResult fraction_split(const Dataset& ds, double train_fraction, Rng rng) {
    ds.validate();
    if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
        throw std::invalid_argument("fraction_split: train_fraction must be in (0, 1)");
    }
    const auto counts = ds.class_counts();
    for (std::size_t c = 0; c < counts.size(); ++c) {
        if (counts[c] < 2) {
            throw std::invalid_argument("fraction_split: class " + std::to_string(c) +
                                        " needs at least 2 trials to split");
        }
    }

    const auto by_class = shuffled_class_indices(ds, rng);
    std::vector<std::size_t> train_idx, test_idx;
    for (const auto& idx : by_class) {
        const std::size_t m = idx.size();
        std::size_t n_train = static_cast<std::size_t>(train_fraction * static_cast<double>(m));
        n_train = std::clamp<std::size_t>(n_train, 1, m - 1);
        for (std::size_t j = 0; j < m; ++j) {
            (j < n_train ? train_idx : test_idx).push_back(idx[j]);
        }
    }
    return {subset(ds, std::move(train_idx)), subset(ds, std::move(test_idx))};
}

std::size_t crop_count(std::size_t time_points, std::size_t window_points,
                       std::size_t stride_points) {
    if (window_points == 0 || window_points > time_points) {
        throw std::invalid_argument("crop: window " + std::to_string(window_points) +
                                    " outside [1, " + std::to_string(time_points) + "]");
    }
    if (stride_points < 1) throw std::invalid_argument("crop: stride must be >= 1");
    return (time_points - window_points) / stride_points + 1;
}

std::vector<Trial> crop(const Trial& trial, std::size_t window_points,
                        std::size_t stride_points) {
    const std::size_t n = crop_count(trial.time_points(), window_points, stride_points);
    std::vector<Trial> out;
    out.reserve(n);
    for (std::size_t k = 0; k < n; ++k) {
        const std::size_t offset = k * stride_points;
        Matrix window(trial.channels(), window_points);
        for (std::size_t c = 0; c < trial.channels(); ++c) {
            for (std::size_t j = 0; j < window_points; ++j) {
                window(c, j) = trial.signal(c, offset + j);
            }
        }
        out.push_back({std::move(window), trial.label});
    }
    return out;
}

} // namespace sdom
