#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "sdom/adamw.hpp"
#include "sdom/classifier.hpp"
#include "sdom/dataset.hpp"
#include "sdom/dominance.hpp"
#include "sdom/kde.hpp"
#include "sdom/sae.hpp"

namespace sdom {

struct TrainConfig {
    int epochs = 200;
    AdamWConfig optimizer{};
    std::size_t batch_size = 16;
    std::size_t hidden_width = 64;
    CurriculumSchedule schedule{};
    bool use_crops = false;
    std::size_t crop_window_points = 32; // 0 = whole trial
    std::size_t crop_stride_points = 0;  // 0 = 100 ms at the dataset rate
    bool early_stopping = true;
    int early_stop_after = 180; // candidate epochs are strictly later
    std::uint64_t seed = 1;

    void validate() const;
    std::size_t effective_window(std::size_t time_points) const;
    std::size_t effective_stride(double sample_rate_hz) const;
};

struct TrainLog {
    std::vector<double> train_loss;
    std::vector<double> val_loss;
    int selected_epoch = 0;
    std::size_t log_clamp_events = 0;
};

// Curriculum-weighted training. records == nullptr trains the unweighted
// baseline; otherwise records must align one-to-one with train trials. Each
// crop inherits its parent trial's weight. With early stopping enabled the
// weights with the lowest validation loss after early_stop_after epochs are
// returned.
ClassifierModel train_classifier(const Dataset& train, const Dataset& val,
                                 const std::vector<DominanceRecord>* records,
                                 const TrainConfig& cfg, TrainLog* log = nullptr);

// Crop-averaged prediction; ties resolve to the lowest class index.
std::pair<int, std::vector<double>> predict(const ClassifierModel& model, const Trial& trial,
                                            const TrainConfig& cfg);

double accuracy_percent(const ClassifierModel& model, const Dataset& ds,
                        const TrainConfig& cfg);

struct ConditionResult {
    std::string name;                              // e.g. "baseline_no_crop"
    std::vector<double> per_fold;                  // accuracy per (seed, fold), seed-major
    double mean = 0.0;
    double stddev = 0.0;                           // sample std over per_fold
    std::vector<std::vector<std::size_t>> confusion; // true x predicted, summed
};

struct EvalOptions {
    int num_folds = 2;
    std::vector<std::uint64_t> seeds = {1, 2, 3, 4, 5};
    bool no_crop_condition = true;
    bool crop_condition = true;
    double val_fraction = 0.2;
    SaeTrainConfig sae{};
    KdeConfig kde{};
    ClampConfig clamp{};
    TrainConfig train{};
};

struct EvalReport {
    int num_folds = 0;
    std::vector<std::uint64_t> seeds;
    std::vector<ConditionResult> conditions;
    std::vector<std::pair<std::string, double>> deltas; // weighted - baseline mean

    std::string to_json() const; // deterministic byte-for-byte given equal contents
    std::string to_table() const;
};

// Four-condition grid (baseline/weighted x no-crop/crop) over stratified
// folds and seeds. Baseline and weighted runs share initialization and data
// order per seed so the delta isolates the weighting.
EvalReport evaluate_conditions(const Dataset& ds, const EvalOptions& opts);

} // namespace sdom
