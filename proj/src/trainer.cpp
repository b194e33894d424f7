#include "sdom/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace sdom {

void TrainConfig::validate() const {
    if (epochs < 1) throw std::invalid_argument("train: epochs must be >= 1");
    if (batch_size < 1) throw std::invalid_argument("train: batch_size must be >= 1");
    if (hidden_width < 1) throw std::invalid_argument("train: hidden_width must be >= 1");
    schedule.validate();
    if (early_stopping && early_stop_after >= epochs) {
        throw std::invalid_argument("train: early stopping needs early_stop_after (" +
                                    std::to_string(early_stop_after) + ") < epochs (" +
                                    std::to_string(epochs) + ")");
    }
}

std::size_t TrainConfig::effective_window(std::size_t time_points) const {
    if (!use_crops || crop_window_points == 0) return time_points;
    return std::min(crop_window_points, time_points);
}

std::size_t TrainConfig::effective_stride(double sample_rate_hz) const {
    if (crop_stride_points > 0) return crop_stride_points;
    // the protocol's 100 ms sliding stride, in points
    const long points = std::lround(0.100 * sample_rate_hz);
    return points < 1 ? 1 : static_cast<std::size_t>(points);
}

namespace {

void flatten_into(const Matrix& signal, double* dst) {
    const double* src = signal.data();
    for (std::size_t i = 0; i < signal.size(); ++i) dst[i] = src[i];
}

struct TrainingSet {
    Matrix inputs;               // samples x (C * window)
    std::vector<int> labels;
    std::vector<double> clamped; // per sample, inherited from the parent trial
};

TrainingSet build_training_set(const Dataset& train,
                               const std::vector<DominanceRecord>* records,
                               const TrainConfig& cfg) {
    const std::size_t window = cfg.effective_window(train.time_points());
    const std::size_t input_width = train.channels() * window;

    std::vector<const Trial*> sources;
    std::vector<Trial> crop_storage;
    std::vector<double> clamped;

    const bool cropping = cfg.use_crops && window < train.time_points();
    for (std::size_t i = 0; i < train.size(); ++i) {
        const double score = records != nullptr ? (*records)[i].clamped_score : 1.0;
        if (cropping) {
            for (Trial& c : crop(train.trials[i], window, cfg.crop_stride_points)) {
                crop_storage.push_back(std::move(c));
                clamped.push_back(score);
            }
        } else {
            sources.push_back(&train.trials[i]);
            clamped.push_back(score);
        }
    }

    TrainingSet set;
    const std::size_t n = cropping ? crop_storage.size() : sources.size();
    set.inputs = Matrix(n, input_width);
    set.labels.reserve(n);
    set.clamped = std::move(clamped);
    for (std::size_t i = 0; i < n; ++i) {
        const Trial& t = cropping ? crop_storage[i] : *sources[i];
        flatten_into(t.signal, set.inputs.data() + i * input_width);
        set.labels.push_back(t.label);
    }
    return set;
}

Matrix gather(const Matrix& inputs, const std::vector<std::size_t>& order, std::size_t begin,
              std::size_t end) {
    Matrix out(end - begin, inputs.cols());
    for (std::size_t i = begin; i < end; ++i) {
        const double* src = inputs.data() + order[i] * inputs.cols();
        double* dst = out.data() + (i - begin) * inputs.cols();
        for (std::size_t j = 0; j < inputs.cols(); ++j) dst[j] = src[j];
    }
    return out;
}

double validation_loss(const ClassifierModel& model, const Dataset& val,
                       const TrainConfig& cfg, std::size_t* clamp_events) {
    double total = 0.0;
    for (const Trial& trial : val.trials) {
        const auto [cls, probs] = predict(model, trial, cfg);
        (void)cls;
        total += weighted_ce_loss(probs, trial.label, 1.0, clamp_events);
    }
    return total / static_cast<double>(val.size());
}

} // namespace

ClassifierModel train_classifier(const Dataset& train, const Dataset& val,
                                 const std::vector<DominanceRecord>* records,
                                 const TrainConfig& raw_cfg, TrainLog* log) {
    raw_cfg.validate();
    train.validate();
    val.validate();
    TrainConfig cfg = raw_cfg;
    cfg.crop_stride_points = cfg.effective_stride(train.sample_rate_hz);
    if (records != nullptr) {
        if (records->size() != train.size()) {
            throw std::invalid_argument("train_classifier: " + std::to_string(records->size()) +
                                        " records for " + std::to_string(train.size()) +
                                        " train trials");
        }
        for (std::size_t i = 0; i < records->size(); ++i) {
            if ((*records)[i].trial_index != i) {
                throw std::invalid_argument(
                    "train_classifier: record " + std::to_string(i) +
                    " indexes trial " + std::to_string((*records)[i].trial_index) +
                    "; records must follow train order");
            }
        }
    }

    const TrainingSet set = build_training_set(train, records, cfg);

    Rng rng(cfg.seed);
    Rng init_rng = rng.child(1);
    Rng shuffle_rng = rng.child(2);
    ClassifierModel model = init_classifier(set.inputs.cols(), cfg.hidden_width,
                                            train.num_classes, init_rng);
    AdamW optimizer(cfg.optimizer);
    auto params = model.parameters();

    std::vector<std::size_t> order(set.labels.size());
    std::iota(order.begin(), order.end(), std::size_t{0});

    ClassifierModel best = model;
    double best_val = std::numeric_limits<double>::infinity();
    int best_epoch = cfg.epochs;
    bool have_best = false;

    std::vector<int> batch_labels;
    std::vector<double> batch_gammas;
    std::size_t clamp_events = 0;

    for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
        shuffle_rng.shuffle(order);
        double epoch_loss = 0.0;
        for (std::size_t begin = 0; begin < order.size(); begin += cfg.batch_size) {
            const std::size_t end = std::min(begin + cfg.batch_size, order.size());
            const Matrix batch = gather(set.inputs, order, begin, end);
            batch_labels.clear();
            batch_gammas.clear();
            for (std::size_t i = begin; i < end; ++i) {
                batch_labels.push_back(set.labels[order[i]]);
                batch_gammas.push_back(
                    curriculum_weight(set.clamped[order[i]], epoch, cfg.schedule));
            }
            const ClassifierBackprop bp =
                classifier_loss_and_gradients(model, batch, batch_labels, batch_gammas);
            optimizer.step(params, bp.grads.parameters());
            epoch_loss += bp.loss * static_cast<double>(end - begin);
            clamp_events += bp.clamp_events;
        }
        epoch_loss /= static_cast<double>(order.size());
        if (!std::isfinite(epoch_loss)) {
            throw std::runtime_error("train_classifier: training diverged at epoch " +
                                     std::to_string(epoch));
        }

        const double val_loss = validation_loss(model, val, cfg, &clamp_events);
        if (log != nullptr) {
            log->train_loss.push_back(epoch_loss);
            log->val_loss.push_back(val_loss);
        }
        if (cfg.early_stopping && epoch > cfg.early_stop_after && val_loss < best_val) {
            best_val = val_loss;
            best = model;
            best_epoch = epoch;
            have_best = true;
        }
    }

    if (log != nullptr) {
        log->selected_epoch = have_best ? best_epoch : cfg.epochs;
        log->log_clamp_events = clamp_events;
    }
    return have_best ? best : model;
}

std::pair<int, std::vector<double>> predict(const ClassifierModel& model, const Trial& trial,
                                            const TrainConfig& cfg) {
    const std::size_t window = cfg.effective_window(trial.time_points());
    std::vector<double> mean_probs;
    if (cfg.use_crops && window < trial.time_points()) {
        const std::vector<Trial> crops = crop(trial, window, cfg.crop_stride_points);
        Matrix inputs(crops.size(), trial.channels() * window);
        for (std::size_t i = 0; i < crops.size(); ++i) {
            flatten_into(crops[i].signal, inputs.data() + i * inputs.cols());
        }
        const Matrix probs = classifier_probs_rows(model, inputs);
        mean_probs.assign(probs.cols(), 0.0);
        for (std::size_t r = 0; r < probs.rows(); ++r) {
            for (std::size_t c = 0; c < probs.cols(); ++c) mean_probs[c] += probs(r, c);
        }
        for (double& p : mean_probs) p /= static_cast<double>(probs.rows());
    } else {
        std::vector<double> flat(trial.signal.size());
        flatten_into(trial.signal, flat.data());
        mean_probs = classifier_probs(model, flat);
    }
    const auto arg_max = std::max_element(mean_probs.begin(), mean_probs.end());
    return {static_cast<int>(arg_max - mean_probs.begin()), std::move(mean_probs)};
}

double accuracy_percent(const ClassifierModel& model, const Dataset& ds,
                        const TrainConfig& raw_cfg) {
    TrainConfig cfg = raw_cfg;
    cfg.crop_stride_points = cfg.effective_stride(ds.sample_rate_hz);
    std::size_t correct = 0;
    for (const Trial& trial : ds.trials) {
        if (predict(model, trial, cfg).first == trial.label) ++correct;
    }
    return 100.0 * static_cast<double>(correct) / static_cast<double>(ds.size());
}

namespace {

double sample_std(const std::vector<double>& values, double mean) {
    if (values.size() < 2) return 0.0;
    double ss = 0.0;
    for (double v : values) ss += (v - mean) * (v - mean);
    return std::sqrt(ss / (static_cast<double>(values.size()) - 1.0));
}

void finalize(ConditionResult& cond) {
    double sum = 0.0;
    for (double a : cond.per_fold) sum += a;
    cond.mean = cond.per_fold.empty() ? 0.0 : sum / static_cast<double>(cond.per_fold.size());
    cond.stddev = sample_std(cond.per_fold, cond.mean);
}

} // namespace

EvalReport evaluate_conditions(const Dataset& ds, const EvalOptions& opts) {
    ds.validate();
    if (opts.num_folds < 2) throw std::invalid_argument("evaluate: num_folds must be >= 2");
    if (opts.seeds.empty()) throw std::invalid_argument("evaluate: need at least one seed");
    if (!opts.no_crop_condition && !opts.crop_condition) {
        throw std::invalid_argument("evaluate: no conditions selected");
    }
    if (!(opts.val_fraction > 0.0 && opts.val_fraction < 1.0)) {
        throw std::invalid_argument("evaluate: val_fraction must be in (0, 1)");
    }

    struct Mode {
        bool crops;
        const char* suffix;
    };
    std::vector<Mode> modes;
    if (opts.no_crop_condition) modes.push_back({false, "no_crop"});
    if (opts.crop_condition) modes.push_back({true, "crop"});

    const std::size_t o = static_cast<std::size_t>(ds.num_classes);
    EvalReport report;
    report.num_folds = opts.num_folds;
    report.seeds = opts.seeds;
    for (const Mode& mode : modes) {
        for (const char* method : {"baseline", "weighted"}) {
            ConditionResult cond;
            cond.name = std::string(method) + "_" + mode.suffix;
            cond.confusion.assign(o, std::vector<std::size_t>(o, 0));
            report.conditions.push_back(std::move(cond));
        }
    }
    auto condition = [&](const Mode& mode, bool weighted) -> ConditionResult& {
        for (ConditionResult& c : report.conditions) {
            if (c.name == std::string(weighted ? "weighted" : "baseline") + "_" + mode.suffix) {
                return c;
            }
        }
        throw std::logic_error("evaluate: condition lookup failed");
    };

    for (const std::uint64_t seed : opts.seeds) {
        const Rng root(seed);
        for (int fold = 0; fold < opts.num_folds; ++fold) {
            // the same child stream per fold index keeps the k folds of one
            // seed a consistent partition of the dataset
            SplitResult split = kfold_split(ds, fold, opts.num_folds, root.child(1));
            SplitResult inner = fraction_split(split.train, 1.0 - opts.val_fraction,
                                               root.child(1000 + static_cast<std::uint64_t>(fold)));

            Rng sae_rng = root.child(2000 + static_cast<std::uint64_t>(fold));
            const SaeTrainResult sae = train_sae(inner.train, opts.sae, sae_rng);
            const std::vector<DominanceRecord> records =
                estimate_all(inner.train, sae.model, opts.kde, opts.clamp);

            Rng seed_rng = root.child(3000 + static_cast<std::uint64_t>(fold));
            const std::uint64_t train_seed = seed_rng.next_u64();

            for (const Mode& mode : modes) {
                TrainConfig tc = opts.train;
                tc.use_crops = mode.crops;
                tc.crop_stride_points = tc.effective_stride(ds.sample_rate_hz);
                tc.seed = train_seed; // shared init and data order isolate the weighting
                for (const bool weighted : {false, true}) {
                    const ClassifierModel model = train_classifier(
                        inner.train, inner.test, weighted ? &records : nullptr, tc);
                    ConditionResult& cond = condition(mode, weighted);
                    cond.per_fold.push_back(accuracy_percent(model, split.test, tc));
                    for (const Trial& trial : split.test.trials) {
                        const int pred = predict(model, trial, tc).first;
                        ++cond.confusion[static_cast<std::size_t>(trial.label)]
                                        [static_cast<std::size_t>(pred)];
                    }
                }
            }
        }
    }

    for (ConditionResult& cond : report.conditions) finalize(cond);
    for (const Mode& mode : modes) {
        report.deltas.emplace_back(mode.suffix, condition(mode, true).mean -
                                                    condition(mode, false).mean);
    }
    return report;
}

std::string EvalReport::to_json() const {
    nlohmann::ordered_json j;
    j["num_folds"] = num_folds;
    j["seeds"] = seeds;
    nlohmann::ordered_json conds = nlohmann::ordered_json::object();
    for (const ConditionResult& cond : conditions) {
        nlohmann::ordered_json c;
        c["per_fold"] = cond.per_fold;
        c["mean"] = cond.mean;
        c["std"] = cond.stddev;
        c["confusion"] = cond.confusion;
        conds[cond.name] = std::move(c);
    }
    j["conditions"] = std::move(conds);
    nlohmann::ordered_json deltas = nlohmann::ordered_json::object();
    for (const auto& [name, delta] : this->deltas) deltas[name] = delta;
    j["deltas"] = std::move(deltas);
    return j.dump(2) + "\n";
}

std::string EvalReport::to_table() const {
    std::ostringstream out;
    char buf[96];
    out << "condition        method      accuracy (std)\n";
    out << "--------------------------------------------\n";
    for (const ConditionResult& cond : conditions) {
        const bool crops = cond.name.ends_with("_crop") && !cond.name.ends_with("no_crop");
        const bool weighted = cond.name.rfind("weighted", 0) == 0;
        std::snprintf(buf, sizeof buf, "%-16s %-11s %6.2f (%.2f)\n",
                      crops ? "with cropping" : "w/o cropping",
                      weighted ? "weighted" : "baseline", cond.mean, cond.stddev);
        out << buf;
    }
    out << "--------------------------------------------\n";
    for (const auto& [name, delta] : deltas) {
        std::snprintf(buf, sizeof buf, "delta %-10s %+.2f\n",
                      name == "crop" ? "with crop." : "w/o crop.", delta);
        out << buf;
    }
    return out.str();
}

} // namespace sdom
