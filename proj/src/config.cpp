#include "sdom/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

namespace sdom {

using nlohmann::json;

namespace {

void check_keys(const json& obj, const std::string& scope,
                const std::set<std::string>& allowed) {
    for (const auto& [key, value] : obj.items()) {
        (void)value;
        if (!allowed.contains(key)) {
            throw ConfigError("unknown config key: " + (scope.empty() ? key : scope + "." + key));
        }
    }
}

template <typename T>
void read(const json& obj, const char* key, T& out) {
    if (obj.contains(key)) {
        try {
            out = obj.at(key).get<T>();
        } catch (const json::exception& e) {
            throw ConfigError(std::string("bad value for config key '") + key + "': " + e.what());
        }
    }
}

void parse_synth(const json& obj, SynthSpec& spec) {
    check_keys(obj, "synth",
               {"num_classes", "channels", "time_points", "trials_per_class",
                "class_frequencies_hz", "snr", "outlier_fraction", "label_noise_fraction",
                "sample_rate_hz", "amplitude", "phase_jitter_rad", "seed"});
    read(obj, "num_classes", spec.num_classes);
    read(obj, "channels", spec.channels);
    read(obj, "time_points", spec.time_points);
    read(obj, "trials_per_class", spec.trials_per_class);
    read(obj, "class_frequencies_hz", spec.class_frequencies_hz);
    read(obj, "snr", spec.snr);
    read(obj, "outlier_fraction", spec.outlier_fraction);
    read(obj, "label_noise_fraction", spec.label_noise_fraction);
    read(obj, "sample_rate_hz", spec.sample_rate_hz);
    read(obj, "amplitude", spec.amplitude);
    read(obj, "phase_jitter_rad", spec.phase_jitter_rad);
    read(obj, "seed", spec.seed);
}

void parse_kde(const json& obj, KdeConfig& cfg) {
    check_keys(obj, "kde", {"kernel", "bandwidth", "bandwidth_rule"});
    if (obj.contains("kernel")) {
        const std::string kernel = obj.at("kernel").get<std::string>();
        if (kernel != "gaussian") throw ConfigError("kde.kernel: unknown kernel '" + kernel + "'");
        cfg.kernel = Kernel::gaussian;
    }
    read(obj, "bandwidth", cfg.bandwidth);
    if (obj.contains("bandwidth_rule")) {
        const std::string rule = obj.at("bandwidth_rule").get<std::string>();
        if (rule == "fixed") {
            cfg.bandwidth_rule = BandwidthRule::fixed;
        } else if (rule == "silverman") {
            cfg.bandwidth_rule = BandwidthRule::silverman;
        } else {
            throw ConfigError("kde.bandwidth_rule: expected 'fixed' or 'silverman', got '" +
                              rule + "'");
        }
    }
    if (!(cfg.bandwidth > 0.0)) throw ConfigError("kde.bandwidth: must be > 0");
}

void parse_clamp(const json& obj, ClampConfig& cfg) {
    check_keys(obj, "dominance", {"psi", "psi_mode"});
    read(obj, "psi", cfg.psi);
    if (obj.contains("psi_mode")) {
        const std::string mode = obj.at("psi_mode").get<std::string>();
        if (mode == "percentile") {
            cfg.mode = PsiMode::percentile;
        } else if (mode == "absolute") {
            cfg.mode = PsiMode::absolute;
        } else {
            throw ConfigError("dominance.psi_mode: expected 'percentile' or 'absolute', got '" +
                              mode + "'");
        }
    }
}

void parse_curriculum(const json& obj, CurriculumSchedule& sched) {
    check_keys(obj, "curriculum", {"t1", "t2"});
    read(obj, "t1", sched.t1);
    read(obj, "t2", sched.t2);
}

void parse_optimizer(const json& obj, const std::string& scope, AdamWConfig& cfg) {
    check_keys(obj, scope, {"learning_rate", "weight_decay", "beta1", "beta2", "epsilon"});
    read(obj, "learning_rate", cfg.learning_rate);
    read(obj, "weight_decay", cfg.weight_decay);
    read(obj, "beta1", cfg.beta1);
    read(obj, "beta2", cfg.beta2);
    read(obj, "epsilon", cfg.epsilon);
}

void parse_sae(const json& obj, SaeTrainConfig& cfg) {
    check_keys(obj, "sae", {"epochs", "batch_size", "optimizer"});
    read(obj, "epochs", cfg.epochs);
    read(obj, "batch_size", cfg.batch_size);
    if (obj.contains("optimizer")) parse_optimizer(obj.at("optimizer"), "sae.optimizer", cfg.optimizer);
}

void parse_train(const json& obj, TrainConfig& cfg) {
    check_keys(obj, "train",
               {"epochs", "batch_size", "hidden_width", "use_crops", "crop_window_points",
                "crop_stride_points", "early_stopping", "early_stop_after", "optimizer"});
    read(obj, "epochs", cfg.epochs);
    read(obj, "batch_size", cfg.batch_size);
    read(obj, "hidden_width", cfg.hidden_width);
    read(obj, "use_crops", cfg.use_crops);
    read(obj, "crop_window_points", cfg.crop_window_points);
    read(obj, "crop_stride_points", cfg.crop_stride_points);
    read(obj, "early_stopping", cfg.early_stopping);
    read(obj, "early_stop_after", cfg.early_stop_after);
    if (obj.contains("optimizer")) parse_optimizer(obj.at("optimizer"), "train.optimizer", cfg.optimizer);
}

void parse_eval(const json& obj, EvalOptions& opts) {
    check_keys(obj, "evaluate", {"num_folds", "seeds", "no_crop_condition", "crop_condition",
                                 "val_fraction"});
    read(obj, "num_folds", opts.num_folds);
    read(obj, "seeds", opts.seeds);
    read(obj, "no_crop_condition", opts.no_crop_condition);
    read(obj, "crop_condition", opts.crop_condition);
    read(obj, "val_fraction", opts.val_fraction);
}

} // namespace

void RunConfig::validate() const {
    try {
        synth.validate();
        clamp.validate();
        train.validate();
        if (sae.epochs < 0) throw std::invalid_argument("sae: epochs must be >= 0");
        if (!(kde.bandwidth > 0.0)) throw std::invalid_argument("kde: bandwidth must be > 0");
        if (eval.num_folds < 2) throw std::invalid_argument("evaluate: num_folds must be >= 2");
        if (eval.seeds.empty()) throw std::invalid_argument("evaluate: seeds must be nonempty");
        if (!(eval.val_fraction > 0.0 && eval.val_fraction < 1.0)) {
            throw std::invalid_argument("evaluate: val_fraction must be in (0, 1)");
        }
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
}

RunConfig default_run_config() { return RunConfig{}; }

RunConfig parse_run_config(const std::string& json_text) {
    json root;
    try {
        root = json::parse(json_text);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    if (!root.is_object()) throw ConfigError("config root must be a JSON object");
    check_keys(root, "", {"seed", "synth", "kde", "dominance", "curriculum", "sae", "train",
                          "evaluate"});

    RunConfig cfg;
    read(root, "seed", cfg.seed);
    cfg.synth.seed = cfg.seed; // root seed feeds generation unless overridden
    if (root.contains("synth")) parse_synth(root.at("synth"), cfg.synth);
    if (root.contains("kde")) parse_kde(root.at("kde"), cfg.kde);
    if (root.contains("dominance")) parse_clamp(root.at("dominance"), cfg.clamp);
    if (root.contains("curriculum")) parse_curriculum(root.at("curriculum"), cfg.train.schedule);
    if (root.contains("sae")) parse_sae(root.at("sae"), cfg.sae);
    if (root.contains("train")) parse_train(root.at("train"), cfg.train);
    if (root.contains("evaluate")) parse_eval(root.at("evaluate"), cfg.eval);

    // seeds and sub-configs shared by evaluate
    cfg.eval.sae = cfg.sae;
    cfg.eval.kde = cfg.kde;
    cfg.eval.clamp = cfg.clamp;
    cfg.eval.train = cfg.train;
    cfg.validate();
    return cfg;
}

RunConfig load_run_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path.string());
    std::stringstream buffer;
    buffer << in.rdbuf();
    return parse_run_config(buffer.str());
}

std::string run_config_schema() {
    return R"({
  "seed": 42,
  "synth": {
    "num_classes": 2, "channels": 4, "time_points": 64, "trials_per_class": 80,
    "class_frequencies_hz": [5.0, 8.0], "snr": 32.0,
    "outlier_fraction": 0.0, "label_noise_fraction": 0.0,
    "sample_rate_hz": 62.5, "amplitude": 20.0, "phase_jitter_rad": 0.4, "seed": 42
  },
  "kde": { "kernel": "gaussian", "bandwidth": 3.0, "bandwidth_rule": "fixed" },
  "dominance": { "psi": 90.0, "psi_mode": "percentile" },
  "curriculum": { "t1": 50, "t2": 150 },
  "sae": {
    "epochs": 500, "batch_size": 0,
    "optimizer": { "learning_rate": 0.001, "weight_decay": 0.01,
                   "beta1": 0.9, "beta2": 0.999, "epsilon": 1e-8 }
  },
  "train": {
    "epochs": 200, "batch_size": 16, "hidden_width": 64,
    "use_crops": false, "crop_window_points": 32, "crop_stride_points": 0,
    "early_stopping": true, "early_stop_after": 180,
    "optimizer": { "learning_rate": 0.001, "weight_decay": 0.01,
                   "beta1": 0.9, "beta2": 0.999, "epsilon": 1e-8 }
  },
  "evaluate": {
    "num_folds": 2, "seeds": [1, 2, 3, 4, 5],
    "no_crop_condition": true, "crop_condition": true, "val_fraction": 0.2
  }
})";
}

} // namespace sdom
