// Command-line front end wiring the pipeline: synthetic data generation,
// autoencoder + dominance scoring, weighted training and the evaluation grid.

#include <cstdio>
#include <fcntl.h>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <unistd.h>
#include <vector>

#include <CLI11.hpp>

#include "sdom/config.hpp"
#include "sdom/dataset_io.hpp"
#include "sdom/dominance.hpp"
#include "sdom/sae.hpp"
#include "sdom/synth.hpp"
#include "sdom/trainer.hpp"

namespace {

namespace fs = std::filesystem;
using namespace sdom;

// Guards one output path against concurrent invocations.
class OutputLock {
public:
    explicit OutputLock(const fs::path& target) : lock_path_(target.string() + ".lock") {
        const int fd = ::open(lock_path_.c_str(), O_CREAT | O_EXCL | O_WRONLY, 0644);
        if (fd < 0) {
            throw std::runtime_error("output locked: " + lock_path_.string() +
                                     " exists (another run active, or remove the stale lock)");
        }
        ::close(fd);
    }
    ~OutputLock() {
        std::error_code ec;
        fs::remove(lock_path_, ec);
    }
    OutputLock(const OutputLock&) = delete;
    OutputLock& operator=(const OutputLock&) = delete;

private:
    fs::path lock_path_;
};

struct CommonArgs {
    std::string config_path;
    std::optional<std::uint64_t> seed;
};

RunConfig resolve_config(const CommonArgs& args) {
    RunConfig cfg =
        args.config_path.empty() ? default_run_config() : load_run_config(args.config_path);
    if (args.seed) {
        cfg.seed = *args.seed;
        cfg.synth.seed = *args.seed;
    }
    cfg.validate();
    return cfg;
}

void print_provenance_counts(const Dataset& ds) {
    std::map<std::string, std::size_t> counts;
    for (const Provenance p : ds.provenance) ++counts[provenance_name(p)];
    std::printf("generated %zu trials (%d classes, %zu channels, %zu time points)\n",
                ds.size(), ds.num_classes, ds.channels(), ds.time_points());
    for (const auto& [name, count] : counts) std::printf("  %-12s %zu\n", name.c_str(), count);
}

Dataset load_input_dataset(const std::string& path) {
    if (path.ends_with(".csv")) return load_dataset_csv(path);
    return load_dataset(path);
}

void print_score_summary(const Dataset& ds, const std::vector<DominanceRecord>& records) {
    std::size_t dominant = 0;
    for (const DominanceRecord& r : records) dominant += r.is_dominant ? 1 : 0;
    std::printf("scored %zu trials; %zu dominant (clamped score 1)\n", records.size(), dominant);

    if (!ds.has_provenance()) return;
    std::map<std::string, std::pair<double, std::size_t>> by_prov;
    for (const DominanceRecord& r : records) {
        auto& [sum, count] = by_prov[provenance_name(ds.provenance[r.trial_index])];
        sum += r.raw_score;
        ++count;
    }
    std::printf("mean raw score by provenance:\n");
    for (const auto& [name, agg] : by_prov) {
        std::printf("  %-12s %.6f  (n=%zu)\n", name.c_str(), agg.first / agg.second, agg.second);
    }
    const auto clean = by_prov.find("clean");
    const auto outlier = by_prov.find("outlier");
    if (clean != by_prov.end() && outlier != by_prov.end()) {
        const double clean_mean = clean->second.first / clean->second.second;
        const double outlier_mean = outlier->second.first / outlier->second.second;
        std::printf("outlier mean raw score %s clean mean raw score\n",
                    outlier_mean < clean_mean ? "<" : ">=");
    }
}

int cmd_generate(const CommonArgs& common, const std::string& out_path) {
    const RunConfig cfg = resolve_config(common);
    const Dataset ds = generate(cfg.synth);
    OutputLock lock(out_path);
    save_dataset(ds, out_path);
    print_provenance_counts(ds);
    std::printf("wrote %s\n", out_path.c_str());
    return 0;
}

int cmd_score(const CommonArgs& common, const std::string& data_path,
              const std::string& out_path, const std::string& sae_in,
              std::string sae_out) {
    const RunConfig cfg = resolve_config(common);
    const Dataset ds = load_input_dataset(data_path);

    SaeModel sae;
    if (!sae_in.empty()) {
        sae = load_sae(sae_in);
        std::printf("loaded SAE checkpoint %s\n", sae_in.c_str());
    } else {
        Rng rng = Rng(cfg.seed).child(1);
        SaeTrainResult result = train_sae(ds, cfg.sae, rng);
        sae = std::move(result.model);
        std::printf("trained SAE for %d epochs (final loss %.6f)\n", cfg.sae.epochs,
                    result.epoch_loss.empty() ? 0.0 : result.epoch_loss.back());
        if (sae_out.empty()) sae_out = fs::path(out_path).replace_extension(".saew").string();
    }
    if (!sae_out.empty()) {
        OutputLock lock(sae_out);
        save_sae(sae, sae_out);
        std::printf("wrote SAE checkpoint %s\n", sae_out.c_str());
    }

    const std::vector<DominanceRecord> records = estimate_all(ds, sae, cfg.kde, cfg.clamp);
    {
        OutputLock lock(out_path);
        write_score_csv(out_path, records, &ds);
    }
    print_score_summary(ds, records);
    std::printf("wrote %s\n", out_path.c_str());
    return 0;
}

int cmd_train(const CommonArgs& common, const std::string& data_path, bool also_baseline) {
    const RunConfig cfg = resolve_config(common);
    const Dataset ds = load_input_dataset(data_path);
    const Rng root(cfg.seed);

    SplitResult holdout = fraction_split(ds, 0.75, root.child(1));
    SplitResult inner = fraction_split(holdout.train, 0.8, root.child(2));

    Rng sae_rng = root.child(3);
    const SaeTrainResult sae = train_sae(inner.train, cfg.sae, sae_rng);
    const std::vector<DominanceRecord> records =
        estimate_all(inner.train, sae.model, cfg.kde, cfg.clamp);

    TrainConfig tc = cfg.train;
    tc.seed = root.child(4).next_u64();

    TrainLog log;
    const ClassifierModel weighted = train_classifier(inner.train, inner.test, &records, tc, &log);
    std::printf("weighted model: selected epoch %d, test accuracy %.2f%%\n", log.selected_epoch,
                accuracy_percent(weighted, holdout.test, tc));
    if (also_baseline) {
        const ClassifierModel baseline = train_classifier(inner.train, inner.test, nullptr, tc);
        std::printf("baseline model: test accuracy %.2f%%\n",
                    accuracy_percent(baseline, holdout.test, tc));
    }
    return 0;
}

int cmd_evaluate(const CommonArgs& common, const std::string& data_path,
                 const std::string& json_path, bool no_crop_only,
                 const std::vector<std::uint64_t>& seed_override) {
    const RunConfig cfg = resolve_config(common);
    const Dataset ds = load_input_dataset(data_path);

    EvalOptions opts = cfg.eval;
    if (no_crop_only) opts.crop_condition = false;
    if (!seed_override.empty()) opts.seeds = seed_override;

    const EvalReport report = evaluate_conditions(ds, opts);
    std::fputs(report.to_table().c_str(), stdout);
    if (!json_path.empty()) {
        OutputLock lock(json_path);
        std::ofstream out(json_path, std::ios::trunc);
        if (!out) throw std::runtime_error("cannot open " + json_path);
        out << report.to_json();
        std::printf("wrote %s\n", json_path.c_str());
    }
    return 0;
}

int cmd_report(const std::string& scores_path) {
    const std::vector<ScoreRow> rows = read_score_csv(scores_path);
    if (rows.empty()) {
        std::printf("no score rows in %s\n", scores_path.c_str());
        return 0;
    }
    std::map<int, std::vector<const ScoreRow*>> by_class;
    for (const ScoreRow& row : rows) by_class[row.label].push_back(&row);

    std::printf("%zu scored trials, %zu classes\n", rows.size(), by_class.size());
    std::printf("%-6s %-6s %-12s %-12s %s\n", "class", "n", "mean_raw", "mean_clamped",
                "dominant");
    for (const auto& [label, members] : by_class) {
        double raw = 0.0, clamped = 0.0;
        std::size_t dominant = 0;
        for (const ScoreRow* r : members) {
            raw += r->raw_score;
            clamped += r->clamped_score;
            dominant += r->is_dominant ? 1 : 0;
        }
        const double n = static_cast<double>(members.size());
        std::printf("%-6d %-6zu %-12.6f %-12.6f %zu\n", label, members.size(), raw / n,
                    clamped / n, dominant);
    }

    std::map<std::string, std::pair<double, std::size_t>> by_prov;
    for (const ScoreRow& row : rows) {
        if (!row.provenance.empty()) {
            auto& [sum, count] = by_prov[row.provenance];
            sum += row.raw_score;
            ++count;
        }
    }
    if (!by_prov.empty()) {
        std::printf("mean raw score by provenance:\n");
        for (const auto& [name, agg] : by_prov) {
            std::printf("  %-12s %.6f  (n=%zu)\n", name.c_str(), agg.first / agg.second,
                        agg.second);
        }
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"sample-dominance scoring and weighted training"};
    app.require_subcommand(1);

    CommonArgs common;

    auto add_common = [&common](CLI::App* cmd) {
        cmd->add_option("--config", common.config_path, "JSON config file (defaults used if omitted)");
        cmd->add_option("--seed", common.seed, "override the root seed");
    };

    // generate
    std::string gen_out = "dataset.sdom";
    CLI::App* generate_cmd = app.add_subcommand("generate", "write a synthetic dataset");
    add_common(generate_cmd);
    generate_cmd->add_option("--out", gen_out, "output dataset path")->required();

    // score
    std::string score_data, score_out = "scores.csv", score_sae_in, score_sae_out;
    CLI::App* score_cmd =
        app.add_subcommand("score", "train the SAE and write dominance scores");
    add_common(score_cmd);
    score_cmd->add_option("--data", score_data, "dataset file (.sdom or .csv)")->required();
    score_cmd->add_option("--out", score_out, "score CSV output path");
    score_cmd->add_option("--sae", score_sae_in, "reuse an SAE checkpoint instead of training");
    score_cmd->add_option("--save-sae", score_sae_out, "SAE checkpoint output path");

    // train
    std::string train_data;
    bool train_baseline = false;
    CLI::App* train_cmd =
        app.add_subcommand("train", "train a dominance-weighted classifier on a holdout split");
    add_common(train_cmd);
    train_cmd->add_option("--data", train_data, "dataset file (.sdom or .csv)")->required();
    train_cmd->add_flag("--baseline", train_baseline, "also train the unweighted baseline");

    // evaluate
    std::string eval_data, eval_json;
    bool eval_no_crop = false;
    std::vector<std::uint64_t> eval_seeds;
    CLI::App* eval_cmd =
        app.add_subcommand("evaluate", "run the baseline/weighted x crop/no-crop grid");
    add_common(eval_cmd);
    eval_cmd->add_option("--data", eval_data, "dataset file (.sdom or .csv)")->required();
    eval_cmd->add_option("--json", eval_json, "write the report as JSON");
    eval_cmd->add_flag("--no-crop", eval_no_crop, "skip the cropping conditions");
    eval_cmd->add_option("--seeds", eval_seeds, "override evaluation seeds");

    // report
    std::string report_scores;
    CLI::App* report_cmd = app.add_subcommand("report", "summarize a score CSV");
    report_cmd->add_option("--scores", report_scores, "score CSV path")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (generate_cmd->parsed()) return cmd_generate(common, gen_out);
        if (score_cmd->parsed()) {
            return cmd_score(common, score_data, score_out, score_sae_in, score_sae_out);
        }
        if (train_cmd->parsed()) return cmd_train(common, train_data, train_baseline);
        if (eval_cmd->parsed()) {
            return cmd_evaluate(common, eval_data, eval_json, eval_no_crop, eval_seeds);
        }
        if (report_cmd->parsed()) return cmd_report(report_scores);
    } catch (const ConfigError& e) {
        std::fprintf(stderr, "configuration error: %s\n", e.what());
        return 2;
    } catch (const std::invalid_argument& e) {
        std::fprintf(stderr, "configuration error: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
