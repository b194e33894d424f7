#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <numbers>
#include <set>
#include <stdexcept>

#include "sdom/dataset.hpp"
#include "sdom/dataset_io.hpp"
#include "sdom/synth.hpp"

using namespace sdom;
namespace fs = std::filesystem;

namespace {

fs::path temp_file(const char* name) {
    return fs::temp_directory_path() / name;
}

SynthSpec small_spec() {
    SynthSpec spec;
    spec.trials_per_class = 10;
    spec.time_points = 16;
    spec.channels = 3;
    spec.seed = 99;
    return spec;
}

bool datasets_equal(const Dataset& a, const Dataset& b) {
    if (a.size() != b.size() || a.num_classes != b.num_classes ||
        a.sample_rate_hz != b.sample_rate_hz || a.provenance != b.provenance) {
        return false;
    }
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (a.trials[i].label != b.trials[i].label) return false;
        if (!(a.trials[i].signal == b.trials[i].signal)) return false;
    }
    return true;
}

std::size_t count_provenance(const Dataset& ds, Provenance p, int label) {
    std::size_t n = 0;
    for (std::size_t i = 0; i < ds.size(); ++i) {
        if (ds.provenance[i] == p && ds.trials[i].label == label) ++n;
    }
    return n;
}

} // namespace

TEST_CASE("generate with zero fractions tags everything clean") {
    const Dataset ds = generate(small_spec());
    CHECK(ds.size() == 20);
    for (const Provenance p : ds.provenance) CHECK(p == Provenance::clean);
}

TEST_CASE("generate outlier counts are exact per class") {
    SynthSpec spec = small_spec();
    spec.trials_per_class = 40;
    spec.outlier_fraction = 0.2;
    const Dataset ds = generate(spec);
    for (int label = 0; label < spec.num_classes; ++label) {
        CHECK(count_provenance(ds, Provenance::outlier, label) == 8);
        CHECK(count_provenance(ds, Provenance::clean, label) == 32);
    }
}

TEST_CASE("generate label-noise counts round down and remainder stays clean") {
    SynthSpec spec = small_spec();
    spec.trials_per_class = 13;
    spec.outlier_fraction = 0.25;  // floor(3.25) = 3
    spec.label_noise_fraction = 0.3; // floor(3.9) = 3
    const Dataset ds = generate(spec);
    for (int label = 0; label < spec.num_classes; ++label) {
        CHECK(count_provenance(ds, Provenance::outlier, label) == 3);
        CHECK(count_provenance(ds, Provenance::label_noise, label) == 3);
        CHECK(count_provenance(ds, Provenance::clean, label) == 7);
    }
}

TEST_CASE("generate is deterministic per seed") {
    const Dataset a = generate(small_spec());
    const Dataset b = generate(small_spec());
    CHECK(datasets_equal(a, b));
    SynthSpec other = small_spec();
    other.seed = 100;
    CHECK_FALSE(datasets_equal(a, generate(other)));
}

TEST_CASE("generate rejects invalid fractions") {
    SynthSpec spec = small_spec();
    spec.outlier_fraction = -0.1;
    CHECK_THROWS_WITH_AS(generate(spec), doctest::Contains("outlier_fraction"),
                         std::invalid_argument);
    spec.outlier_fraction = 0.7;
    spec.label_noise_fraction = 0.7;
    CHECK_THROWS_AS(generate(spec), std::invalid_argument);
}

TEST_CASE("generate at infinite snr produces pure class sinusoids on active channels") {
    SynthSpec spec = small_spec();
    spec.snr = std::numeric_limits<double>::infinity();
    spec.time_points = 32;
    const Dataset ds = generate(spec);
    for (std::size_t i = 0; i < ds.size(); ++i) {
        const Trial& trial = ds.trials[i];
        const double freq = spec.class_frequencies_hz[static_cast<std::size_t>(trial.label)];
        const double omega = 2.0 * std::numbers::pi * freq / spec.sample_rate_hz;
        for (std::size_t ch = 0; ch < trial.channels(); ++ch) {
            double max_abs = 0.0;
            for (std::size_t j = 0; j < trial.time_points(); ++j) {
                max_abs = std::max(max_abs, std::abs(trial.signal(ch, j)));
            }
            if (max_abs == 0.0) continue; // inactive channel
            // fit A*sin(omega j + phase) by least squares on sin/cos basis;
            // residual must vanish and the fitted amplitude match the spec
            double ss = 0.0, sc = 0.0, cc = 0.0, ys = 0.0, yc = 0.0;
            for (std::size_t j = 0; j < trial.time_points(); ++j) {
                const double s = std::sin(omega * static_cast<double>(j));
                const double c = std::cos(omega * static_cast<double>(j));
                const double y = trial.signal(ch, j);
                ss += s * s;
                sc += s * c;
                cc += c * c;
                ys += y * s;
                yc += y * c;
            }
            const double det = ss * cc - sc * sc;
            REQUIRE(std::abs(det) > 1e-9);
            const double alpha = (ys * cc - yc * sc) / det;
            const double beta = (yc * ss - ys * sc) / det;
            double residual = 0.0;
            for (std::size_t j = 0; j < trial.time_points(); ++j) {
                const double fit = alpha * std::sin(omega * static_cast<double>(j)) +
                                   beta * std::cos(omega * static_cast<double>(j));
                residual += std::pow(trial.signal(ch, j) - fit, 2);
            }
            CHECK(residual < 1e-12);
            CHECK(std::hypot(alpha, beta) == doctest::Approx(spec.amplitude).epsilon(1e-9));
        }
    }
}

TEST_CASE("save/load round trip is the identity") {
    SynthSpec spec = small_spec();
    spec.outlier_fraction = 0.2;
    const Dataset ds = generate(spec);
    const fs::path path = temp_file("sdom_roundtrip.sdom");
    save_dataset(ds, path);
    const Dataset loaded = load_dataset(path);
    CHECK(datasets_equal(ds, loaded));
    fs::remove(path);
}

TEST_CASE("save rejects an empty dataset") {
    Dataset ds;
    ds.num_classes = 2;
    CHECK_THROWS_WITH_AS(save_dataset(ds, temp_file("sdom_empty.sdom")),
                         doctest::Contains("at least one trial"), std::invalid_argument);
}

TEST_CASE("load reports truncation as a parse error with a byte offset") {
    const Dataset ds = generate(small_spec());
    const fs::path path = temp_file("sdom_trunc.sdom");
    save_dataset(ds, path);
    const auto full_size = fs::file_size(path);
    fs::resize_file(path, full_size / 2);
    CHECK_THROWS_WITH_AS(load_dataset(path), doctest::Contains("parse error at byte"),
                         std::runtime_error);
    fs::remove(path);
}

TEST_CASE("load rejects unknown format versions") {
    const Dataset ds = generate(small_spec());
    const fs::path path = temp_file("sdom_version.sdom");
    save_dataset(ds, path);
    {
        std::fstream f(path, std::ios::in | std::ios::out | std::ios::binary);
        f.seekp(4); // version lives after the magic
        f.put(9);
    }
    CHECK_THROWS_WITH_AS(load_dataset(path), doctest::Contains("version"), std::runtime_error);
    fs::remove(path);
}

TEST_CASE("load rejects trailing bytes") {
    const Dataset ds = generate(small_spec());
    const fs::path path = temp_file("sdom_trailing.sdom");
    save_dataset(ds, path);
    {
        std::ofstream f(path, std::ios::app | std::ios::binary);
        f.put(0);
    }
    CHECK_THROWS_WITH_AS(load_dataset(path), doctest::Contains("trailing"), std::runtime_error);
    fs::remove(path);
}

TEST_CASE("csv import round trips a small dataset") {
    const fs::path path = temp_file("sdom_import.csv");
    {
        std::ofstream f(path);
        f << "trial,channel,time,value,label\n";
        for (int trial = 0; trial < 4; ++trial) {
            for (int ch = 0; ch < 2; ++ch) {
                for (int t = 0; t < 5; ++t) {
                    f << trial << ',' << ch << ',' << t << ','
                      << (trial + 0.5 * ch + 0.25 * t) << ',' << (trial % 2) << "\n";
                }
            }
        }
    }
    const Dataset ds = load_dataset_csv(path, 125.0);
    CHECK(ds.size() == 4);
    CHECK(ds.channels() == 2);
    CHECK(ds.time_points() == 5);
    CHECK(ds.num_classes == 2);
    CHECK(ds.sample_rate_hz == 125.0);
    CHECK(ds.trials[3].signal(1, 4) == doctest::Approx(3.0 + 0.5 + 1.0));
    CHECK_FALSE(ds.has_provenance());
    fs::remove(path);
}

TEST_CASE("csv import reports the offending line") {
    const fs::path path = temp_file("sdom_bad.csv");
    {
        std::ofstream f(path);
        f << "trial,channel,time,value,label\n";
        f << "0,0,0,1.0,0\n";
        f << "0,0,oops,1.0,0\n";
    }
    CHECK_THROWS_WITH_AS(load_dataset_csv(path), doctest::Contains("line 3"),
                         std::runtime_error);
    fs::remove(path);
}

TEST_CASE("csv import rejects inconsistent labels and missing cells") {
    const fs::path path = temp_file("sdom_bad2.csv");
    {
        std::ofstream f(path);
        f << "trial,channel,time,value,label\n";
        for (int t = 0; t < 4; ++t) f << "0,0," << t << ",1.0,0\n";
        for (int t = 0; t < 3; ++t) f << "1,0," << t << ",1.0,1\n";
    }
    CHECK_THROWS_AS(load_dataset_csv(path), std::runtime_error);
    fs::remove(path);
}

TEST_CASE("kfold split is stratified and exact") {
    SynthSpec spec = small_spec(); // 10 per class
    const Dataset ds = generate(spec);
    const SplitResult split = kfold_split(ds, 0, 2, Rng(3));
    CHECK(split.train.size() == 10);
    CHECK(split.test.size() == 10);
    const auto train_counts = split.train.class_counts();
    const auto test_counts = split.test.class_counts();
    for (std::size_t c = 0; c < 2; ++c) {
        CHECK(train_counts[c] == 5);
        CHECK(test_counts[c] == 5);
    }
}

TEST_CASE("kfold folds partition the dataset") {
    SynthSpec spec = small_spec();
    const Dataset ds = generate(spec);
    // fingerprint trials by their first sample, unique with probability 1
    std::multiset<double> seen;
    const int folds = 3;
    std::size_t total = 0;
    for (int f = 0; f < folds; ++f) {
        const SplitResult split = kfold_split(ds, f, folds, Rng(42));
        total += split.test.size();
        for (const Trial& t : split.test.trials) seen.insert(t.signal(0, 0));
    }
    CHECK(total == ds.size());
    std::multiset<double> expected;
    for (const Trial& t : ds.trials) expected.insert(t.signal(0, 0));
    CHECK(seen == expected);
}

TEST_CASE("kfold split is deterministic per seed") {
    const Dataset ds = generate(small_spec());
    const SplitResult a = kfold_split(ds, 1, 2, Rng(5));
    const SplitResult b = kfold_split(ds, 1, 2, Rng(5));
    CHECK(datasets_equal(a.train, b.train));
    CHECK(datasets_equal(a.test, b.test));
}

TEST_CASE("kfold split rejects classes smaller than the fold count") {
    const Dataset ds = generate(small_spec()); // 10 per class
    CHECK_THROWS_WITH_AS(kfold_split(ds, 0, 11, Rng(1)), doctest::Contains("fewer than"),
                         std::invalid_argument);
}

TEST_CASE("fraction split keeps both sides populated per class") {
    const Dataset ds = generate(small_spec());
    const SplitResult split = fraction_split(ds, 0.8, Rng(7));
    const auto train_counts = split.train.class_counts();
    const auto test_counts = split.test.class_counts();
    for (std::size_t c = 0; c < 2; ++c) {
        CHECK(train_counts[c] == 8);
        CHECK(test_counts[c] == 2);
    }
}

TEST_CASE("crop arithmetic") {
    Trial trial{Matrix(2, 1000), 1};
    const auto crops = crop(trial, 500, 25);
    CHECK(crops.size() == 21); // floor((1000 - 500) / 25) + 1
    for (const Trial& c : crops) {
        CHECK(c.label == 1);
        CHECK(c.time_points() == 500);
        CHECK(c.channels() == 2);
    }
}

TEST_CASE("crop with window equal to the trial returns the trial") {
    Rng rng(8);
    Matrix signal(3, 12);
    for (std::size_t i = 0; i < signal.size(); ++i) signal.data()[i] = rng.uniform(-1, 1);
    Trial trial{signal, 0};
    const auto crops = crop(trial, 12, 5);
    REQUIRE(crops.size() == 1);
    CHECK(crops[0].signal == trial.signal);
}

TEST_CASE("crop with stride larger than the slack returns one crop") {
    Trial trial{Matrix(1, 20), 0};
    CHECK(crop(trial, 15, 100).size() == 1);
}

TEST_CASE("crop count formula holds for random valid shapes") {
    Rng rng(14);
    for (int i = 0; i < 100; ++i) {
        const std::size_t t = 4 + rng.uniform_index(200);
        const std::size_t w = 1 + rng.uniform_index(t);
        const std::size_t s = 1 + rng.uniform_index(40);
        CHECK(crop_count(t, w, s) == (t - w) / s + 1);
    }
}

TEST_CASE("crop rejects invalid windows") {
    Trial trial{Matrix(1, 10), 0};
    CHECK_THROWS_AS(crop(trial, 11, 1), std::invalid_argument);
    CHECK_THROWS_AS(crop(trial, 5, 0), std::invalid_argument);
    CHECK_THROWS_AS(crop(trial, 0, 1), std::invalid_argument);
}

TEST_CASE("dataset validation catches broken invariants") {
    Dataset ds;
    ds.num_classes = 2;
    ds.trials.push_back({Matrix(2, 8), 0});
    ds.trials.push_back({Matrix(2, 8), 5}); // label out of range
    CHECK_THROWS_AS(ds.validate(), std::invalid_argument);
    ds.trials[1].label = 1;
    ds.trials[1].signal = Matrix(3, 8); // inconsistent channels
    CHECK_THROWS_AS(ds.validate(), std::invalid_argument);
}
