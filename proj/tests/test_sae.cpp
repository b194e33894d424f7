#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <stdexcept>

#include "gradient_check.hpp"
#include "sdom/sae.hpp"
#include "sdom/synth.hpp"

using namespace sdom;
namespace fs = std::filesystem;

namespace {

SaeModel zero_model(std::size_t t) {
    Rng rng(0);
    SaeModel m = init_sae(t, rng);
    for (Matrix* p : m.parameters()) p->fill(0.0);
    return m;
}

Trial random_trial(std::size_t c, std::size_t t, Rng& rng, int label = 0) {
    Matrix signal(c, t);
    for (std::size_t i = 0; i < signal.size(); ++i) signal.data()[i] = rng.uniform(-2.0, 2.0);
    return {std::move(signal), label};
}

bool models_equal(const SaeModel& a, const SaeModel& b) {
    const auto pa = a.parameters();
    const auto pb = b.parameters();
    for (std::size_t i = 0; i < pa.size(); ++i) {
        if (!(*pa[i] == *pb[i])) return false;
    }
    return true;
}

} // namespace

TEST_CASE("sae widths follow the T -> T/2 -> T/4 geometry") {
    Rng rng(1);
    const SaeModel m = init_sae(64, rng);
    CHECK(m.input_width() == 64);
    CHECK(m.hidden_width() == 32);
    CHECK(m.bottleneck_width() == 16);
    CHECK_THROWS_AS(init_sae(3, rng), std::invalid_argument);
}

TEST_CASE("zero model encodes everything to zero") {
    const SaeModel m = zero_model(16);
    Rng rng(2);
    const Trial trial = random_trial(3, 16, rng);
    const Representation rep = encode(m, trial);
    CHECK(rep.rows() == 3);
    CHECK(rep.cols() == 4);
    for (std::size_t i = 0; i < rep.size(); ++i) CHECK(rep.data()[i] == 0.0);
}

TEST_CASE("zero model reconstruction loss is the mean squared input") {
    const SaeModel m = zero_model(16);
    Rng rng(3);
    const Trial trial = random_trial(2, 16, rng);
    double expected = 0.0;
    for (std::size_t i = 0; i < trial.signal.size(); ++i) {
        expected += trial.signal.data()[i] * trial.signal.data()[i];
    }
    expected /= static_cast<double>(trial.signal.size());
    CHECK(reconstruction_loss(m, trial) == doctest::Approx(expected).epsilon(1e-12));
    const Matrix y = reconstruct(m, trial);
    for (std::size_t i = 0; i < y.size(); ++i) CHECK(y.data()[i] == 0.0);
}

TEST_CASE("reconstruction loss matches a double-loop reference") {
    Rng rng(4);
    SaeModel m = init_sae(16, rng);
    const Trial trial = random_trial(4, 16, rng);
    const Matrix y = reconstruct(m, trial);
    double reference = 0.0;
    for (std::size_t c = 0; c < trial.channels(); ++c) {
        for (std::size_t t = 0; t < trial.time_points(); ++t) {
            const double d = y(c, t) - trial.signal(c, t);
            reference += d * d;
        }
    }
    reference /= static_cast<double>(trial.channels() * trial.time_points());
    CHECK(reconstruction_loss(m, trial) == doctest::Approx(reference).epsilon(1e-12));
}

TEST_CASE("encoding is per-channel independent") {
    Rng rng(5);
    SaeModel m = init_sae(16, rng);
    Trial trial = random_trial(4, 16, rng);
    const Representation base = encode(m, trial);

    // permuting input channels permutes output rows identically
    Trial permuted = trial;
    for (std::size_t t = 0; t < 16; ++t) {
        permuted.signal(0, t) = trial.signal(2, t);
        permuted.signal(2, t) = trial.signal(0, t);
    }
    const Representation swapped = encode(m, permuted);
    for (std::size_t t = 0; t < base.cols(); ++t) {
        CHECK(swapped(0, t) == base(2, t));
        CHECK(swapped(2, t) == base(0, t));
        CHECK(swapped(1, t) == base(1, t));
        CHECK(swapped(3, t) == base(3, t));
    }

    // modifying one channel changes only its own row
    Trial modified = trial;
    for (std::size_t t = 0; t < 16; ++t) modified.signal(1, t) += 0.5;
    const Representation changed = encode(m, modified);
    for (std::size_t t = 0; t < base.cols(); ++t) {
        CHECK(changed(0, t) == base(0, t));
        CHECK(changed(2, t) == base(2, t));
        CHECK(changed(3, t) == base(3, t));
    }
}

TEST_CASE("single-channel trial encodes to a 1 x t representation") {
    Rng rng(6);
    SaeModel m = init_sae(16, rng);
    const Trial trial = random_trial(1, 16, rng);
    const Representation rep = encode(m, trial);
    CHECK(rep.rows() == 1);
    CHECK(rep.cols() == 4);
}

TEST_CASE("encode rejects width mismatches") {
    Rng rng(7);
    SaeModel m = init_sae(16, rng);
    const Trial trial = random_trial(2, 20, rng);
    CHECK_THROWS_WITH_AS(encode(m, trial), doctest::Contains("width"), std::invalid_argument);
}

TEST_CASE("sae analytic gradients match central finite differences") {
    // seeds chosen so no ReLU pre-activation sits within the difference
    // step of zero, where the finite-difference oracle itself breaks down
    for (std::uint64_t seed : {3ull, 7ull}) {
        Rng rng(seed);
        SaeModel m = init_sae(8, rng); // t = 2
        Matrix rows(3, 8);
        for (std::size_t i = 0; i < rows.size(); ++i) rows.data()[i] = rng.uniform(-1.5, 1.5);

        const SaeBackprop bp = sae_loss_and_gradients(m, rows);
        const auto result = gradcheck::compare(
            m.parameters(), bp.grads.parameters(),
            [&]() { return sae_loss_and_gradients(m, rows).loss; });
        CHECK(result.relative() < 1e-4);
    }
}

TEST_CASE("train_sae with zero epochs returns the initialized model") {
    SynthSpec spec;
    spec.trials_per_class = 3;
    spec.time_points = 16;
    spec.channels = 2;
    const Dataset ds = generate(spec);
    SaeTrainConfig cfg;
    cfg.epochs = 0;
    Rng rng_train(31);
    const SaeTrainResult result = train_sae(ds, cfg, rng_train);
    CHECK(result.epoch_loss.empty());
    Rng rng_ref(31);
    const SaeModel reference = init_sae(16, rng_ref);
    CHECK(models_equal(result.model, reference));
}

TEST_CASE("train_sae overfits a single constant trial") {
    Dataset ds;
    ds.num_classes = 1;
    Matrix signal(1, 8);
    signal.fill(0.7);
    ds.trials.push_back({signal, 0});

    SaeTrainConfig cfg;
    cfg.epochs = 3000;
    cfg.optimizer.learning_rate = 0.01;
    cfg.optimizer.weight_decay = 0.0;
    Rng rng(17);
    const SaeTrainResult result = train_sae(ds, cfg, rng);
    CHECK(reconstruction_loss(result.model, ds.trials[0]) < 1e-3);
}

TEST_CASE("train_sae reaches a tenth of the initial loss on the default dataset") {
    SynthSpec spec; // defaults
    const Dataset ds = generate(spec);
    Rng rng(123);
    Rng probe = rng;
    const SaeModel fresh = init_sae(ds.time_points(), probe);
    double initial = 0.0;
    for (const Trial& t : ds.trials) initial += reconstruction_loss(fresh, t);
    initial /= static_cast<double>(ds.size());

    SaeTrainConfig cfg; // 500 epochs
    const SaeTrainResult result = train_sae(ds, cfg, rng);
    for (double loss : result.epoch_loss) CHECK(std::isfinite(loss));
    for (const Matrix* p : result.model.parameters()) CHECK(p->all_finite());
    CHECK(result.epoch_loss.back() < 0.1 * initial);
}

TEST_CASE("train_sae minibatch path runs and stays finite") {
    SynthSpec spec;
    spec.trials_per_class = 6;
    spec.time_points = 16;
    const Dataset ds = generate(spec);
    SaeTrainConfig cfg;
    cfg.epochs = 20;
    cfg.batch_size = 5;
    Rng rng(9);
    const SaeTrainResult result = train_sae(ds, cfg, rng);
    CHECK(result.epoch_loss.size() == 20);
    for (double loss : result.epoch_loss) CHECK(std::isfinite(loss));
}

TEST_CASE("sae checkpoint round trip is bit exact") {
    Rng rng(10);
    SaeModel m = init_sae(24, rng);
    const fs::path path = fs::temp_directory_path() / "sdom_test.saew";
    save_sae(m, path);
    const SaeModel loaded = load_sae(path);
    CHECK(models_equal(m, loaded));
    fs::remove(path);
}

TEST_CASE("sae checkpoint loader rejects bad files") {
    const fs::path path = fs::temp_directory_path() / "sdom_bad.saew";
    {
        std::ofstream f(path, std::ios::binary);
        f << "NOPE";
    }
    CHECK_THROWS_WITH_AS(load_sae(path), doctest::Contains("magic"), std::runtime_error);

    Rng rng(11);
    SaeModel m = init_sae(8, rng);
    save_sae(m, path);
    const auto size = fs::file_size(path);
    fs::resize_file(path, size - 9);
    CHECK_THROWS_WITH_AS(load_sae(path), doctest::Contains("truncated"), std::runtime_error);
    fs::remove(path);
}
