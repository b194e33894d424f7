#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "sdom/adamw.hpp"
#include "sdom/dataset.hpp"
#include "sdom/matrix.hpp"
#include "sdom/rng.hpp"

namespace sdom {

// Per-channel encoding of a trial, channels x t with t = T/4.
using Representation = Matrix;

// Stacked autoencoder: two ReLU encoder layers T -> T/2 -> T/4 and a
// mirrored decoder whose output layer is linear so reconstructions can be
// negative. One shared weight set encodes every channel independently.
struct SaeModel {
    Matrix enc1_w, enc1_b; // T x T/2, 1 x T/2
    Matrix enc2_w, enc2_b; // T/2 x t, 1 x t
    Matrix dec1_w, dec1_b; // t x T/2, 1 x T/2
    Matrix dec2_w, dec2_b; // T/2 x T, 1 x T

    std::size_t input_width() const { return enc1_w.rows(); }
    std::size_t hidden_width() const { return enc1_w.cols(); }
    std::size_t bottleneck_width() const { return enc2_w.cols(); }

    std::vector<Matrix*> parameters();
    std::vector<const Matrix*> parameters() const;
};

SaeModel init_sae(std::size_t time_points, Rng& rng);

// Batched forms operating on stacked channel rows (B x T).
Matrix encode_rows(const SaeModel& model, const Matrix& rows);
Matrix reconstruct_rows(const SaeModel& model, const Matrix& rows);

Representation encode(const SaeModel& model, const Trial& trial);
Matrix reconstruct(const SaeModel& model, const Trial& trial);

// Mean squared error over all C x T entries of the reconstruction.
double reconstruction_loss(const SaeModel& model, const Trial& trial);

struct SaeBackprop {
    double loss = 0.0;
    SaeModel grads;
};

// Loss and analytic gradients for a batch of channel rows; the loss is the
// mean squared error over every entry of the batch.
SaeBackprop sae_loss_and_gradients(const SaeModel& model, const Matrix& rows);

struct SaeTrainConfig {
    int epochs = 500;
    AdamWConfig optimizer{};
    std::size_t batch_size = 0; // 0 = full batch
};

struct SaeTrainResult {
    SaeModel model;
    std::vector<double> epoch_loss;
};

SaeTrainResult train_sae(const Dataset& dataset, const SaeTrainConfig& cfg, Rng& rng);

// Checkpoint: magic "SAEW", u16 version, layer widths, parameter blocks as
// little-endian float64. Round trips are bit-exact.
inline constexpr std::uint16_t kSaeCheckpointVersion = 1;
void save_sae(const SaeModel& model, const std::filesystem::path& path);
SaeModel load_sae(const std::filesystem::path& path);

} // namespace sdom
