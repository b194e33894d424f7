#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "sdom/matrix.hpp"
#include "sdom/rng.hpp"

namespace sdom {

// Reference classifier: flattened C x window input, one hidden ReLU layer,
// softmax output.
struct ClassifierModel {
    Matrix w1, b1; // in x hidden, 1 x hidden
    Matrix w2, b2; // hidden x O, 1 x O

    std::size_t input_width() const { return w1.rows(); }
    std::size_t hidden_width() const { return w1.cols(); }
    int num_classes() const { return static_cast<int>(w2.cols()); }

    std::vector<Matrix*> parameters();
    std::vector<const Matrix*> parameters() const;
};

ClassifierModel init_classifier(std::size_t input_width, std::size_t hidden_width,
                                int num_classes, Rng& rng);

// Softmax probabilities for one flattened input.
std::vector<double> classifier_probs(const ClassifierModel& model,
                                     std::span<const double> input);

// Batched probabilities, one row per input row.
Matrix classifier_probs_rows(const ClassifierModel& model, const Matrix& inputs);

// -gamma * log(probs[label]); probabilities below 1e-12 are clamped before
// the log (counted through clamp_events when provided) so the loss stays
// finite on confident wrong predictions.
double weighted_ce_loss(std::span<const double> probs, int label, double gamma,
                        std::size_t* clamp_events = nullptr);

struct ClassifierBackprop {
    double loss = 0.0;
    ClassifierModel grads;
    std::size_t clamp_events = 0;
};

// Mean weighted cross-entropy over the batch and its analytic gradients.
ClassifierBackprop classifier_loss_and_gradients(const ClassifierModel& model,
                                                 const Matrix& inputs,
                                                 std::span<const int> labels,
                                                 std::span<const double> gammas);

} // namespace sdom
