#include "sdom/classifier.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "nn_util.hpp"

namespace sdom {

std::vector<Matrix*> ClassifierModel::parameters() { return {&w1, &b1, &w2, &b2}; }

std::vector<const Matrix*> ClassifierModel::parameters() const {
    return {&w1, &b1, &w2, &b2};
}

ClassifierModel init_classifier(std::size_t input_width, std::size_t hidden_width,
                                int num_classes, Rng& rng) {
    if (input_width == 0 || hidden_width == 0 || num_classes < 1) {
        throw std::invalid_argument("init_classifier: invalid dimensions");
    }
    ClassifierModel m;
    m.w1 = nn::glorot_uniform(input_width, hidden_width, rng);
    m.b1 = Matrix(1, hidden_width);
    m.w2 = nn::glorot_uniform(hidden_width, static_cast<std::size_t>(num_classes), rng);
    m.b2 = Matrix(1, static_cast<std::size_t>(num_classes));
    return m;
}

namespace {

void softmax_rows_inplace(Matrix& logits) {
    for (std::size_t r = 0; r < logits.rows(); ++r) {
        double* row = logits.data() + r * logits.cols();
        double max_logit = row[0];
        for (std::size_t c = 1; c < logits.cols(); ++c) max_logit = std::max(max_logit, row[c]);
        double sum = 0.0;
        for (std::size_t c = 0; c < logits.cols(); ++c) {
            row[c] = std::exp(row[c] - max_logit);
            sum += row[c];
        }
        for (std::size_t c = 0; c < logits.cols(); ++c) row[c] /= sum;
    }
}

struct ForwardPass {
    Matrix hidden;
    Matrix probs;
};

ForwardPass forward(const ClassifierModel& model, const Matrix& inputs) {
    if (inputs.cols() != model.input_width()) {
        throw std::invalid_argument("classifier: input width " + std::to_string(inputs.cols()) +
                                    " does not match model input width " +
                                    std::to_string(model.input_width()));
    }
    ForwardPass fp;
    fp.hidden = nn::linear(inputs, model.w1, model.b1);
    nn::relu_inplace(fp.hidden);
    fp.probs = nn::linear(fp.hidden, model.w2, model.b2);
    softmax_rows_inplace(fp.probs);
    return fp;
}

} // namespace

Matrix classifier_probs_rows(const ClassifierModel& model, const Matrix& inputs) {
    return forward(model, inputs).probs;
}

std::vector<double> classifier_probs(const ClassifierModel& model,
                                     std::span<const double> input) {
    Matrix row(1, input.size(), std::vector<double>(input.begin(), input.end()));
    const Matrix probs = classifier_probs_rows(model, row);
    return {probs.data(), probs.data() + probs.size()};
}

double weighted_ce_loss(std::span<const double> probs, int label, double gamma,
                        std::size_t* clamp_events) {
    if (label < 0 || static_cast<std::size_t>(label) >= probs.size()) {
        throw std::invalid_argument("weighted_ce_loss: label " + std::to_string(label) +
                                    " outside [0, " + std::to_string(probs.size()) + ")");
    }
    double p = probs[static_cast<std::size_t>(label)];
    if (p < 1e-12) {
        p = 1e-12;
        if (clamp_events != nullptr) ++*clamp_events;
    }
    return -gamma * std::log(p);
}

ClassifierBackprop classifier_loss_and_gradients(const ClassifierModel& model,
                                                 const Matrix& inputs,
                                                 std::span<const int> labels,
                                                 std::span<const double> gammas) {
    const std::size_t batch = inputs.rows();
    if (labels.size() != batch || gammas.size() != batch) {
        throw std::invalid_argument("classifier_loss_and_gradients: batch size mismatch");
    }
    const ForwardPass fp = forward(model, inputs);

    ClassifierBackprop bp;
    const double inv_batch = 1.0 / static_cast<double>(batch);
    // dL/dlogits = gamma * (softmax - onehot) / batch
    Matrix dlogits = fp.probs;
    for (std::size_t r = 0; r < batch; ++r) {
        bp.loss += weighted_ce_loss(fp.probs.row(r), labels[r], gammas[r], &bp.clamp_events) *
                   inv_batch;
        double* row = dlogits.data() + r * dlogits.cols();
        row[static_cast<std::size_t>(labels[r])] -= 1.0;
        for (std::size_t c = 0; c < dlogits.cols(); ++c) row[c] *= gammas[r] * inv_batch;
    }

    bp.grads.w2 = matmul(fp.hidden.transposed(), dlogits);
    bp.grads.b2 = nn::column_sums(dlogits);
    Matrix dhidden = matmul(dlogits, model.w2.transposed());
    nn::relu_backward_inplace(dhidden, fp.hidden);
    bp.grads.w1 = matmul(inputs.transposed(), dhidden);
    bp.grads.b1 = nn::column_sums(dhidden);
    return bp;
}

} // namespace sdom
