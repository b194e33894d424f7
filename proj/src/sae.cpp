#include "sdom/sae.hpp"

#include <array>
#include <bit>
#include <cmath>
#include <fstream>
#include <numeric>
#include <stdexcept>
#include <string>

#include "nn_util.hpp"

namespace sdom {

std::vector<Matrix*> SaeModel::parameters() {
    return {&enc1_w, &enc1_b, &enc2_w, &enc2_b, &dec1_w, &dec1_b, &dec2_w, &dec2_b};
}

std::vector<const Matrix*> SaeModel::parameters() const {
    return {&enc1_w, &enc1_b, &enc2_w, &enc2_b, &dec1_w, &dec1_b, &dec2_w, &dec2_b};
}

SaeModel init_sae(std::size_t time_points, Rng& rng) {
    if (time_points < 4) {
        throw std::invalid_argument("init_sae: need at least 4 time points, got " +
                                    std::to_string(time_points));
    }
    const std::size_t hidden = time_points / 2;
    const std::size_t bottleneck = time_points / 4;
    SaeModel m;
    m.enc1_w = nn::glorot_uniform(time_points, hidden, rng);
    m.enc1_b = Matrix(1, hidden);
    m.enc2_w = nn::glorot_uniform(hidden, bottleneck, rng);
    m.enc2_b = Matrix(1, bottleneck);
    m.dec1_w = nn::glorot_uniform(bottleneck, hidden, rng);
    m.dec1_b = Matrix(1, hidden);
    m.dec2_w = nn::glorot_uniform(hidden, time_points, rng);
    m.dec2_b = Matrix(1, time_points);
    return m;
}

namespace {

void check_width(const SaeModel& model, const Matrix& rows, const char* op) {
    if (rows.cols() != model.input_width()) {
        throw std::invalid_argument(std::string(op) + ": input width " +
                                    std::to_string(rows.cols()) +
                                    " does not match model input width " +
                                    std::to_string(model.input_width()));
    }
}

struct ForwardPass {
    Matrix h1, z, h2, y;
};

ForwardPass forward(const SaeModel& model, const Matrix& rows) {
    ForwardPass fp;
    fp.h1 = nn::linear(rows, model.enc1_w, model.enc1_b);
    nn::relu_inplace(fp.h1);
    fp.z = nn::linear(fp.h1, model.enc2_w, model.enc2_b);
    nn::relu_inplace(fp.z);
    fp.h2 = nn::linear(fp.z, model.dec1_w, model.dec1_b);
    nn::relu_inplace(fp.h2);
    fp.y = nn::linear(fp.h2, model.dec2_w, model.dec2_b);
    return fp;
}

} // namespace

Matrix encode_rows(const SaeModel& model, const Matrix& rows) {
    check_width(model, rows, "encode");
    Matrix h1 = nn::linear(rows, model.enc1_w, model.enc1_b);
    nn::relu_inplace(h1);
    Matrix z = nn::linear(h1, model.enc2_w, model.enc2_b);
    nn::relu_inplace(z);
    return z;
}

Matrix reconstruct_rows(const SaeModel& model, const Matrix& rows) {
    check_width(model, rows, "reconstruct");
    return forward(model, rows).y;
}

Representation encode(const SaeModel& model, const Trial& trial) {
    return encode_rows(model, trial.signal);
}

Matrix reconstruct(const SaeModel& model, const Trial& trial) {
    return reconstruct_rows(model, trial.signal);
}

double reconstruction_loss(const SaeModel& model, const Trial& trial) {
    const Matrix y = reconstruct(model, trial);
    double ss = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) {
        const double d = y.data()[i] - trial.signal.data()[i];
        ss += d * d;
    }
    return ss / static_cast<double>(y.size());
}

SaeBackprop sae_loss_and_gradients(const SaeModel& model, const Matrix& rows) {
    check_width(model, rows, "sae_loss_and_gradients");
    const ForwardPass fp = forward(model, rows);

    const double inv_n = 1.0 / static_cast<double>(rows.size());
    double ss = 0.0;
    Matrix dy(rows.rows(), rows.cols());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const double d = fp.y.data()[i] - rows.data()[i];
        ss += d * d;
        dy.data()[i] = 2.0 * d * inv_n;
    }

    SaeBackprop bp;
    bp.loss = ss * inv_n;
    bp.grads.dec2_w = matmul(fp.h2.transposed(), dy);
    bp.grads.dec2_b = nn::column_sums(dy);
    Matrix dh2 = matmul(dy, model.dec2_w.transposed());
    nn::relu_backward_inplace(dh2, fp.h2);
    bp.grads.dec1_w = matmul(fp.z.transposed(), dh2);
    bp.grads.dec1_b = nn::column_sums(dh2);
    Matrix dz = matmul(dh2, model.dec1_w.transposed());
    nn::relu_backward_inplace(dz, fp.z);
    bp.grads.enc2_w = matmul(fp.h1.transposed(), dz);
    bp.grads.enc2_b = nn::column_sums(dz);
    Matrix dh1 = matmul(dz, model.enc2_w.transposed());
    nn::relu_backward_inplace(dh1, fp.h1);
    bp.grads.enc1_w = matmul(rows.transposed(), dh1);
    bp.grads.enc1_b = nn::column_sums(dh1);
    return bp;
}

namespace {

Matrix stack_channel_rows(const Dataset& dataset) {
    const std::size_t c = dataset.channels();
    const std::size_t t = dataset.time_points();
    Matrix rows(dataset.size() * c, t);
    std::size_t r = 0;
    for (const Trial& trial : dataset.trials) {
        for (std::size_t ch = 0; ch < c; ++ch, ++r) {
            const double* src = trial.signal.data() + ch * t;
            double* dst = rows.data() + r * t;
            for (std::size_t j = 0; j < t; ++j) dst[j] = src[j];
        }
    }
    return rows;
}

Matrix gather_rows(const Matrix& rows, const std::vector<std::size_t>& indices,
                   std::size_t begin, std::size_t end) {
    Matrix out(end - begin, rows.cols());
    for (std::size_t i = begin; i < end; ++i) {
        const double* src = rows.data() + indices[i] * rows.cols();
        double* dst = out.data() + (i - begin) * rows.cols();
        for (std::size_t j = 0; j < rows.cols(); ++j) dst[j] = src[j];
    }
    return out;
}

} // namespace

SaeTrainResult train_sae(const Dataset& dataset, const SaeTrainConfig& cfg, Rng& rng) {
    dataset.validate();
    if (cfg.epochs < 0) throw std::invalid_argument("train_sae: epochs must be >= 0");

    SaeTrainResult result;
    result.model = init_sae(dataset.time_points(), rng);
    const Matrix rows = stack_channel_rows(dataset);
    AdamW optimizer(cfg.optimizer);
    auto params = result.model.parameters();

    std::vector<std::size_t> order(rows.rows());
    std::iota(order.begin(), order.end(), std::size_t{0});

    for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
        double epoch_loss = 0.0;
        if (cfg.batch_size == 0 || cfg.batch_size >= rows.rows()) {
            const SaeBackprop bp = sae_loss_and_gradients(result.model, rows);
            optimizer.step(params, bp.grads.parameters());
            epoch_loss = bp.loss;
        } else {
            rng.shuffle(order);
            double weighted = 0.0;
            for (std::size_t begin = 0; begin < order.size(); begin += cfg.batch_size) {
                const std::size_t end = std::min(begin + cfg.batch_size, order.size());
                const Matrix batch = gather_rows(rows, order, begin, end);
                const SaeBackprop bp = sae_loss_and_gradients(result.model, batch);
                optimizer.step(params, bp.grads.parameters());
                weighted += bp.loss * static_cast<double>(end - begin);
            }
            epoch_loss = weighted / static_cast<double>(order.size());
        }
        if (!std::isfinite(epoch_loss)) {
            throw std::runtime_error("train_sae: training diverged at epoch " +
                                     std::to_string(epoch));
        }
        result.epoch_loss.push_back(epoch_loss);
    }
    return result;
}

namespace {

constexpr std::array<char, 4> kSaeMagic = {'S', 'A', 'E', 'W'};

void write_u16(std::ostream& out, std::uint16_t v) {
    for (int i = 0; i < 2; ++i) out.put(static_cast<char>(v >> (8 * i)));
}
void write_u32(std::ostream& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.put(static_cast<char>(v >> (8 * i)));
}
void write_f64(std::ostream& out, double v) {
    const std::uint64_t bits = std::bit_cast<std::uint64_t>(v);
    for (int i = 0; i < 8; ++i) out.put(static_cast<char>(bits >> (8 * i)));
}

std::uint16_t read_u16(std::istream& in) {
    std::uint16_t v = 0;
    for (int i = 0; i < 2; ++i) {
        const int c = in.get();
        if (c == std::char_traits<char>::eof()) throw std::runtime_error("sae checkpoint truncated");
        v |= static_cast<std::uint16_t>(static_cast<std::uint8_t>(c)) << (8 * i);
    }
    return v;
}
std::uint32_t read_u32(std::istream& in) {
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) {
        const int c = in.get();
        if (c == std::char_traits<char>::eof()) throw std::runtime_error("sae checkpoint truncated");
        v |= static_cast<std::uint32_t>(static_cast<std::uint8_t>(c)) << (8 * i);
    }
    return v;
}
double read_f64(std::istream& in) {
    std::uint64_t bits = 0;
    for (int i = 0; i < 8; ++i) {
        const int c = in.get();
        if (c == std::char_traits<char>::eof()) throw std::runtime_error("sae checkpoint truncated");
        bits |= static_cast<std::uint64_t>(static_cast<std::uint8_t>(c)) << (8 * i);
    }
    return std::bit_cast<double>(bits);
}

} // namespace

void save_sae(const SaeModel& model, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("save_sae: cannot open " + path.string());
    for (char m : kSaeMagic) out.put(m);
    write_u16(out, kSaeCheckpointVersion);
    write_u32(out, static_cast<std::uint32_t>(model.input_width()));
    write_u32(out, static_cast<std::uint32_t>(model.hidden_width()));
    write_u32(out, static_cast<std::uint32_t>(model.bottleneck_width()));
    for (const Matrix* p : model.parameters()) {
        for (std::size_t i = 0; i < p->size(); ++i) write_f64(out, p->data()[i]);
    }
    if (!out) throw std::runtime_error("save_sae: write failed for " + path.string());
}

SaeModel load_sae(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("load_sae: cannot open " + path.string());
    for (char m : kSaeMagic) {
        if (in.get() != m) throw std::runtime_error("load_sae: bad magic, not an SAEW file");
    }
    const std::uint16_t version = read_u16(in);
    if (version != kSaeCheckpointVersion) {
        throw std::runtime_error("unsupported sae checkpoint version " + std::to_string(version) +
                                 " (expected " + std::to_string(kSaeCheckpointVersion) + ")");
    }
    const std::uint32_t t_in = read_u32(in);
    const std::uint32_t hidden = read_u32(in);
    const std::uint32_t bottleneck = read_u32(in);
    if (t_in < 4 || hidden != t_in / 2 || bottleneck != t_in / 4) {
        throw std::runtime_error("load_sae: inconsistent layer widths in checkpoint");
    }

    SaeModel m;
    m.enc1_w = Matrix(t_in, hidden);
    m.enc1_b = Matrix(1, hidden);
    m.enc2_w = Matrix(hidden, bottleneck);
    m.enc2_b = Matrix(1, bottleneck);
    m.dec1_w = Matrix(bottleneck, hidden);
    m.dec1_b = Matrix(1, hidden);
    m.dec2_w = Matrix(hidden, t_in);
    m.dec2_b = Matrix(1, t_in);
    for (Matrix* p : m.parameters()) {
        for (std::size_t i = 0; i < p->size(); ++i) p->data()[i] = read_f64(in);
    }
    if (in.peek() != std::char_traits<char>::eof()) {
        throw std::runtime_error("load_sae: trailing bytes after parameters");
    }
    return m;
}

} // namespace sdom
