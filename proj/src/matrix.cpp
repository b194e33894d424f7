#include "sdom/matrix.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace sdom {

Matrix::Matrix(std::size_t rows, std::size_t cols)
    : rows_(rows), cols_(cols), data_(rows * cols, 0.0) {}

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> values)
    : rows_(rows), cols_(cols), data_(std::move(values)) {
    if (data_.size() != rows_ * cols_) {
        throw std::invalid_argument("matrix data length " + std::to_string(data_.size()) +
                                    " does not match shape " + shape_str());
    }
}

bool Matrix::all_finite() const noexcept {
    return std::all_of(data_.begin(), data_.end(),
                       [](double v) { return std::isfinite(v); });
}

std::string Matrix::shape_str() const {
    return std::to_string(rows_) + "x" + std::to_string(cols_);
}

void Matrix::fill(double value) { std::fill(data_.begin(), data_.end(), value); }

Matrix Matrix::transposed() const {
    Matrix out(cols_, rows_);
    for (std::size_t r = 0; r < rows_; ++r) {
        for (std::size_t c = 0; c < cols_; ++c) {
            out(c, r) = (*this)(r, c);
        }
    }
    return out;
}

Matrix& Matrix::operator+=(const Matrix& other) {
    if (!same_shape(other)) {
        throw std::invalid_argument("matrix add shape mismatch: " + shape_str() + " vs " +
                                    other.shape_str());
    }
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += other.data_[i];
    return *this;
}

Matrix& Matrix::operator-=(const Matrix& other) {
    if (!same_shape(other)) {
        throw std::invalid_argument("matrix sub shape mismatch: " + shape_str() + " vs " +
                                    other.shape_str());
    }
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] -= other.data_[i];
    return *this;
}

Matrix& Matrix::operator*=(double s) {
    for (double& v : data_) v *= s;
    return *this;
}

Matrix matmul(const Matrix& a, const Matrix& b) {
    if (a.cols() != b.rows()) {
        throw std::invalid_argument("matmul shape mismatch: " + a.shape_str() + " x " +
                                    b.shape_str());
    }
    Matrix out(a.rows(), b.cols());
    const std::size_t n = a.rows(), k = a.cols(), m = b.cols();
    // i-k-j order keeps both b and out rows contiguous in the inner loop
    for (std::size_t i = 0; i < n; ++i) {
        double* out_row = out.data() + i * m;
        for (std::size_t p = 0; p < k; ++p) {
            const double aip = a(i, p);
            if (aip == 0.0) continue;
            const double* b_row = b.data() + p * m;
            for (std::size_t j = 0; j < m; ++j) out_row[j] += aip * b_row[j];
        }
    }
    return out;
}

} // namespace sdom
