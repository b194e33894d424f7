#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace sdom {

// Dense row-major matrix of doubles. Arithmetic helpers allocate fresh
// results and never modify their inputs; the compound operators are the
// documented in-place exceptions.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols);
    Matrix(std::size_t rows, std::size_t cols, std::vector<double> values);

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    std::size_t size() const noexcept { return data_.size(); }

    double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

    double* data() noexcept { return data_.data(); }
    const double* data() const noexcept { return data_.data(); }

    std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
    std::span<const double> row(std::size_t r) const {
        return {data_.data() + r * cols_, cols_};
    }

    bool same_shape(const Matrix& other) const noexcept {
        return rows_ == other.rows_ && cols_ == other.cols_;
    }
    bool all_finite() const noexcept;
    std::string shape_str() const;

    void fill(double value);
    Matrix transposed() const;

    Matrix& operator+=(const Matrix& other);
    Matrix& operator-=(const Matrix& other);
    Matrix& operator*=(double s);

    friend bool operator==(const Matrix& a, const Matrix& b) {
        return a.rows_ == b.rows_ && a.cols_ == b.cols_ && a.data_ == b.data_;
    }

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

Matrix matmul(const Matrix& a, const Matrix& b);

} // namespace sdom
