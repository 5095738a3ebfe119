#pragma once

#include <algorithm>
#include <cassert>
#include <cstddef>
#include <span>
#include <vector>

namespace mrverb {

/// Dense row-major matrix of doubles.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0) : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    std::size_t size() const { return data_.size(); }

    double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

    std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
    std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

    std::span<double> values() { return data_; }
    std::span<const double> values() const { return data_; }
    double* data() { return data_.data(); }
    const double* data() const { return data_.data(); }

    void fill(double v) { std::fill(data_.begin(), data_.end(), v); }

    friend bool operator==(const Matrix&, const Matrix&) = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

/// y += W x, with W stored as (out x in).
inline void gemv_acc(const Matrix& w, std::span<const double> x, std::span<double> y) {
    assert(w.cols() == x.size() && w.rows() == y.size());
    const std::size_t in = w.cols();
    for (std::size_t r = 0; r < w.rows(); ++r) {
        const double* wr = w.data() + r * in;
        double acc = 0.0;
        for (std::size_t c = 0; c < in; ++c) acc += wr[c] * x[c];
        y[r] += acc;
    }
}

/// x_grad += W^T y_grad and W_grad += y_grad x^T. An empty `x_grad` skips the input gradient.
inline void gemv_backward(const Matrix& w, std::span<const double> x, std::span<const double> y_grad,
                          std::span<double> x_grad, Matrix& w_grad) {
    const std::size_t in = w.cols();
    const bool want_x = !x_grad.empty();
    for (std::size_t r = 0; r < w.rows(); ++r) {
        const double g = y_grad[r];
        if (g == 0.0) continue;
        const double* wr = w.data() + r * in;
        double* gr = w_grad.data() + r * in;
        for (std::size_t c = 0; c < in; ++c) {
            gr[c] += g * x[c];
        }
        if (want_x)
            for (std::size_t c = 0; c < in; ++c) x_grad[c] += g * wr[c];
    }
}

}  // namespace mrverb
