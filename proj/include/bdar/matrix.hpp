#pragma once

#include <cmath>
#include <cstddef>
#include <numeric>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

namespace bdar {

/**
 * @brief Small dense row-major matrix of doubles.
 *
 * Used for joint pmfs (d1 x d2 tables), 2x2 mechanism tables and the
 * modest-size Hessians produced during estimation. Indices are 0-based.
 */
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

    [[nodiscard]] std::size_t rows() const noexcept { return rows_; }
    [[nodiscard]] std::size_t cols() const noexcept { return cols_; }
    [[nodiscard]] std::size_t size() const noexcept { return data_.size(); }

    double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

    [[nodiscard]] std::span<const double> data() const noexcept { return data_; }
    [[nodiscard]] std::span<double> data() noexcept { return data_; }

    [[nodiscard]] double sum() const { return std::accumulate(data_.begin(), data_.end(), 0.0); }

    [[nodiscard]] std::vector<double> row_sums() const {
        std::vector<double> out(rows_, 0.0);
        for (std::size_t r = 0; r < rows_; ++r)
            for (std::size_t c = 0; c < cols_; ++c) out[r] += (*this)(r, c);
        return out;
    }

    [[nodiscard]] std::vector<double> col_sums() const {
        std::vector<double> out(cols_, 0.0);
        for (std::size_t r = 0; r < rows_; ++r)
            for (std::size_t c = 0; c < cols_; ++c) out[c] += (*this)(r, c);
        return out;
    }

    [[nodiscard]] double max_abs_diff(const Matrix& other) const {
        if (rows_ != other.rows_ || cols_ != other.cols_)
            throw std::invalid_argument("Matrix::max_abs_diff: shape mismatch");
        double m = 0.0;
        for (std::size_t k = 0; k < data_.size(); ++k)
            m = std::max(m, std::abs(data_[k] - other.data_[k]));
        return m;
    }

    friend bool operator==(const Matrix&, const Matrix&) = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

namespace linalg {

/// Cholesky factor L (lower) of a symmetric matrix; nullopt if not positive definite.
inline std::optional<Matrix> cholesky(const Matrix& a) {
    const std::size_t n = a.rows();
    Matrix l(n, n);
    for (std::size_t j = 0; j < n; ++j) {
        double diag = a(j, j);
        for (std::size_t k = 0; k < j; ++k) diag -= l(j, k) * l(j, k);
        if (!(diag > 0.0) || !std::isfinite(diag)) return std::nullopt;
        l(j, j) = std::sqrt(diag);
        for (std::size_t i = j + 1; i < n; ++i) {
            double s = a(i, j);
            for (std::size_t k = 0; k < j; ++k) s -= l(i, k) * l(j, k);
            l(i, j) = s / l(j, j);
        }
    }
    return l;
}

/// Inverse of a symmetric positive definite matrix; nullopt if not SPD.
inline std::optional<Matrix> spd_inverse(const Matrix& a) {
    auto factor = cholesky(a);
    if (!factor) return std::nullopt;
    const Matrix& l = *factor;
    const std::size_t n = a.rows();
    Matrix inv(n, n);
    std::vector<double> col(n), y(n);
    for (std::size_t c = 0; c < n; ++c) {
        std::fill(col.begin(), col.end(), 0.0);
        col[c] = 1.0;
        for (std::size_t i = 0; i < n; ++i) {
            double s = col[i];
            for (std::size_t k = 0; k < i; ++k) s -= l(i, k) * y[k];
            y[i] = s / l(i, i);
        }
        for (std::size_t ii = n; ii-- > 0;) {
            double s = y[ii];
            for (std::size_t k = ii + 1; k < n; ++k) s -= l(k, ii) * inv(k, c);
            inv(ii, c) = s / l(ii, ii);
        }
    }
    return inv;
}

}  // namespace linalg
}  // namespace bdar
