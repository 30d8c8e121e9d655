#ifndef PASSAUTH_LINALG_HPP
#define PASSAUTH_LINALG_HPP

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "passauth/errors.hpp"

namespace passauth {

using Vector = std::vector<double>;

// Dense row-major matrix of doubles. Small sizes only (widths <= a few dozen),
// so no BLAS backing.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }

    double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

    std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
    std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

    std::vector<double>& data() { return data_; }
    const std::vector<double>& data() const { return data_; }

    bool same_shape(const Matrix& other) const {
        return rows_ == other.rows_ && cols_ == other.cols_;
    }

    friend bool operator==(const Matrix& a, const Matrix& b) {
        return a.rows_ == b.rows_ && a.cols_ == b.cols_ && a.data_ == b.data_;
    }

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

// out += M * x
inline void matvec_add(const Matrix& m, std::span<const double> x, std::span<double> out) {
    if (x.size() != m.cols() || out.size() != m.rows())
        throw ShapeError("matvec_add: shape mismatch");
    for (std::size_t r = 0; r < m.rows(); ++r) {
        double acc = 0.0;
        const auto row = m.row(r);
        for (std::size_t c = 0; c < m.cols(); ++c) acc += row[c] * x[c];
        out[r] += acc;
    }
}

// out += M^T * x
inline void matvec_transpose_add(const Matrix& m, std::span<const double> x,
                                 std::span<double> out) {
    if (x.size() != m.rows() || out.size() != m.cols())
        throw ShapeError("matvec_transpose_add: shape mismatch");
    for (std::size_t r = 0; r < m.rows(); ++r) {
        const auto row = m.row(r);
        const double xr = x[r];
        for (std::size_t c = 0; c < m.cols(); ++c) out[c] += row[c] * xr;
    }
}

// M += a * b^T
inline void outer_add(Matrix& m, std::span<const double> a, std::span<const double> b) {
    if (a.size() != m.rows() || b.size() != m.cols())
        throw ShapeError("outer_add: shape mismatch");
    for (std::size_t r = 0; r < m.rows(); ++r) {
        auto row = m.row(r);
        const double ar = a[r];
        for (std::size_t c = 0; c < m.cols(); ++c) row[c] += ar * b[c];
    }
}

inline double euclidean_norm(std::span<const double> v) {
    double acc = 0.0;
    for (double x : v) acc += x * x;
    return std::sqrt(acc);
}

inline bool all_finite(std::span<const double> v) {
    for (double x : v)
        if (!std::isfinite(x)) return false;
    return true;
}

}  // namespace passauth

#endif
