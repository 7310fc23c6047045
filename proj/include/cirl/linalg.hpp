#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <span>
#include <stdexcept>
#include <vector>

namespace cirl {

/// Dense row-major matrix of doubles.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

    Matrix(std::initializer_list<std::initializer_list<double>> init) {
        rows_ = init.size();
        cols_ = rows_ ? init.begin()->size() : 0;
        data_.reserve(rows_ * cols_);
        for (const auto& row : init) {
            if (row.size() != cols_)
                throw std::invalid_argument("Matrix: ragged initializer");
            data_.insert(data_.end(), row.begin(), row.end());
        }
    }

    static Matrix identity(std::size_t n) {
        Matrix m(n, n);
        for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
        return m;
    }

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    std::size_t size() const noexcept { return data_.size(); }

    double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
    double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

    std::span<double> row(std::size_t i) { return {data_.data() + i * cols_, cols_}; }
    std::span<const double> row(std::size_t i) const { return {data_.data() + i * cols_, cols_}; }

    std::span<double> flat() noexcept { return data_; }
    std::span<const double> flat() const noexcept { return data_; }

    /// Reshape without preserving contents; reuses storage when possible.
    void resize(std::size_t rows, std::size_t cols) {
        rows_ = rows;
        cols_ = cols;
        data_.assign(rows * cols, 0.0);
    }

    double max_abs() const {
        double m = 0.0;
        for (double x : data_) m = std::max(m, std::abs(x));
        return m;
    }

    friend bool operator==(const Matrix&, const Matrix&) = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

inline double sup_distance(const Matrix& a, const Matrix& b) {
    if (a.rows() != b.rows() || a.cols() != b.cols())
        throw std::invalid_argument("sup_distance: shape mismatch");
    double m = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k)
        m = std::max(m, std::abs(a.flat()[k] - b.flat()[k]));
    return m;
}

inline double sup_distance(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) throw std::invalid_argument("sup_distance: length mismatch");
    double m = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) m = std::max(m, std::abs(a[k] - b[k]));
    return m;
}

/**
 * LU factorization with partial pivoting, PA = LU.
 *
 * Storage is kept between calls to factor() so that repeated
 * factorizations of same-sized systems do not allocate.
 */
class LuFactorization {
public:
    LuFactorization() = default;
    explicit LuFactorization(const Matrix& a) { factor(a); }

    void factor(const Matrix& a) {
        if (a.rows() != a.cols()) throw std::invalid_argument("LU: matrix not square");
        n_ = a.rows();
        lu_.assign(a.flat().begin(), a.flat().end());
        factor_in_place();
    }

    /// Factor an n×n row-major buffer given as a span.
    void factor(std::span<const double> a, std::size_t n) {
        if (a.size() != n * n) throw std::invalid_argument("LU: buffer size mismatch");
        n_ = n;
        lu_.assign(a.begin(), a.end());
        factor_in_place();
    }

    std::size_t dimension() const noexcept { return n_; }
    bool singular() const noexcept { return singular_; }

    double determinant() const {
        if (singular_) return 0.0;
        double det = sign_;
        for (std::size_t i = 0; i < n_; ++i) det *= lu_[i * n_ + i];
        return det;
    }

    /// Solves A x = b in place.
    void solve_in_place(std::span<double> b) const {
        check_solvable(b.size());
        for (std::size_t i = 0; i < n_; ++i) {
            if (perm_[i] != i) std::swap(b[i], b[perm_[i]]);
        }
        for (std::size_t i = 1; i < n_; ++i) {
            double s = b[i];
            const double* row = &lu_[i * n_];
            for (std::size_t j = 0; j < i; ++j) s -= row[j] * b[j];
            b[i] = s;
        }
        for (std::size_t i = n_; i-- > 0;) {
            double s = b[i];
            const double* row = &lu_[i * n_];
            for (std::size_t j = i + 1; j < n_; ++j) s -= row[j] * b[j];
            b[i] = s / row[i];
        }
    }

    /// Solves Aᵀ x = b in place.
    void solve_transposed_in_place(std::span<double> b) const {
        check_solvable(b.size());
        // Aᵀ = Uᵀ Lᵀ P, so solve Uᵀ z = b, then Lᵀ w = z, then x = Pᵀ w.
        for (std::size_t i = 0; i < n_; ++i) {
            double s = b[i];
            for (std::size_t j = 0; j < i; ++j) s -= lu_[j * n_ + i] * b[j];
            b[i] = s / lu_[i * n_ + i];
        }
        for (std::size_t i = n_; i-- > 0;) {
            double s = b[i];
            for (std::size_t j = i + 1; j < n_; ++j) s -= lu_[j * n_ + i] * b[j];
            b[i] = s;
        }
        for (std::size_t i = n_; i-- > 0;) {
            if (perm_[i] != i) std::swap(b[i], b[perm_[i]]);
        }
    }

    std::vector<double> solve(std::span<const double> b) const {
        std::vector<double> x(b.begin(), b.end());
        solve_in_place(x);
        return x;
    }

private:
    void factor_in_place() {
        perm_.resize(n_);
        sign_ = 1.0;
        singular_ = false;
        for (std::size_t k = 0; k < n_; ++k) {
            std::size_t piv = k;
            double best = std::abs(lu_[k * n_ + k]);
            for (std::size_t i = k + 1; i < n_; ++i) {
                const double v = std::abs(lu_[i * n_ + k]);
                if (v > best) {
                    best = v;
                    piv = i;
                }
            }
            perm_[k] = piv;
            if (best == 0.0) {
                singular_ = true;
                continue;
            }
            if (piv != k) {
                std::swap_ranges(lu_.begin() + static_cast<std::ptrdiff_t>(k * n_),
                                 lu_.begin() + static_cast<std::ptrdiff_t>((k + 1) * n_),
                                 lu_.begin() + static_cast<std::ptrdiff_t>(piv * n_));
                sign_ = -sign_;
            }
            const double pivot = lu_[k * n_ + k];
            for (std::size_t i = k + 1; i < n_; ++i) {
                double& lik = lu_[i * n_ + k];
                if (lik == 0.0) continue;
                lik /= pivot;
                const double f = lik;
                double* ri = &lu_[i * n_];
                const double* rk = &lu_[k * n_];
                for (std::size_t j = k + 1; j < n_; ++j) ri[j] -= f * rk[j];
            }
        }
    }

    void check_solvable(std::size_t len) const {
        if (len != n_) throw std::invalid_argument("LU: rhs length mismatch");
        if (singular_) throw std::runtime_error("LU: singular matrix");
    }

    std::size_t n_ = 0;
    std::vector<double> lu_;
    std::vector<std::size_t> perm_;
    double sign_ = 1.0;
    bool singular_ = false;
};

}  // namespace cirl
