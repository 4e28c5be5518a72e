#pragma once

#include <complex>
#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

#include "qsmpc/errors.hpp"

namespace qsmpc {

using Vec = std::vector<double>;

// ============================================================================
// Dense row-major matrix
// ============================================================================
// Small dense matrices only (state dimensions of a few, stacked horizons of a
// few dozen). Storage is row-major and contiguous.
class Mat {
  public:
    Mat() = default;
    Mat(std::size_t rows, std::size_t cols, double fill = 0.0);
    Mat(std::size_t rows, std::size_t cols, std::vector<double> entries);

    static Mat identity(std::size_t n);
    static Mat from_rows(std::initializer_list<std::initializer_list<double>> rows);
    static Mat from_rows(const std::vector<std::vector<double>>& rows);
    static Mat diagonal(std::span<const double> diag);

    [[nodiscard]] std::size_t rows() const noexcept { return rows_; }
    [[nodiscard]] std::size_t cols() const noexcept { return cols_; }
    [[nodiscard]] bool is_square() const noexcept { return rows_ == cols_; }
    [[nodiscard]] bool empty() const noexcept { return data_.empty(); }

    double& operator()(std::size_t r, std::size_t c) noexcept { return data_[r * cols_ + c]; }
    double operator()(std::size_t r, std::size_t c) const noexcept { return data_[r * cols_ + c]; }

    [[nodiscard]] std::span<const double> data() const noexcept { return data_; }
    [[nodiscard]] std::span<double> data() noexcept { return data_; }
    [[nodiscard]] std::span<const double> row(std::size_t r) const noexcept {
        return {data_.data() + r * cols_, cols_};
    }

    [[nodiscard]] Mat transpose() const;
    [[nodiscard]] Vec column(std::size_t c) const;
    [[nodiscard]] Mat block(std::size_t r0, std::size_t c0, std::size_t nr, std::size_t nc) const;
    void set_block(std::size_t r0, std::size_t c0, const Mat& src);

    [[nodiscard]] bool all_finite() const noexcept;
    [[nodiscard]] double max_abs() const noexcept;
    [[nodiscard]] double frobenius_norm() const noexcept;
    // Induced 1-norm (max column sum).
    [[nodiscard]] double norm1() const noexcept;

    Mat& operator+=(const Mat& o);
    Mat& operator-=(const Mat& o);
    Mat& operator*=(double s) noexcept;

    friend bool operator==(const Mat&, const Mat&) = default;

  private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

[[nodiscard]] Mat operator+(Mat a, const Mat& b);
[[nodiscard]] Mat operator-(Mat a, const Mat& b);
[[nodiscard]] Mat operator*(Mat a, double s);
[[nodiscard]] Mat operator*(double s, Mat a);
[[nodiscard]] Mat operator*(const Mat& a, const Mat& b);
[[nodiscard]] Vec operator*(const Mat& a, std::span<const double> x);
[[nodiscard]] inline Vec operator*(const Mat& a, const Vec& x) { return a * std::span<const double>(x); }

// Aᵀx without forming the transpose.
[[nodiscard]] Vec transpose_times(const Mat& a, std::span<const double> x);

// ============================================================================
// Vector helpers
// ============================================================================
[[nodiscard]] double dot(std::span<const double> a, std::span<const double> b);
[[nodiscard]] double norm2(std::span<const double> a);
[[nodiscard]] Vec add(std::span<const double> a, std::span<const double> b);
[[nodiscard]] Vec sub(std::span<const double> a, std::span<const double> b);
[[nodiscard]] Vec scaled(std::span<const double> a, double s);
// xᵀ S x
[[nodiscard]] double quad_form(const Mat& s, std::span<const double> x);
[[nodiscard]] bool all_finite(std::span<const double> v) noexcept;

// ============================================================================
// Decompositions and spectral tools
// ============================================================================

inline constexpr double kDefaultExpTol = 1e-12;

// e^M by scaling and squaring: M is scaled by 2^-s until its 1-norm is at most
// 1/2, the Taylor series is summed until the next term is below tol relative
// to the partial sum, and the result is squared s times.
[[nodiscard]] Mat mat_exp(const Mat& m, double tol = kDefaultExpTol);

// Upper-triangular W with WᵀW = S. Throws NotPositiveDefinite on a
// non-positive pivot.
[[nodiscard]] Mat cholesky(const Mat& s);

// All eigenvalues of a square matrix (Hessenberg reduction followed by the
// Francis double-shift QR iteration). Throws ConvergenceError when an
// eigenvalue fails to deflate within the iteration cap.
[[nodiscard]] std::vector<std::complex<double>> eigenvalues(const Mat& m);

[[nodiscard]] bool is_symmetric(const Mat& s, double tol = 1e-9) noexcept;

// True iff -S has a Cholesky factorization. Throws DimensionError if S is not
// symmetric within 1e-9.
[[nodiscard]] bool is_negative_definite(const Mat& s);
[[nodiscard]] bool is_positive_definite(const Mat& s);

// LU with partial pivoting; throws SingularMatrix when a pivot magnitude falls
// below 1e-12.
[[nodiscard]] Vec solve_linear(const Mat& a, std::span<const double> b);

// Largest eigenvalue of a symmetric positive semidefinite matrix by power
// iteration.
[[nodiscard]] double power_iteration_max_eig(const Mat& s, std::size_t max_iter = 1000, double rel_tol = 1e-12);

} // namespace qsmpc
