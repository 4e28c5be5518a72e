#pragma once

// Shared helpers for the unit and acceptance tests. The linear algebra here
// is deliberately independent of the library (one-sided Jacobi SVD, plain
// triple loops) so it can serve as an oracle.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <random>
#include <vector>

#include "qsmpc/config.hpp"

namespace qsmpc::testing {

inline double uniform(std::mt19937_64& rng, double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(rng);
}

inline Mat random_mat(std::mt19937_64& rng, std::size_t r, std::size_t c, double lo = -1.0, double hi = 1.0) {
    Mat m(r, c);
    for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < c; ++j)
            m(i, j) = uniform(rng, lo, hi);
    return m;
}

inline Vec random_vec(std::mt19937_64& rng, std::size_t n, double lo = -1.0, double hi = 1.0) {
    Vec v(n);
    for (double& x : v)
        x = uniform(rng, lo, hi);
    return v;
}

inline Ternary random_ternary(std::mt19937_64& rng, std::size_t n) {
    std::uniform_int_distribution<int> d(-1, 1);
    Ternary u(n);
    for (int& v : u)
        v = d(rng);
    return u;
}

// GᵀG + shift·I, comfortably positive definite.
inline Mat random_spd(std::mt19937_64& rng, std::size_t n, double shift = 0.1) {
    const Mat g = random_mat(rng, n, n);
    Mat s(n, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            double acc = i == j ? shift : 0.0;
            for (std::size_t k = 0; k < n; ++k)
                acc += g(k, i) * g(k, j);
            s(i, j) = acc;
        }
    return s;
}

inline Mat naive_mul(const Mat& a, const Mat& b) {
    Mat c(a.rows(), b.cols());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < b.cols(); ++j) {
            double acc = 0.0;
            for (std::size_t k = 0; k < a.cols(); ++k)
                acc += a(i, k) * b(k, j);
            c(i, j) = acc;
        }
    return c;
}

inline double max_abs_diff(const Mat& a, const Mat& b) {
    double d = 0.0;
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j)
            d = std::max(d, std::abs(a(i, j) - b(i, j)));
    return d;
}

inline double max_abs_diff(std::span<const double> a, std::span<const double> b) {
    double d = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i)
        d = std::max(d, std::abs(a[i] - b[i]));
    return d;
}

// Singular values by one-sided Jacobi rotations on the columns.
inline std::vector<double> singular_values(Mat a) {
    const std::size_t m = a.rows();
    const std::size_t n = a.cols();
    for (int sweep = 0; sweep < 100; ++sweep) {
        double off = 0.0;
        for (std::size_t p = 0; p + 1 < n; ++p)
            for (std::size_t q = p + 1; q < n; ++q) {
                double alpha = 0.0, beta = 0.0, gamma = 0.0;
                for (std::size_t i = 0; i < m; ++i) {
                    alpha += a(i, p) * a(i, p);
                    beta += a(i, q) * a(i, q);
                    gamma += a(i, p) * a(i, q);
                }
                if (gamma == 0.0)
                    continue;
                off = std::max(off, std::abs(gamma) / std::sqrt(alpha * beta));
                const double zeta = (beta - alpha) / (2.0 * gamma);
                const double t = std::copysign(1.0, zeta) / (std::abs(zeta) + std::sqrt(1.0 + zeta * zeta));
                const double c = 1.0 / std::sqrt(1.0 + t * t);
                const double s = c * t;
                for (std::size_t i = 0; i < m; ++i) {
                    const double ap = a(i, p);
                    const double aq = a(i, q);
                    a(i, p) = c * ap - s * aq;
                    a(i, q) = s * ap + c * aq;
                }
            }
        if (off < 1e-15)
            break;
    }
    std::vector<double> sv(n);
    for (std::size_t j = 0; j < n; ++j) {
        double acc = 0.0;
        for (std::size_t i = 0; i < m; ++i)
            acc += a(i, j) * a(i, j);
        sv[j] = std::sqrt(acc);
    }
    std::sort(sv.begin(), sv.end());
    return sv;
}

// Smallest singular value of M - λI, using the real 2n x 2n embedding
// [[Re, -Im], [Im, Re]] for complex λ.
inline double min_singular_shifted(const Mat& mat, std::complex<double> lambda) {
    const std::size_t n = mat.rows();
    Mat e(2 * n, 2 * n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            const double re = mat(i, j) - (i == j ? lambda.real() : 0.0);
            const double im = i == j ? -lambda.imag() : 0.0;
            e(i, j) = re;
            e(i + n, j + n) = re;
            e(i, j + n) = -im;
            e(i + n, j) = im;
        }
    return singular_values(e).front();
}

// Random problem with a Schur-stable A_q (spectral radius below 0.95) and
// random SPD weights. The reference uses H = 0 unless a problem needs it.
inline MpcProblem random_problem(std::mt19937_64& rng, std::size_t n, std::size_t m, std::size_t N) {
    Mat A = random_mat(rng, n, n);
    double rho = 0.0;
    for (const auto& ev : eigenvalues(A))
        rho = std::max(rho, std::abs(ev));
    if (rho > 0.0)
        A *= uniform(rng, 0.2, 0.95) / rho;
    const double h = uniform(rng, 0.1, 0.5);
    Mat B = random_mat(rng, n, m);
    Mat H = random_mat(rng, n, n, -0.5, 0.5) - Mat::identity(n);
    return MpcProblem{QuantizedPlant(std::move(A), std::move(B), h), LtiReference(std::move(H), h),
                      random_spd(rng, n), random_spd(rng, n), random_spd(rng, m), N};
}

inline IlsInstance random_instance(std::mt19937_64& rng, const MpcProblem& prob) {
    const ExtensiveForm ext = build_extensive(prob);
    const Vec x = random_vec(rng, prob.n(), -2.0, 2.0);
    const Vec xr = random_vec(rng, prob.n(), -2.0, 2.0);
    return ils_transform(ext, x, reference_horizon(prob.ref, xr, prob.N));
}

} // namespace qsmpc::testing
