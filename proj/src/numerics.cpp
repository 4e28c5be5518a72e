#include "qsmpc/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>

namespace qsmpc {

namespace {

void require_square(const Mat& m, const char* what) {
    if (!m.is_square())
        throw DimensionError(std::string(what) + ": matrix is " + std::to_string(m.rows()) + "x" +
                             std::to_string(m.cols()) + ", expected square");
}

void require_finite(const Mat& m, const char* what) {
    if (!m.all_finite())
        throw NonFiniteValue(std::string(what) + ": non-finite matrix entry");
}

void require_same_shape(const Mat& a, const Mat& b, const char* what) {
    if (a.rows() != b.rows() || a.cols() != b.cols())
        throw DimensionError(std::string(what) + ": shape mismatch");
}

} // namespace

// ============================================================================
// Mat
// ============================================================================

Mat::Mat(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

Mat::Mat(std::size_t rows, std::size_t cols, std::vector<double> entries)
    : rows_(rows), cols_(cols), data_(std::move(entries)) {
    if (data_.size() != rows_ * cols_)
        throw DimensionError("Mat: " + std::to_string(data_.size()) + " entries for a " +
                             std::to_string(rows_) + "x" + std::to_string(cols_) + " matrix");
}

Mat Mat::identity(std::size_t n) {
    Mat m(n, n);
    for (std::size_t i = 0; i < n; ++i)
        m(i, i) = 1.0;
    return m;
}

Mat Mat::from_rows(std::initializer_list<std::initializer_list<double>> rows) {
    std::vector<std::vector<double>> nested;
    nested.reserve(rows.size());
    for (const auto& r : rows)
        nested.emplace_back(r);
    return from_rows(nested);
}

Mat Mat::from_rows(const std::vector<std::vector<double>>& rows) {
    if (rows.empty())
        return {};
    const std::size_t nc = rows.front().size();
    std::vector<double> flat;
    flat.reserve(rows.size() * nc);
    for (const auto& r : rows) {
        if (r.size() != nc)
            throw DimensionError("Mat::from_rows: ragged rows");
        flat.insert(flat.end(), r.begin(), r.end());
    }
    return Mat(rows.size(), nc, std::move(flat));
}

Mat Mat::diagonal(std::span<const double> diag) {
    Mat m(diag.size(), diag.size());
    for (std::size_t i = 0; i < diag.size(); ++i)
        m(i, i) = diag[i];
    return m;
}

Mat Mat::transpose() const {
    Mat t(cols_, rows_);
    for (std::size_t r = 0; r < rows_; ++r)
        for (std::size_t c = 0; c < cols_; ++c)
            t(c, r) = (*this)(r, c);
    return t;
}

Vec Mat::column(std::size_t c) const {
    Vec v(rows_);
    for (std::size_t r = 0; r < rows_; ++r)
        v[r] = (*this)(r, c);
    return v;
}

Mat Mat::block(std::size_t r0, std::size_t c0, std::size_t nr, std::size_t nc) const {
    if (r0 + nr > rows_ || c0 + nc > cols_)
        throw DimensionError("Mat::block: out of range");
    Mat b(nr, nc);
    for (std::size_t r = 0; r < nr; ++r)
        for (std::size_t c = 0; c < nc; ++c)
            b(r, c) = (*this)(r0 + r, c0 + c);
    return b;
}

void Mat::set_block(std::size_t r0, std::size_t c0, const Mat& src) {
    if (r0 + src.rows() > rows_ || c0 + src.cols() > cols_)
        throw DimensionError("Mat::set_block: out of range");
    for (std::size_t r = 0; r < src.rows(); ++r)
        for (std::size_t c = 0; c < src.cols(); ++c)
            (*this)(r0 + r, c0 + c) = src(r, c);
}

bool Mat::all_finite() const noexcept { return qsmpc::all_finite(data_); }

double Mat::max_abs() const noexcept {
    double m = 0.0;
    for (double v : data_)
        m = std::max(m, std::abs(v));
    return m;
}

double Mat::frobenius_norm() const noexcept { return norm2(data_); }

double Mat::norm1() const noexcept {
    double best = 0.0;
    for (std::size_t c = 0; c < cols_; ++c) {
        double s = 0.0;
        for (std::size_t r = 0; r < rows_; ++r)
            s += std::abs((*this)(r, c));
        best = std::max(best, s);
    }
    return best;
}

Mat& Mat::operator+=(const Mat& o) {
    require_same_shape(*this, o, "Mat::operator+=");
    for (std::size_t i = 0; i < data_.size(); ++i)
        data_[i] += o.data_[i];
    return *this;
}

Mat& Mat::operator-=(const Mat& o) {
    require_same_shape(*this, o, "Mat::operator-=");
    for (std::size_t i = 0; i < data_.size(); ++i)
        data_[i] -= o.data_[i];
    return *this;
}

Mat& Mat::operator*=(double s) noexcept {
    for (double& v : data_)
        v *= s;
    return *this;
}

Mat operator+(Mat a, const Mat& b) { return a += b; }
Mat operator-(Mat a, const Mat& b) { return a -= b; }
Mat operator*(Mat a, double s) { return a *= s; }
Mat operator*(double s, Mat a) { return a *= s; }

Mat operator*(const Mat& a, const Mat& b) {
    if (a.cols() != b.rows())
        throw DimensionError("Mat product: inner dimensions " + std::to_string(a.cols()) + " and " +
                             std::to_string(b.rows()));
    Mat c(a.rows(), b.cols());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t k = 0; k < a.cols(); ++k) {
            const double aik = a(i, k);
            if (aik == 0.0)
                continue;
            for (std::size_t j = 0; j < b.cols(); ++j)
                c(i, j) += aik * b(k, j);
        }
    return c;
}

Vec operator*(const Mat& a, std::span<const double> x) {
    if (a.cols() != x.size())
        throw DimensionError("Mat-vector product: " + std::to_string(a.cols()) + " columns, vector of " +
                             std::to_string(x.size()));
    Vec y(a.rows(), 0.0);
    for (std::size_t i = 0; i < a.rows(); ++i)
        y[i] = dot(a.row(i), x);
    return y;
}

Vec transpose_times(const Mat& a, std::span<const double> x) {
    if (a.rows() != x.size())
        throw DimensionError("transpose_times: dimension mismatch");
    Vec y(a.cols(), 0.0);
    for (std::size_t i = 0; i < a.rows(); ++i) {
        const double xi = x[i];
        for (std::size_t j = 0; j < a.cols(); ++j)
            y[j] += a(i, j) * xi;
    }
    return y;
}

// ============================================================================
// Vector helpers
// ============================================================================

double dot(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size())
        throw DimensionError("dot: length mismatch");
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i)
        s += a[i] * b[i];
    return s;
}

double norm2(std::span<const double> a) {
    double s = 0.0;
    for (double v : a)
        s += v * v;
    return std::sqrt(s);
}

Vec add(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size())
        throw DimensionError("add: length mismatch");
    Vec r(a.size());
    for (std::size_t i = 0; i < a.size(); ++i)
        r[i] = a[i] + b[i];
    return r;
}

Vec sub(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size())
        throw DimensionError("sub: length mismatch");
    Vec r(a.size());
    for (std::size_t i = 0; i < a.size(); ++i)
        r[i] = a[i] - b[i];
    return r;
}

Vec scaled(std::span<const double> a, double s) {
    Vec r(a.begin(), a.end());
    for (double& v : r)
        v *= s;
    return r;
}

double quad_form(const Mat& s, std::span<const double> x) {
    if (!s.is_square() || s.rows() != x.size())
        throw DimensionError("quad_form: dimension mismatch");
    double acc = 0.0;
    for (std::size_t i = 0; i < s.rows(); ++i)
        acc += x[i] * dot(s.row(i), x);
    return acc;
}

bool all_finite(std::span<const double> v) noexcept {
    return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

// ============================================================================
// Matrix exponential
// ============================================================================

Mat mat_exp(const Mat& m, double tol) {
    require_square(m, "mat_exp");
    require_finite(m, "mat_exp");
    if (!(tol > 0.0))
        throw Error("mat_exp: tolerance must be positive");

    const std::size_t n = m.rows();
    const double norm = m.norm1();
    int squarings = 0;
    if (norm > 0.5)
        squarings = static_cast<int>(std::ceil(std::log2(norm / 0.5)));
    const Mat a = m * std::ldexp(1.0, -squarings);

    Mat sum = Mat::identity(n);
    Mat term = Mat::identity(n);
    for (int k = 1; k < 64; ++k) {
        term = term * a;
        term *= 1.0 / k;
        sum += term;
        if (term.max_abs() <= tol * std::max(sum.max_abs(), 1e-300))
            break;
    }
    for (int i = 0; i < squarings; ++i)
        sum = sum * sum;
    return sum;
}

// ============================================================================
// Cholesky
// ============================================================================

Mat cholesky(const Mat& s) {
    require_square(s, "cholesky");
    require_finite(s, "cholesky");
    const std::size_t n = s.rows();
    Mat w(n, n);
    for (std::size_t j = 0; j < n; ++j) {
        double pivot = s(j, j);
        for (std::size_t k = 0; k < j; ++k)
            pivot -= w(k, j) * w(k, j);
        if (!(pivot > 0.0))
            throw NotPositiveDefinite("cholesky: pivot " + std::to_string(j) + " is " + std::to_string(pivot));
        const double d = std::sqrt(pivot);
        w(j, j) = d;
        for (std::size_t c = j + 1; c < n; ++c) {
            double v = s(j, c);
            for (std::size_t k = 0; k < j; ++k)
                v -= w(k, j) * w(k, c);
            w(j, c) = v / d;
        }
    }
    return w;
}

bool is_symmetric(const Mat& s, double tol) noexcept {
    if (!s.is_square())
        return false;
    const double scale = std::max(1.0, s.max_abs());
    for (std::size_t i = 0; i < s.rows(); ++i)
        for (std::size_t j = i + 1; j < s.cols(); ++j)
            if (std::abs(s(i, j) - s(j, i)) > tol * scale)
                return false;
    return true;
}

bool is_positive_definite(const Mat& s) {
    if (!is_symmetric(s))
        throw DimensionError("is_positive_definite: matrix is not symmetric");
    try {
        (void)cholesky(s);
        return true;
    } catch (const NotPositiveDefinite&) {
        return false;
    }
}

bool is_negative_definite(const Mat& s) {
    if (!is_symmetric(s))
        throw DimensionError("is_negative_definite: matrix is not symmetric");
    return is_positive_definite(-1.0 * s);
}

// ============================================================================
// Linear solve
// ============================================================================

Vec solve_linear(const Mat& a, std::span<const double> b) {
    require_square(a, "solve_linear");
    if (a.rows() != b.size())
        throw DimensionError("solve_linear: right-hand side length mismatch");
    const std::size_t n = a.rows();
    Mat lu = a;
    Vec x(b.begin(), b.end());
    for (std::size_t k = 0; k < n; ++k) {
        std::size_t piv = k;
        for (std::size_t i = k + 1; i < n; ++i)
            if (std::abs(lu(i, k)) > std::abs(lu(piv, k)))
                piv = i;
        if (std::abs(lu(piv, k)) < 1e-12)
            throw SingularMatrix("solve_linear: pivot below 1e-12 at column " + std::to_string(k));
        if (piv != k) {
            for (std::size_t j = 0; j < n; ++j)
                std::swap(lu(k, j), lu(piv, j));
            std::swap(x[k], x[piv]);
        }
        for (std::size_t i = k + 1; i < n; ++i) {
            const double f = lu(i, k) / lu(k, k);
            if (f == 0.0)
                continue;
            for (std::size_t j = k + 1; j < n; ++j)
                lu(i, j) -= f * lu(k, j);
            x[i] -= f * x[k];
        }
    }
    for (std::size_t i = n; i-- > 0;) {
        double v = x[i];
        for (std::size_t j = i + 1; j < n; ++j)
            v -= lu(i, j) * x[j];
        x[i] = v / lu(i, i);
    }
    return x;
}

// ============================================================================
// Eigenvalues
// ============================================================================
// Both routines work on a 1-based (n+1)x(n+1) scratch array so the index
// arithmetic follows the classical EISPACK-style formulation.

namespace {

class Scratch {
  public:
    explicit Scratch(const Mat& m) : n_(m.rows()), a_((n_ + 1) * (n_ + 1), 0.0) {
        for (std::size_t i = 0; i < n_; ++i)
            for (std::size_t j = 0; j < n_; ++j)
                at(static_cast<int>(i + 1), static_cast<int>(j + 1)) = m(i, j);
    }
    double& at(int i, int j) { return a_[static_cast<std::size_t>(i) * (n_ + 1) + static_cast<std::size_t>(j)]; }
    [[nodiscard]] int n() const { return static_cast<int>(n_); }

  private:
    std::size_t n_;
    std::vector<double> a_;
};

// Reduction to upper Hessenberg form by stabilized elementary similarity
// transforms.
void reduce_hessenberg(Scratch& s) {
    const int n = s.n();
    for (int m = 2; m < n; ++m) {
        double x = 0.0;
        int i = m;
        for (int j = m; j <= n; ++j) {
            if (std::abs(s.at(j, m - 1)) > std::abs(x)) {
                x = s.at(j, m - 1);
                i = j;
            }
        }
        if (i != m) {
            for (int j = m - 1; j <= n; ++j)
                std::swap(s.at(i, j), s.at(m, j));
            for (int j = 1; j <= n; ++j)
                std::swap(s.at(j, i), s.at(j, m));
        }
        if (x != 0.0) {
            for (i = m + 1; i <= n; ++i) {
                double y = s.at(i, m - 1);
                if (y != 0.0) {
                    y /= x;
                    s.at(i, m - 1) = y;
                    for (int j = m; j <= n; ++j)
                        s.at(i, j) -= y * s.at(m, j);
                    for (int j = 1; j <= n; ++j)
                        s.at(j, m) += y * s.at(j, i);
                }
            }
        }
    }
    for (int i = 3; i <= n; ++i)
        for (int j = 1; j <= i - 2; ++j)
            s.at(i, j) = 0.0;
}

double sign_of(double a, double b) { return b >= 0.0 ? std::abs(a) : -std::abs(a); }

void hessenberg_qr(Scratch& s, std::vector<std::complex<double>>& out) {
    constexpr int kMaxIterPerEigenvalue = 60;
    const int n = s.n();
    std::vector<double> wr(n + 1, 0.0), wi(n + 1, 0.0);

    double anorm = 0.0;
    for (int i = 1; i <= n; ++i)
        for (int j = std::max(i - 1, 1); j <= n; ++j)
            anorm += std::abs(s.at(i, j));

    int nn = n;
    double t = 0.0;
    double p = 0.0, q = 0.0, r = 0.0, x = 0.0, y = 0.0, z = 0.0, w = 0.0;
    while (nn >= 1) {
        int its = 0;
        int l = 0;
        do {
            for (l = nn; l >= 2; --l) {
                double sc = std::abs(s.at(l - 1, l - 1)) + std::abs(s.at(l, l));
                if (sc == 0.0)
                    sc = anorm;
                if (std::abs(s.at(l, l - 1)) + sc == sc) {
                    s.at(l, l - 1) = 0.0;
                    break;
                }
            }
            x = s.at(nn, nn);
            if (l == nn) {
                wr[nn] = x + t;
                wi[nn] = 0.0;
                --nn;
            } else {
                y = s.at(nn - 1, nn - 1);
                w = s.at(nn, nn - 1) * s.at(nn - 1, nn);
                if (l == nn - 1) {
                    p = 0.5 * (y - x);
                    q = p * p + w;
                    z = std::sqrt(std::abs(q));
                    x += t;
                    if (q >= 0.0) {
                        z = p + sign_of(z, p);
                        wr[nn - 1] = wr[nn] = x + z;
                        if (z != 0.0)
                            wr[nn] = x - w / z;
                        wi[nn - 1] = wi[nn] = 0.0;
                    } else {
                        wr[nn - 1] = wr[nn] = x + p;
                        wi[nn] = z;
                        wi[nn - 1] = -z;
                    }
                    nn -= 2;
                } else {
                    if (its == kMaxIterPerEigenvalue)
                        throw ConvergenceError("eigenvalues: QR iteration did not converge");
                    if (its % 10 == 0 && its > 0) {
                        // Exceptional shift.
                        t += x;
                        for (int i = 1; i <= nn; ++i)
                            s.at(i, i) -= x;
                        const double sc = std::abs(s.at(nn, nn - 1)) + std::abs(s.at(nn - 1, nn - 2));
                        y = x = 0.75 * sc;
                        w = -0.4375 * sc * sc;
                    }
                    ++its;
                    int m = nn - 2;
                    for (; m >= l; --m) {
                        z = s.at(m, m);
                        r = x - z;
                        double sc = y - z;
                        p = (r * sc - w) / s.at(m + 1, m) + s.at(m, m + 1);
                        q = s.at(m + 1, m + 1) - z - r - sc;
                        r = s.at(m + 2, m + 1);
                        sc = std::abs(p) + std::abs(q) + std::abs(r);
                        p /= sc;
                        q /= sc;
                        r /= sc;
                        if (m == l)
                            break;
                        const double u = std::abs(s.at(m, m - 1)) * (std::abs(q) + std::abs(r));
                        const double v =
                            std::abs(p) * (std::abs(s.at(m - 1, m - 1)) + std::abs(z) + std::abs(s.at(m + 1, m + 1)));
                        if (u + v == v)
                            break;
                    }
                    for (int i = m + 2; i <= nn; ++i) {
                        s.at(i, i - 2) = 0.0;
                        if (i != m + 2)
                            s.at(i, i - 3) = 0.0;
                    }
                    for (int k = m; k <= nn - 1; ++k) {
                        if (k != m) {
                            p = s.at(k, k - 1);
                            q = s.at(k + 1, k - 1);
                            r = 0.0;
                            if (k != nn - 1)
                                r = s.at(k + 2, k - 1);
                            if ((x = std::abs(p) + std::abs(q) + std::abs(r)) != 0.0) {
                                p /= x;
                                q /= x;
                                r /= x;
                            }
                        }
                        const double sc = sign_of(std::sqrt(p * p + q * q + r * r), p);
                        if (sc != 0.0) {
                            if (k == m) {
                                if (l != m)
                                    s.at(k, k - 1) = -s.at(k, k - 1);
                            } else {
                                s.at(k, k - 1) = -sc * x;
                            }
                            p += sc;
                            x = p / sc;
                            y = q / sc;
                            z = r / sc;
                            q /= p;
                            r /= p;
                            for (int j = k; j <= nn; ++j) {
                                p = s.at(k, j) + q * s.at(k + 1, j);
                                if (k != nn - 1) {
                                    p += r * s.at(k + 2, j);
                                    s.at(k + 2, j) -= p * z;
                                }
                                s.at(k + 1, j) -= p * y;
                                s.at(k, j) -= p * x;
                            }
                            const int mmin = nn < k + 3 ? nn : k + 3;
                            for (int i = l; i <= mmin; ++i) {
                                p = x * s.at(i, k) + y * s.at(i, k + 1);
                                if (k != nn - 1) {
                                    p += z * s.at(i, k + 2);
                                    s.at(i, k + 2) -= p * r;
                                }
                                s.at(i, k + 1) -= p * q;
                                s.at(i, k) -= p;
                            }
                        }
                    }
                }
            }
        } while (l < nn - 1);
    }
    out.clear();
    for (int i = 1; i <= n; ++i)
        out.emplace_back(wr[i], wi[i]);
}

} // namespace

std::vector<std::complex<double>> eigenvalues(const Mat& m) {
    require_square(m, "eigenvalues");
    require_finite(m, "eigenvalues");
    if (m.rows() > 64)
        throw DimensionError("eigenvalues: dimension above 64 is not supported");
    std::vector<std::complex<double>> out;
    if (m.rows() == 0)
        return out;
    Scratch s(m);
    reduce_hessenberg(s);
    hessenberg_qr(s, out);
    return out;
}

double power_iteration_max_eig(const Mat& s, std::size_t max_iter, double rel_tol) {
    require_square(s, "power_iteration_max_eig");
    const std::size_t n = s.rows();
    if (n == 0)
        return 0.0;
    Vec v(n);
    for (std::size_t i = 0; i < n; ++i)
        v[i] = 1.0 + 0.1 * static_cast<double>(i % 7);
    double lambda = 0.0;
    for (std::size_t it = 0; it < max_iter; ++it) {
        const double nv = norm2(v);
        if (nv == 0.0)
            return 0.0;
        for (double& e : v)
            e /= nv;
        Vec sv = s * v;
        const double next = dot(v, sv);
        v = std::move(sv);
        if (it > 0 && std::abs(next - lambda) <= rel_tol * std::abs(next)) {
            lambda = next;
            break;
        }
        lambda = next;
    }
    return lambda;
}

} // namespace qsmpc
