#include "qsmpc/mpc_core.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace qsmpc {

namespace {

void require_dim(std::size_t got, std::size_t want, const char* what) {
    if (got != want)
        throw DimensionError(std::string(what) + ": got dimension " + std::to_string(got) + ", expected " +
                             std::to_string(want));
}

void require_spd(const Mat& s, std::size_t dim, const char* name) {
    if (s.rows() != dim || s.cols() != dim)
        throw DimensionError(std::string("MpcProblem: ") + name + " must be " + std::to_string(dim) + "x" +
                             std::to_string(dim));
    if (!is_symmetric(s))
        throw DimensionError(std::string("MpcProblem: ") + name + " is not symmetric");
    if (!is_positive_definite(s))
        throw NotPositiveDefinite(std::string("MpcProblem: ") + name + " is not positive definite");
}

} // namespace

void MpcProblem::validate() const {
    if (N == 0)
        throw DimensionError("MpcProblem: horizon must be at least 1");
    if (ref.n() != plant.n())
        throw DimensionError("MpcProblem: reference and plant state dimensions differ");
    require_spd(P, n(), "P");
    require_spd(Q, n(), "Q");
    require_spd(R, m(), "R");
}

ExtensiveForm build_extensive(const MpcProblem& prob) {
    prob.validate();
    const std::size_t n = prob.n();
    const std::size_t m = prob.m();
    const std::size_t N = prob.N;
    const Mat& A = prob.plant.A_q();
    const Mat hB = prob.plant.B_q() * prob.plant.h();

    std::vector<Mat> powers{Mat::identity(n)};
    for (std::size_t i = 1; i <= N; ++i)
        powers.push_back(A * powers.back());

    ExtensiveForm ext;
    ext.n = n;
    ext.m = m;
    ext.N = N;
    ext.A_tilde = Mat((N + 1) * n, n);
    for (std::size_t i = 0; i <= N; ++i)
        ext.A_tilde.set_block(i * n, 0, powers[i]);

    ext.B_tilde = Mat((N + 1) * n, N * m);
    for (std::size_t i = 1; i <= N; ++i)
        for (std::size_t j = 0; j < i; ++j)
            ext.B_tilde.set_block(i * n, j * m, powers[i - 1 - j] * hB);

    ext.Q_tilde = Mat((N + 1) * n, (N + 1) * n);
    for (std::size_t i = 0; i < N; ++i)
        ext.Q_tilde.set_block(i * n, i * n, prob.Q);
    ext.Q_tilde.set_block(N * n, N * n, prob.P);

    ext.R_tilde = Mat(N * m, N * m);
    for (std::size_t i = 0; i < N; ++i)
        ext.R_tilde.set_block(i * m, i * m, prob.R);

    ext.H_tilde = ext.B_tilde.transpose() * (ext.Q_tilde * ext.B_tilde) + ext.R_tilde;
    // Symmetrize away rounding asymmetry of the triple product.
    for (std::size_t i = 0; i < N * m; ++i)
        for (std::size_t j = i + 1; j < N * m; ++j) {
            const double avg = 0.5 * (ext.H_tilde(i, j) + ext.H_tilde(j, i));
            ext.H_tilde(i, j) = avg;
            ext.H_tilde(j, i) = avg;
        }
    ext.W = cholesky(ext.H_tilde);
    return ext;
}

double stage_cost(const MpcProblem& prob, std::span<const double> x0, std::span<const double> xref0,
                  std::span<const double> U) {
    const std::size_t n = prob.n();
    const std::size_t m = prob.m();
    require_dim(x0.size(), n, "stage_cost x0");
    require_dim(xref0.size(), n, "stage_cost xref0");
    require_dim(U.size(), prob.N * m, "stage_cost U");

    Vec x(x0.begin(), x0.end());
    Vec xr(xref0.begin(), xref0.end());
    double cost = 0.0;
    for (std::size_t k = 0; k < prob.N; ++k) {
        const auto u = U.subspan(k * m, m);
        cost += quad_form(prob.Q, sub(x, xr)) + quad_form(prob.R, u);
        x = plant_step_relaxed(prob.plant, x, u);
        xr = prob.ref.A_d() * xr;
    }
    cost += quad_form(prob.P, sub(x, xr));
    return cost;
}

double stage_cost(const MpcProblem& prob, std::span<const double> x0, std::span<const double> xref0,
                  std::span<const int> U) {
    const Vec ur = to_real(U);
    return stage_cost(prob, x0, xref0, std::span<const double>(ur));
}

Vec reference_horizon(const LtiReference& ref, std::span<const double> xref0, std::size_t N) {
    require_dim(xref0.size(), ref.n(), "reference_horizon");
    Vec out;
    out.reserve((N + 1) * ref.n());
    Vec x(xref0.begin(), xref0.end());
    out.insert(out.end(), x.begin(), x.end());
    for (std::size_t k = 0; k < N; ++k) {
        x = lti_step(ref, x);
        out.insert(out.end(), x.begin(), x.end());
    }
    return out;
}

IlsInstance ils_transform(const ExtensiveForm& ext, std::span<const double> x_q, std::span<const double> R_k) {
    require_dim(x_q.size(), ext.n, "ils_transform x_q");
    require_dim(R_k.size(), (ext.N + 1) * ext.n, "ils_transform R_k");

    const Vec e = sub(ext.A_tilde * x_q, R_k);
    const Vec qe = ext.Q_tilde * e;
    Vec g = transpose_times(ext.B_tilde, qe);

    IlsInstance ils;
    ils.W = ext.W;
    ils.u_uncon = solve_linear(ext.H_tilde, g);
    for (double& v : ils.u_uncon)
        v = -v;
    ils.u_bar = ext.W * ils.u_uncon;
    ils.constant = dot(e, qe) - quad_form(ext.H_tilde, ils.u_uncon);
    return ils;
}

double ils_cost(const IlsInstance& ils, std::span<const double> U) {
    require_dim(U.size(), ils.size(), "ils_cost");
    double acc = 0.0;
    const std::size_t d = ils.size();
    for (std::size_t i = 0; i < d; ++i) {
        double r = -ils.u_bar[i];
        for (std::size_t j = i; j < d; ++j)
            r += ils.W(i, j) * U[j];
        acc += r * r;
    }
    return acc;
}

double ils_cost(const IlsInstance& ils, std::span<const int> U) {
    const Vec ur = to_real(U);
    return ils_cost(ils, std::span<const double>(ur));
}

Theorem1Report check_theorem1(const MpcProblem& prob) {
    Theorem1Report rep;
    const Mat& A = prob.plant.A_q();
    const Mat expected = mat_exp(prob.ref.H() * prob.ref.h());
    if (A.rows() == expected.rows() && A.cols() == expected.cols()) {
        rep.exp_mismatch = (A - expected).max_abs();
        rep.cond_a = rep.exp_mismatch <= 1e-8;
    } else {
        rep.exp_mismatch = std::numeric_limits<double>::infinity();
    }
    rep.lyapunov_matrix = prob.Q - prob.P + A.transpose() * (prob.P * A);
    for (std::size_t i = 0; i < rep.lyapunov_matrix.rows(); ++i)
        for (std::size_t j = i + 1; j < rep.lyapunov_matrix.cols(); ++j) {
            const double avg = 0.5 * (rep.lyapunov_matrix(i, j) + rep.lyapunov_matrix(j, i));
            rep.lyapunov_matrix(i, j) = avg;
            rep.lyapunov_matrix(j, i) = avg;
        }
    rep.cond_b = is_negative_definite(rep.lyapunov_matrix);
    rep.witness = eigenvalues(rep.lyapunov_matrix);
    return rep;
}

Ternary shift_sequence(std::span<const int> U, std::size_t m) {
    if (m == 0 || U.size() % m != 0)
        throw DimensionError("shift_sequence: length is not a multiple of the block size");
    Ternary out(U.size(), 0);
    std::copy(U.begin() + static_cast<std::ptrdiff_t>(m), U.end(), out.begin());
    return out;
}

} // namespace qsmpc
