#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

#include "qsmpc/numerics.hpp"
#include "qsmpc/system.hpp"

namespace qsmpc {

// Horizon-N tracking problem: terminal weight P, stage weight Q, input weight R.
struct MpcProblem {
    QuantizedPlant plant;
    LtiReference ref;
    Mat P;
    Mat Q;
    Mat R;
    std::size_t N = 1;

    [[nodiscard]] std::size_t n() const noexcept { return plant.n(); }
    [[nodiscard]] std::size_t m() const noexcept { return plant.m(); }
    [[nodiscard]] std::size_t stacked_size() const noexcept { return N * plant.m(); }

    // Throws DimensionError / NotPositiveDefinite when the invariants fail.
    void validate() const;
};

// Stacked horizon matrices. X = A_tilde x0 + B_tilde U and
// J = (X - R_k)ᵀ Q_tilde (X - R_k) + Uᵀ R_tilde U.
struct ExtensiveForm {
    std::size_t n = 0;
    std::size_t m = 0;
    std::size_t N = 0;
    Mat A_tilde;  // (N+1)n x n
    Mat B_tilde;  // (N+1)n x Nm, h folded into every B_q block
    Mat Q_tilde;  // (N+1)n x (N+1)n, Q on the first N blocks and P last
    Mat R_tilde;  // Nm x Nm
    Mat H_tilde;  // B_tildeᵀ Q_tilde B_tilde + R_tilde
    Mat W;        // upper triangular, WᵀW = H_tilde
};

// Per-step integer least-squares instance: for every stacked U,
// stage_cost(U) = ‖W U - u_bar‖² + constant.
struct IlsInstance {
    Mat W;
    Vec u_bar;
    double constant = 0.0;
    Vec u_uncon;

    [[nodiscard]] std::size_t size() const noexcept { return u_bar.size(); }
};

[[nodiscard]] ExtensiveForm build_extensive(const MpcProblem& prob);

// Eq.-(4) cost by rolling the plant and the reference forward. Real-valued U
// is accepted so the relaxed problem uses the same evaluator.
[[nodiscard]] double stage_cost(const MpcProblem& prob, std::span<const double> x0, std::span<const double> xref0,
                                std::span<const double> U);
[[nodiscard]] double stage_cost(const MpcProblem& prob, std::span<const double> x0, std::span<const double> xref0,
                                std::span<const int> U);

// Stacked [xref0; A_d xref0; ...; A_d^N xref0].
[[nodiscard]] Vec reference_horizon(const LtiReference& ref, std::span<const double> xref0, std::size_t N);

[[nodiscard]] IlsInstance ils_transform(const ExtensiveForm& ext, std::span<const double> x_q,
                                        std::span<const double> R_k);

// ‖W U - u_bar‖².
[[nodiscard]] double ils_cost(const IlsInstance& ils, std::span<const double> U);
[[nodiscard]] double ils_cost(const IlsInstance& ils, std::span<const int> U);

struct Theorem1Report {
    bool cond_a = false;  // A_q equals e^{Hh} within 1e-8
    bool cond_b = false;  // Q - P + A_qᵀ P A_q is negative definite
    double exp_mismatch = 0.0;
    Mat lyapunov_matrix;  // Q - P + A_qᵀ P A_q
    std::vector<std::complex<double>> witness;  // its eigenvalues
};

[[nodiscard]] Theorem1Report check_theorem1(const MpcProblem& prob);

// Drops the first input block of a stacked sequence and appends a zero block.
[[nodiscard]] Ternary shift_sequence(std::span<const int> U, std::size_t m);

} // namespace qsmpc
