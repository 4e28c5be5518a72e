#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "qsmpc/mpc_core.hpp"

namespace qsmpc {

// Exhaustive enumeration refuses instances with more than 2^20 candidates.
inline constexpr std::size_t kExhaustiveGuard = std::size_t{1} << 20;

struct IlsSolution {
    Ternary U;
    double cost = 0.0;  // ‖W U - u_bar‖²
    // Complete candidate sequences whose cost was evaluated. Directly
    // comparable with the 3^{Nm} evaluations of exhaustive enumeration.
    std::size_t nodes_visited = 0;
    // Tree nodes (partial assignments) that survived the radius test.
    std::size_t partial_nodes = 0;
    // Successive incumbent costs found by the sphere decoder (strictly
    // decreasing); empty for exhaustive enumeration.
    std::vector<double> incumbent_history;
};

// Mutable search state of one sphere-decoder invocation.
struct SphereState {
    double radius_sq = 0.0;
    std::optional<Ternary> best_U;
    double best_cost = 0.0;
    std::size_t nodes_visited = 0;
    std::size_t partial_nodes = 0;
    std::vector<double> incumbent_history;
};

struct RelaxedSolution {
    Vec U;
    std::size_t iterations = 0;
    double projected_gradient_norm = 0.0;
    double objective = 0.0;  // ‖W U - u_bar‖²
    bool converged = false;
};

// Global minimizer over {-1,0,1}^{Nm}; ties go to the lexicographically
// smallest sequence. Throws GuardExceeded beyond kExhaustiveGuard candidates.
[[nodiscard]] IlsSolution exhaustive_solve(const IlsInstance& ils, std::size_t N, std::size_t m);

// Componentwise nearest point of {-1, 0, 1}; magnitudes above 1 clamp, exact
// halves round away from zero.
[[nodiscard]] Ternary babai_round(std::span<const double> U_relaxed);

// Squared radius: smallest ILS cost among the supplied candidates.
[[nodiscard]] double initial_radius(const IlsInstance& ils, std::span<const int> babai_U,
                                    const std::optional<Ternary>& shifted_U);

// Per-block candidate inputs for the sphere decoder. The horizon cost depends
// on an input block u only through its direction B_q·u and its penalty uᵀRu,
// so keeping one least-penalty input per distinct direction loses no optimum.
struct BlockAlphabet {
    std::vector<Ternary> inputs;
};

// One representative per distinct B_q·u: least uᵀRu, then lexicographically
// smallest. Throws GuardExceeded for m above the alphabet enumeration limit.
[[nodiscard]] BlockAlphabet reduced_block_alphabet(const Mat& B_q, const Mat& R);

// Depth-first branch and bound from the last stacked coordinate to the first.
// Children are visited in order of increasing partial residual. Without an
// alphabet every coordinate branches over {-1, 0, 1}; with one, a whole input
// block (coordinates m-1 down to 0 of that block) branches over its entries.
[[nodiscard]] IlsSolution sphere_decode(const IlsInstance& ils, double init_radius_sq, std::size_t N, std::size_t m,
                                        const BlockAlphabet* alphabet = nullptr);

inline constexpr double kRelaxedTol = 1e-6;
inline constexpr std::size_t kRelaxedMaxIter = 50000;

// Step constant L for the relaxed problem: the largest eigenvalue of WᵀW = H̃
// by power iteration, with a 1% margin since the iteration approaches it from
// below. Depends only on W, so a run can compute it once.
[[nodiscard]] double relaxed_lipschitz(const Mat& W);

// min ‖W U - u_bar‖² over the box [-1, 1]^{Nm} by accelerated projected
// gradient with step 1/L. When max_iter is exhausted the best iterate is
// returned with converged = false. L is computed from ils.W when not given.
[[nodiscard]] RelaxedSolution relaxed_qp_solve(const IlsInstance& ils, double tol = kRelaxedTol,
                                               std::size_t max_iter = kRelaxedMaxIter,
                                               std::optional<double> lipschitz = std::nullopt);

// Projected-gradient residual ‖U - Π(U - ∇f(U)/L)‖ for f = ½‖W U - u_bar‖².
[[nodiscard]] double projected_gradient_residual(const IlsInstance& ils, std::span<const double> U, double L);

struct SuboptimalChoice {
    Ternary selected;
    Ternary applied;  // first m entries of selected
    Ternary rounded;
    std::optional<Ternary> shifted;
    double cost_selected = 0.0;
    double cost_rounded = 0.0;
    std::optional<double> cost_shifted;
    bool used_shifted = false;
    RelaxedSolution relaxed;
};

// One step of the relaxed-and-rounded scheme: the Babai-rounded relaxed
// solution competes with the previous selection shifted by one block (zero
// tail). Ties go to the shifted sequence.
[[nodiscard]] SuboptimalChoice suboptimal_step(const MpcProblem& prob, const IlsInstance& ils,
                                               std::span<const double> x_next, std::span<const double> xref_next,
                                               const std::optional<Ternary>& prev_selected,
                                               std::optional<double> lipschitz = std::nullopt);

} // namespace qsmpc
