#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "qsmpc/numerics.hpp"

namespace qsmpc {

// Entries are restricted to {-1, 0, +1}. Horizon sequences are stored stacked:
// block n occupies entries [n*m, (n+1)*m).
using Ternary = std::vector<int>;

[[nodiscard]] bool is_ternary(std::span<const int> u) noexcept;
[[nodiscard]] Vec to_real(std::span<const int> u);

// ============================================================================
// Continuous reference x' = Hx, sampled exactly every h seconds.
// ============================================================================
class LtiReference {
  public:
    LtiReference(Mat H, double h);

    [[nodiscard]] const Mat& H() const noexcept { return H_; }
    [[nodiscard]] double h() const noexcept { return h_; }
    // Cached e^{Hh}.
    [[nodiscard]] const Mat& A_d() const noexcept { return A_d_; }
    [[nodiscard]] std::size_t n() const noexcept { return H_.rows(); }

    // All eigenvalues of H strictly in the open left half-plane.
    [[nodiscard]] bool is_hurwitz() const;

  private:
    Mat H_;
    double h_;
    Mat A_d_;
};

// ============================================================================
// Quantized plant x+ = A_q x + h B_q u with ternary u.
// ============================================================================
class QuantizedPlant {
  public:
    QuantizedPlant(Mat A_q, Mat B_q, double h);

    [[nodiscard]] const Mat& A_q() const noexcept { return A_q_; }
    [[nodiscard]] const Mat& B_q() const noexcept { return B_q_; }
    [[nodiscard]] double h() const noexcept { return h_; }
    [[nodiscard]] std::size_t n() const noexcept { return A_q_.rows(); }
    [[nodiscard]] std::size_t m() const noexcept { return B_q_.cols(); }

  private:
    Mat A_q_;
    Mat B_q_;
    double h_;
};

[[nodiscard]] Mat discretize(const Mat& H, double h);

[[nodiscard]] Vec lti_step(const LtiReference& ref, std::span<const double> x);

// A_q x + h B_q u. Throws DimensionError on size mismatch or when u has an
// entry outside {-1, 0, +1}.
[[nodiscard]] Vec plant_step(const QuantizedPlant& plant, std::span<const double> x_q, std::span<const int> u);

// Same dynamics for a real-valued (relaxed) input.
[[nodiscard]] Vec plant_step_relaxed(const QuantizedPlant& plant, std::span<const double> x_q,
                                     std::span<const double> u);

inline constexpr std::size_t kMaxAlphabetInputs = 12;

// All 3^m inputs in lexicographic order with -1 < 0 < +1. Throws
// GuardExceeded for m > 12.
[[nodiscard]] std::vector<Ternary> enumerate_alphabet(std::size_t m);

// Advances a ternary vector to its lexicographic successor in place. Returns
// false after the last element (all +1), leaving the vector all -1.
bool next_ternary(std::span<int> u) noexcept;

} // namespace qsmpc
