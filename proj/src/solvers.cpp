#include "qsmpc/solvers.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <map>
#include <string>

namespace qsmpc {

namespace {

void require_size(const IlsInstance& ils, std::size_t N, std::size_t m) {
    if (ils.size() != N * m || ils.W.rows() != ils.size() || ils.W.cols() != ils.size())
        throw DimensionError("ILS instance size does not match N*m = " + std::to_string(N * m));
}

// Sphere search over an upper-triangular W, coordinate d-1 first.
class SphereSearch {
  public:
    SphereSearch(const IlsInstance& ils, SphereState& st)
        : W_(ils.W), u_bar_(ils.u_bar), d_(ils.size()), U_(d_, 0), st_(st) {}

    void run() {
        if (d_ == 0) {
            st_.best_U = Ternary{};
            st_.best_cost = 0.0;
            st_.nodes_visited = 1;
            return;
        }
        descend(d_ - 1, 0.0);
    }

  private:
    [[nodiscard]] double slack() const { return 1e-12 * std::max(1.0, st_.radius_sq); }

    void descend(std::size_t i, double partial) {
        double center = u_bar_[i];
        for (std::size_t j = i + 1; j < d_; ++j)
            center -= W_(i, j) * U_[j];
        const double wii = W_(i, i);

        std::array<std::pair<double, int>, 3> children{};
        for (int v = -1; v <= 1; ++v) {
            const double r = wii * v - center;
            children[static_cast<std::size_t>(v + 1)] = {partial + r * r, v};
        }
        std::stable_sort(children.begin(), children.end(),
                         [](const auto& a, const auto& b) { return a.first < b.first; });

        for (const auto& [cost, v] : children) {
            // Children are sorted, so the first pruned one ends the loop.
            if (cost > st_.radius_sq + slack())
                break;
            ++st_.partial_nodes;
            U_[i] = v;
            if (i == 0) {
                ++st_.nodes_visited;
                if (!st_.best_U || cost < st_.best_cost) {
                    st_.best_U = U_;
                    st_.best_cost = cost;
                    st_.radius_sq = std::min(st_.radius_sq, cost);
                    st_.incumbent_history.push_back(cost);
                }
            } else {
                descend(i - 1, cost);
            }
        }
        U_[i] = 0;
    }

    const Mat& W_;
    const Vec& u_bar_;
    std::size_t d_;
    Ternary U_;
    SphereState& st_;
};

// Same search with one tree level per input block. Block j of U occupies
// coordinates [j·m, (j+1)·m); blocks are fixed from N-1 down to 0.
class BlockSphereSearch {
  public:
    BlockSphereSearch(const IlsInstance& ils, std::size_t N, std::size_t m, const BlockAlphabet& alpha,
                      SphereState& st)
        : W_(ils.W), u_bar_(ils.u_bar), N_(N), m_(m), alpha_(alpha.inputs), U_(N * m, 0), st_(st) {}

    void run() {
        if (N_ == 0 || m_ == 0) {
            st_.best_U = Ternary(N_ * m_, 0);
            st_.best_cost = 0.0;
            st_.nodes_visited = 1;
            return;
        }
        descend(N_ - 1, 0.0);
    }

  private:
    [[nodiscard]] double slack() const { return 1e-12 * std::max(1.0, st_.radius_sq); }

    void descend(std::size_t j, double partial) {
        const std::size_t lo = j * m_;
        const std::size_t hi = lo + m_;
        Vec s(m_);
        for (std::size_t r = lo; r < hi; ++r) {
            double c = u_bar_[r];
            for (std::size_t k = hi; k < U_.size(); ++k)
                c -= W_(r, k) * U_[k];
            s[r - lo] = c;
        }

        std::vector<std::pair<double, std::size_t>> children;
        children.reserve(alpha_.size());
        for (std::size_t a = 0; a < alpha_.size(); ++a) {
            const Ternary& v = alpha_[a];
            double cost = partial;
            for (std::size_t r = lo; r < hi; ++r) {
                double acc = -s[r - lo];
                for (std::size_t k = r; k < hi; ++k)
                    acc += W_(r, k) * v[k - lo];
                cost += acc * acc;
            }
            children.emplace_back(cost, a);
        }
        std::stable_sort(children.begin(), children.end(),
                         [](const auto& a, const auto& b) { return a.first < b.first; });

        for (const auto& [cost, a] : children) {
            if (cost > st_.radius_sq + slack())
                break;
            ++st_.partial_nodes;
            std::copy(alpha_[a].begin(), alpha_[a].end(), U_.begin() + static_cast<std::ptrdiff_t>(lo));
            if (j == 0) {
                ++st_.nodes_visited;
                if (!st_.best_U || cost < st_.best_cost) {
                    st_.best_U = U_;
                    st_.best_cost = cost;
                    st_.radius_sq = std::min(st_.radius_sq, cost);
                    st_.incumbent_history.push_back(cost);
                }
            } else {
                descend(j - 1, cost);
            }
        }
        std::fill(U_.begin() + static_cast<std::ptrdiff_t>(lo), U_.begin() + static_cast<std::ptrdiff_t>(hi), 0);
    }

    const Mat& W_;
    const Vec& u_bar_;
    std::size_t N_;
    std::size_t m_;
    const std::vector<Ternary>& alpha_;
    Ternary U_;
    SphereState& st_;
};

Vec project_box(Vec u) {
    for (double& v : u)
        v = std::clamp(v, -1.0, 1.0);
    return u;
}

// ∇(½‖W U - u_bar‖²) = Wᵀ(W U - u_bar).
Vec half_gradient(const IlsInstance& ils, std::span<const double> U) {
    Vec r = ils.W * U;
    for (std::size_t i = 0; i < r.size(); ++i)
        r[i] -= ils.u_bar[i];
    return transpose_times(ils.W, r);
}

} // namespace

IlsSolution exhaustive_solve(const IlsInstance& ils, std::size_t N, std::size_t m) {
    require_size(ils, N, m);
    const std::size_t d = N * m;
    std::size_t count = 1;
    for (std::size_t i = 0; i < d; ++i) {
        count *= 3;
        if (count > kExhaustiveGuard)
            throw GuardExceeded("exhaustive_solve: 3^" + std::to_string(d) + " candidates exceed the 2^20 limit");
    }

    IlsSolution best;
    best.cost = std::numeric_limits<double>::infinity();
    Ternary U(d, -1);
    do {
        const double c = ils_cost(ils, std::span<const int>(U));
        ++best.nodes_visited;
        if (c < best.cost) {
            best.cost = c;
            best.U = U;
        }
    } while (next_ternary(U));
    best.partial_nodes = best.nodes_visited;
    return best;
}

Ternary babai_round(std::span<const double> U_relaxed) {
    Ternary out(U_relaxed.size());
    for (std::size_t i = 0; i < U_relaxed.size(); ++i)
        out[i] = static_cast<int>(std::round(std::clamp(U_relaxed[i], -1.0, 1.0)));
    return out;
}

double initial_radius(const IlsInstance& ils, std::span<const int> babai_U, const std::optional<Ternary>& shifted_U) {
    double r = ils_cost(ils, babai_U);
    if (shifted_U)
        r = std::min(r, ils_cost(ils, std::span<const int>(*shifted_U)));
    return r;
}

BlockAlphabet reduced_block_alphabet(const Mat& B_q, const Mat& R) {
    const std::size_t m = B_q.cols();
    if (R.rows() != m || R.cols() != m)
        throw DimensionError("reduced_block_alphabet: R must be m x m");
    BlockAlphabet out;
    std::map<std::vector<long long>, std::pair<double, std::size_t>> best;
    for (const Ternary& u : enumerate_alphabet(m)) {
        const Vec uu = to_real(u);
        const Vec d = B_q * std::span<const double>(uu);
        std::vector<long long> key(d.size());
        for (std::size_t i = 0; i < d.size(); ++i)
            key[i] = std::llround(d[i] * 1e9);
        const double pen = quad_form(R, uu);
        // Inputs arrive in lexicographic order, so strict improvement keeps
        // the lexicographically smallest among equal penalties.
        const auto it = best.find(key);
        if (it == best.end()) {
            best.emplace(std::move(key), std::pair{pen, out.inputs.size()});
            out.inputs.push_back(u);
        } else if (pen < it->second.first) {
            it->second.first = pen;
            out.inputs[it->second.second] = u;
        }
    }
    return out;
}

IlsSolution sphere_decode(const IlsInstance& ils, double init_radius_sq, std::size_t N, std::size_t m,
                          const BlockAlphabet* alphabet) {
    require_size(ils, N, m);
    if (!(init_radius_sq >= 0.0) || !std::isfinite(init_radius_sq))
        throw Error("sphere_decode: initial radius must be finite and non-negative");
    if (alphabet) {
        if (alphabet->inputs.empty())
            throw Error("sphere_decode: empty block alphabet");
        for (const Ternary& v : alphabet->inputs)
            if (v.size() != m || !is_ternary(v))
                throw DimensionError("sphere_decode: block alphabet entries must be ternary of length m");
    }

    SphereState st;
    st.radius_sq = init_radius_sq;
    if (alphabet)
        BlockSphereSearch(ils, N, m, *alphabet, st).run();
    else
        SphereSearch(ils, st).run();
    if (!st.best_U)
        throw Error("sphere_decode: no lattice point inside the initial radius");

    IlsSolution sol;
    sol.U = std::move(*st.best_U);
    sol.cost = ils_cost(ils, std::span<const int>(sol.U));
    sol.nodes_visited = st.nodes_visited;
    sol.partial_nodes = st.partial_nodes;
    sol.incumbent_history = std::move(st.incumbent_history);
    return sol;
}

double projected_gradient_residual(const IlsInstance& ils, std::span<const double> U, double L) {
    const Vec g = half_gradient(ils, U);
    double acc = 0.0;
    for (std::size_t i = 0; i < U.size(); ++i) {
        const double step = std::clamp(U[i] - g[i] / L, -1.0, 1.0);
        acc += (U[i] - step) * (U[i] - step);
    }
    return std::sqrt(acc);
}

double relaxed_lipschitz(const Mat& W) {
    const double L = 1.01 * power_iteration_max_eig(W.transpose() * W);
    if (!(L > 0.0) || !std::isfinite(L))
        throw Error("relaxed_lipschitz: degenerate Hessian");
    return L;
}

RelaxedSolution relaxed_qp_solve(const IlsInstance& ils, double tol, std::size_t max_iter,
                                 std::optional<double> lipschitz) {
    if (!(tol > 0.0))
        throw Error("relaxed_qp_solve: tolerance must be positive");
    const std::size_t d = ils.size();
    RelaxedSolution out;
    if (d == 0) {
        out.converged = true;
        return out;
    }

    const double L = lipschitz ? *lipschitz : relaxed_lipschitz(ils.W);
    if (!(L > 0.0) || !std::isfinite(L))
        throw Error("relaxed_qp_solve: step constant must be positive");

    Vec x = project_box(ils.u_uncon);
    Vec y = x;
    double t = 1.0;
    out.U = x;
    out.projected_gradient_norm = projected_gradient_residual(ils, x, L);
    if (out.projected_gradient_norm <= tol) {
        out.converged = true;
        out.objective = ils_cost(ils, std::span<const double>(out.U));
        return out;
    }

    for (std::size_t it = 1; it <= max_iter; ++it) {
        const Vec g = half_gradient(ils, y);
        Vec x_next(d);
        for (std::size_t i = 0; i < d; ++i)
            x_next[i] = std::clamp(y[i] - g[i] / L, -1.0, 1.0);

        // Gradient-based momentum restart.
        double restart = 0.0;
        for (std::size_t i = 0; i < d; ++i)
            restart += (y[i] - x_next[i]) * (x_next[i] - x[i]);
        if (restart > 0.0) {
            t = 1.0;
            y = x_next;
        } else {
            const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
            const double beta = (t - 1.0) / t_next;
            for (std::size_t i = 0; i < d; ++i)
                y[i] = x_next[i] + beta * (x_next[i] - x[i]);
            t = t_next;
        }
        x = std::move(x_next);

        const double res = projected_gradient_residual(ils, x, L);
        out.iterations = it;
        if (res < out.projected_gradient_norm) {
            out.projected_gradient_norm = res;
            out.U = x;
        }
        if (res <= tol) {
            out.converged = true;
            break;
        }
    }
    out.objective = ils_cost(ils, std::span<const double>(out.U));
    return out;
}

SuboptimalChoice suboptimal_step(const MpcProblem& prob, const IlsInstance& ils, std::span<const double> x_next,
                                 std::span<const double> xref_next, const std::optional<Ternary>& prev_selected,
                                 std::optional<double> lipschitz) {
    const std::size_t m = prob.m();
    SuboptimalChoice ch;
    ch.relaxed = relaxed_qp_solve(ils, kRelaxedTol, kRelaxedMaxIter, lipschitz);
    ch.rounded = babai_round(ch.relaxed.U);
    ch.cost_rounded = stage_cost(prob, x_next, xref_next, std::span<const int>(ch.rounded));

    if (prev_selected) {
        if (prev_selected->size() != prob.stacked_size())
            throw DimensionError("suboptimal_step: previous sequence has the wrong length");
        ch.shifted = shift_sequence(*prev_selected, m);
        ch.cost_shifted = stage_cost(prob, x_next, xref_next, std::span<const int>(*ch.shifted));
    }

    if (ch.cost_shifted && *ch.cost_shifted <= ch.cost_rounded) {
        ch.selected = *ch.shifted;
        ch.cost_selected = *ch.cost_shifted;
        ch.used_shifted = true;
    } else {
        ch.selected = ch.rounded;
        ch.cost_selected = ch.cost_rounded;
    }
    ch.applied.assign(ch.selected.begin(), ch.selected.begin() + static_cast<std::ptrdiff_t>(m));
    return ch;
}

} // namespace qsmpc
