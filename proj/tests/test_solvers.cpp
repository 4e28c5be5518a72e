#include <doctest.h>

#include <limits>
#include <set>

#include "support.hpp"

using namespace qsmpc;
using namespace qsmpc::testing;

namespace {

IlsInstance identity_instance(Vec u_bar) {
    IlsInstance ils;
    ils.W = Mat::identity(u_bar.size());
    ils.u_uncon = u_bar;
    ils.u_bar = std::move(u_bar);
    return ils;
}

// Brute force over every stacked sequence, independent of exhaustive_solve.
double brute_min(const IlsInstance& ils) {
    double best = std::numeric_limits<double>::infinity();
    Ternary U(ils.size(), -1);
    std::size_t total = 1;
    for (std::size_t i = 0; i < U.size(); ++i)
        total *= 3;
    for (std::size_t idx = 0; idx < total; ++idx) {
        std::size_t r = idx;
        for (std::size_t i = U.size(); i-- > 0;) {
            U[i] = static_cast<int>(r % 3) - 1;
            r /= 3;
        }
        best = std::min(best, ils_cost(ils, U));
    }
    return best;
}

double sphere_with_babai(const IlsInstance& ils, std::size_t N, std::size_t m, const BlockAlphabet* alpha = nullptr) {
    const Ternary b = babai_round(ils.u_uncon);
    return sphere_decode(ils, initial_radius(ils, b, std::nullopt), N, m, alpha).cost;
}

} // namespace

TEST_SUITE("solvers") {

TEST_CASE("exhaustive_solve on trivial instances") {
    const IlsInstance hit = identity_instance({1.0, 0.0, -1.0});
    const IlsSolution s = exhaustive_solve(hit, 3, 1);
    CHECK(s.U == Ternary{1, 0, -1});
    CHECK(s.cost == 0.0);
    CHECK(s.nodes_visited == 27);

    const IlsSolution r = exhaustive_solve(identity_instance({0.4, -0.7}), 1, 2);
    CHECK(r.U == Ternary{0, -1});
}

TEST_CASE("exhaustive_solve breaks ties lexicographically") {
    // 0.5 is equidistant from 0 and 1; -0.5 from -1 and 0.
    const IlsSolution s = exhaustive_solve(identity_instance({0.5, -0.5}), 2, 1);
    CHECK(s.U == Ternary{0, -1});
}

TEST_CASE("exhaustive_solve guard") {
    IlsInstance big = identity_instance(Vec(13, 0.0));
    CHECK_THROWS_AS((void)exhaustive_solve(big, 13, 1), GuardExceeded);
    CHECK_THROWS_AS((void)exhaustive_solve(identity_instance(Vec(4, 0.0)), 2, 1), DimensionError);
}

TEST_CASE("exhaustive_solve equals brute force on random 2 x 2 instances") {
    std::mt19937_64 rng(41);
    for (int trial = 0; trial < 50; ++trial) {
        const MpcProblem p = random_problem(rng, 2, 2, 1);
        const IlsInstance ils = random_instance(rng, p);
        CHECK(exhaustive_solve(ils, 1, 2).cost == brute_min(ils));
    }
}

TEST_CASE("babai_round") {
    CHECK(babai_round(Vec{0.4, -0.7, 1.3}) == Ternary{0, -1, 1});
    CHECK(babai_round(Vec{0.0, 0.0, 0.0}) == Ternary{0, 0, 0});
    CHECK(babai_round(Vec{0.5, -0.5}) == Ternary{1, -1});
    CHECK(babai_round(Vec{-7.0, 1.49999}) == Ternary{-1, 1});
    std::mt19937_64 rng(42);
    for (int trial = 0; trial < 50; ++trial) {
        const Ternary t = random_ternary(rng, 6);
        CHECK(babai_round(to_real(t)) == t);
        const Ternary r = babai_round(random_vec(rng, 6, -3.0, 3.0));
        CHECK(babai_round(to_real(r)) == r);
    }
}

TEST_CASE("initial_radius") {
    const IlsInstance hit = identity_instance({1.0, 0.0});
    CHECK(initial_radius(hit, Ternary{1, 0}, std::nullopt) == 0.0);
    const IlsInstance ils = identity_instance({0.4, -0.7});
    const Ternary b = babai_round(ils.u_uncon);
    CHECK(initial_radius(ils, b, std::nullopt) == ils_cost(ils, b));
    const Ternary s{1, 1};
    CHECK(initial_radius(ils, b, s) == std::min(ils_cost(ils, b), ils_cost(ils, s)));
    CHECK(initial_radius(ils, Ternary{1, 1}, Ternary{0, -1}) == ils_cost(ils, Ternary{0, -1}));
}

TEST_CASE("sphere_decode on a lattice point") {
    const IlsInstance hit = identity_instance({1.0, -1.0, 0.0, 1.0});
    const IlsSolution s = sphere_decode(hit, initial_radius(hit, babai_round(hit.u_uncon), std::nullopt), 2, 2);
    CHECK(s.U == Ternary{1, -1, 0, 1});
    CHECK(s.cost == 0.0);
}

TEST_CASE("sphere_decode matches exhaustive enumeration on 200 random instances") {
    std::mt19937_64 rng(43);
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t m = 1 + trial % 2;
        const std::size_t N = 1 + (trial / 2) % 3;
        const MpcProblem p = random_problem(rng, 2, m, N);
        const IlsInstance ils = random_instance(rng, p);
        const IlsSolution ex = exhaustive_solve(ils, N, m);
        const Ternary b = babai_round(ils.u_uncon);
        const IlsSolution sd = sphere_decode(ils, initial_radius(ils, b, std::nullopt), N, m);
        CHECK(std::abs(sd.cost - ex.cost) <= 1e-9);
        CHECK(sd.cost == doctest::Approx(ils_cost(ils, sd.U)).epsilon(1e-15));
        CHECK(sd.nodes_visited <= ex.nodes_visited);
        for (std::size_t i = 1; i < sd.incumbent_history.size(); ++i)
            CHECK(sd.incumbent_history[i] < sd.incumbent_history[i - 1]);
    }
}

TEST_CASE("sphere_decode evaluates fewer leaves than enumeration when Nm = 8") {
    std::mt19937_64 rng(44);
    for (int trial = 0; trial < 30; ++trial) {
        const MpcProblem p = random_problem(rng, 2, 2, 4);
        const IlsInstance ils = random_instance(rng, p);
        const Ternary b = babai_round(ils.u_uncon);
        const IlsSolution sd = sphere_decode(ils, initial_radius(ils, b, std::nullopt), 4, 2);
        const IlsSolution ex = exhaustive_solve(ils, 4, 2);
        CHECK(sd.nodes_visited < 6561);
        CHECK(std::abs(sd.cost - ex.cost) <= 1e-9);
    }
}

TEST_CASE("sphere_decode with an infeasible radius is signalled") {
    const IlsInstance ils = identity_instance({0.4, -0.7});
    CHECK_THROWS_AS((void)sphere_decode(ils, 0.0, 1, 2), Error);
    CHECK_THROWS((void)sphere_decode(ils, -1.0, 1, 2));
}

TEST_CASE("reduced block alphabet of the reference plant") {
    const MpcProblem p = reference_problem(2);
    const BlockAlphabet a = reduced_block_alphabet(p.plant.B_q(), p.R);
    CHECK(a.inputs.size() == 25);
    std::set<std::pair<long, long>> dirs;
    for (const auto& u : a.inputs) {
        const Vec d = p.plant.B_q() * to_real(u);
        dirs.emplace(std::lround(d[0]), std::lround(d[1]));
        // Least penalty: never both columns of an opposite pair with the same sign.
        CHECK_FALSE((u[0] != 0 && u[0] == u[2]));
        CHECK_FALSE((u[1] != 0 && u[1] == u[3]));
    }
    CHECK(dirs.size() == 25);

    // Distinct generic directions keep the whole alphabet.
    std::mt19937_64 rng(45);
    CHECK(reduced_block_alphabet(random_mat(rng, 2, 3), random_spd(rng, 3)).inputs.size() == 27);
}

TEST_CASE("block-alphabet sphere search keeps the optimal cost") {
    std::mt19937_64 rng(46);
    for (int trial = 0; trial < 60; ++trial) {
        // Plants with repeated and opposite columns plus random weights.
        const std::size_t N = 1 + trial % 3;
        Mat B = random_mat(rng, 2, 2);
        Mat Bq(2, 4);
        for (std::size_t i = 0; i < 2; ++i) {
            Bq(i, 0) = B(i, 0);
            Bq(i, 1) = B(i, 1);
            Bq(i, 2) = trial % 2 ? -B(i, 0) : B(i, 0);
            Bq(i, 3) = -B(i, 1);
        }
        MpcProblem p = random_problem(rng, 2, 4, N);
        p = MpcProblem{QuantizedPlant(p.plant.A_q(), Bq, p.plant.h()), p.ref, p.P, p.Q, p.R, N};
        const IlsInstance ils = random_instance(rng, p);
        const BlockAlphabet alpha = reduced_block_alphabet(Bq, p.R);
        CHECK(alpha.inputs.size() < 81);
        const double ex = exhaustive_solve(ils, N, 4).cost;
        CHECK(std::abs(sphere_with_babai(ils, N, 4, &alpha) - ex) <= 1e-9);
        CHECK(std::abs(sphere_with_babai(ils, N, 4) - ex) <= 1e-9);
    }
}

TEST_CASE("block-alphabet search on the reference problem with A_q = I") {
    const MpcProblem p = reference_problem(2, true);
    const ExtensiveForm e = build_extensive(p);
    const BlockAlphabet alpha = reduced_block_alphabet(p.plant.B_q(), p.R);
    std::mt19937_64 rng(47);
    for (int trial = 0; trial < 20; ++trial) {
        const Vec x = random_vec(rng, 2, -2.0, 2.0);
        const Vec xr = random_vec(rng, 2, -2.0, 2.0);
        const IlsInstance ils = ils_transform(e, x, reference_horizon(p.ref, xr, 2));
        const IlsSolution ex = exhaustive_solve(ils, 2, 4);
        const Ternary b = babai_round(ils.u_uncon);
        const IlsSolution sd = sphere_decode(ils, initial_radius(ils, b, std::nullopt), 2, 4, &alpha);
        CHECK(std::abs(sd.cost - ex.cost) <= 1e-9);
    }
}

TEST_CASE("relaxed QP with a feasible unconstrained optimum") {
    const IlsInstance ils = identity_instance({0.3, -0.2, 0.9});
    const RelaxedSolution r = relaxed_qp_solve(ils);
    CHECK(r.converged);
    CHECK(max_abs_diff(r.U, ils.u_uncon) <= 1e-6);
}

TEST_CASE("relaxed QP clamps to the box") {
    const RelaxedSolution r = relaxed_qp_solve(identity_instance({5.0, -5.0}));
    CHECK(r.converged);
    CHECK(max_abs_diff(r.U, Vec{1.0, -1.0}) <= 1e-9);
    CHECK(r.projected_gradient_norm <= kRelaxedTol);
}

TEST_CASE("relaxed QP beats random box points and bounds the integer optimum") {
    std::mt19937_64 rng(48);
    for (int trial = 0; trial < 30; ++trial) {
        const std::size_t m = 1 + trial % 3;
        const std::size_t N = 1 + trial % 4;
        const MpcProblem p = random_problem(rng, 2, m, N);
        IlsInstance ils = random_instance(rng, p);
        const RelaxedSolution r = relaxed_qp_solve(ils);
        CHECK(r.converged);
        CHECK(r.projected_gradient_norm <= 1e-6);
        for (double v : r.U)
            CHECK(std::abs(v) <= 1.0);
        for (int k = 0; k < 100; ++k)
            CHECK(r.objective <= ils_cost(ils, std::span<const double>(random_vec(rng, ils.size()))) + 1e-12);
        if (N * m <= 8)
            CHECK(r.objective <= exhaustive_solve(ils, N, m).cost + 1e-12);
    }
}

TEST_CASE("relaxed QP reports non-convergence") {
    std::mt19937_64 rng(49);
    const MpcProblem p = random_problem(rng, 2, 3, 4);
    const IlsInstance ils = random_instance(rng, p);
    const RelaxedSolution r = relaxed_qp_solve(ils, 1e-14, 2);
    if (!r.converged)
        CHECK(r.iterations == 2);
    CHECK_THROWS((void)relaxed_qp_solve(ils, 0.0));
}

TEST_CASE("relaxed QP with a precomputed step constant") {
    std::mt19937_64 rng(50);
    const MpcProblem p = random_problem(rng, 2, 2, 3);
    const IlsInstance ils = random_instance(rng, p);
    const double L = relaxed_lipschitz(ils.W);
    const RelaxedSolution a = relaxed_qp_solve(ils);
    const RelaxedSolution b = relaxed_qp_solve(ils, kRelaxedTol, kRelaxedMaxIter, L);
    CHECK(a.U == b.U);
    CHECK(L >= power_iteration_max_eig(naive_mul(ils.W.transpose(), ils.W)));
}

TEST_CASE("suboptimal_step selection") {
    const MpcProblem p = reference_problem(3);
    const ExtensiveForm e = build_extensive(p);

    SUBCASE("first step takes the rounded sequence") {
        const Vec x{1.0, 0.0}, xr{2.0, 0.0};
        const IlsInstance ils = ils_transform(e, x, reference_horizon(p.ref, xr, 3));
        const SuboptimalChoice c = suboptimal_step(p, ils, x, xr, std::nullopt);
        CHECK_FALSE(c.used_shifted);
        CHECK(c.selected == c.rounded);
        CHECK(c.applied == Ternary(c.selected.begin(), c.selected.begin() + 4));
    }
    SUBCASE("equilibrium stays at zero") {
        const Vec z{0.0, 0.0};
        const IlsInstance ils = ils_transform(e, z, reference_horizon(p.ref, z, 3));
        const SuboptimalChoice c = suboptimal_step(p, ils, z, z, Ternary(12, 0));
        CHECK(c.selected == Ternary(12, 0));
        CHECK(c.cost_selected == 0.0);
        CHECK(c.used_shifted);
    }
    SUBCASE("second step picks the cheaper candidate") {
        Vec x{1.0, 0.0}, xr{2.0, 0.0};
        IlsInstance ils = ils_transform(e, x, reference_horizon(p.ref, xr, 3));
        const SuboptimalChoice first = suboptimal_step(p, ils, x, xr, std::nullopt);
        x = plant_step(p.plant, x, first.applied);
        xr = lti_step(p.ref, xr);
        ils = ils_transform(e, x, reference_horizon(p.ref, xr, 3));
        const SuboptimalChoice c = suboptimal_step(p, ils, x, xr, first.selected);
        REQUIRE(c.shifted);
        CHECK(*c.shifted == shift_sequence(first.selected, 4));
        const double js = stage_cost(p, x, xr, *c.shifted);
        const double jr = stage_cost(p, x, xr, c.rounded);
        CHECK(c.cost_selected == std::min(js, jr));
        CHECK(stage_cost(p, x, xr, c.selected) == c.cost_selected);
    }
    SUBCASE("wrong previous length") {
        const Vec z{0.0, 0.0};
        const IlsInstance ils = ils_transform(e, z, reference_horizon(p.ref, z, 3));
        CHECK_THROWS_AS((void)suboptimal_step(p, ils, z, z, Ternary(8, 0)), DimensionError);
    }
}

} // TEST_SUITE
