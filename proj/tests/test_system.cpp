#include <doctest.h>

#include <set>

#include "support.hpp"

using namespace qsmpc;
using namespace qsmpc::testing;

namespace {

const Mat kH = Mat::from_rows({{0.0, 1.0}, {-1.0, -2.0}});
const Mat kBq = Mat::from_rows({{1.0, 0.0, -1.0, 0.0}, {0.0, 1.0, 0.0, -1.0}});

Mat nilpotent_exp(double t) {
    return (Mat::identity(2) + (kH + Mat::identity(2)) * t) * std::exp(-t);
}

} // namespace

TEST_SUITE("system") {

TEST_CASE("discretize") {
    CHECK(discretize(Mat(2, 2), 0.7) == Mat::identity(2));
    CHECK(max_abs_diff(discretize(kH, 0.2), nilpotent_exp(0.2)) <= 1e-10);
    const Mat d = discretize(Mat::from_rows({{-1.0, 0.0}, {0.0, -2.0}}), 1.0);
    CHECK(d(0, 0) == doctest::Approx(std::exp(-1.0)).epsilon(1e-13));
    CHECK(d(1, 1) == doctest::Approx(std::exp(-2.0)).epsilon(1e-13));
    CHECK_THROWS((void)discretize(kH, 0.0));
    CHECK_THROWS_AS((void)discretize(Mat(2, 3), 0.1), DimensionError);
}

TEST_CASE("reference caches e^{Hh} and classifies stability") {
    const LtiReference ref(kH, 0.2);
    CHECK(max_abs_diff(ref.A_d(), nilpotent_exp(0.2)) <= 1e-10);
    CHECK(ref.is_hurwitz());
    CHECK_FALSE(LtiReference(Mat::from_rows({{0.0, 1.0}, {-1.0, 0.0}}), 0.1).is_hurwitz());
    CHECK_FALSE(LtiReference(Mat::identity(2), 0.1).is_hurwitz());
}

TEST_CASE("lti_step") {
    const LtiReference ref(kH, 0.2);
    CHECK(lti_step(ref, Vec{0.0, 0.0}) == Vec{0.0, 0.0});
    CHECK(lti_step(ref, Vec{1.0, 0.0}) == ref.A_d().column(0));
    const Vec x{0.3, -1.7};
    const Vec two = lti_step(ref, lti_step(ref, x));
    CHECK(max_abs_diff(two, nilpotent_exp(0.4) * x) <= 1e-8);
    CHECK_THROWS_AS((void)lti_step(ref, Vec{1.0}), DimensionError);
}

TEST_CASE("repeated lti_step follows the flow for 100 steps") {
    const LtiReference ref(kH, 0.2);
    Vec x{2.0, 0.0};
    for (int k = 1; k <= 100; ++k) {
        x = lti_step(ref, x);
        CHECK(max_abs_diff(x, nilpotent_exp(0.2 * k) * Vec{2.0, 0.0}) <= 1e-7);
    }
}

TEST_CASE("plant_step") {
    const QuantizedPlant ident(Mat::identity(2), kBq, 0.2);
    CHECK(plant_step(ident, Vec{0.4, -0.1}, Ternary{0, 0, 0, 0}) == Vec{0.4, -0.1});
    const Vec e = plant_step(ident, Vec{0.0, 0.0}, Ternary{1, 0, 0, 0});
    CHECK(e[0] == doctest::Approx(0.2));
    CHECK(e[1] == 0.0);
    const Ternary u{1, -1, 0, 1};
    const Ternary neg{-1, 1, 0, -1};
    const Vec a = plant_step(ident, Vec{0.0, 0.0}, u);
    const Vec b = plant_step(ident, Vec{0.0, 0.0}, neg);
    CHECK(a[0] == -b[0]);
    CHECK(a[1] == -b[1]);
    CHECK_THROWS_AS((void)plant_step(ident, Vec{0.0, 0.0}, Ternary{2, 0, 0, 0}), DimensionError);
    CHECK_THROWS_AS((void)plant_step(ident, Vec{0.0, 0.0}, Ternary{1, 0}), DimensionError);
    CHECK_THROWS_AS((void)plant_step(ident, Vec{0.0}, Ternary{0, 0, 0, 0}), DimensionError);
}

TEST_CASE("plant_step is affine in u") {
    std::mt19937_64 rng(21);
    const QuantizedPlant plant(random_mat(rng, 2, 2), kBq, 0.2);
    for (int trial = 0; trial < 50; ++trial) {
        const Vec x = random_vec(rng, 2);
        const Ternary u1 = random_ternary(rng, 4);
        Ternary u2(4, 0);
        for (std::size_t i = 0; i < 4; ++i)
            u2[i] = u1[i] == 0 ? static_cast<int>(rng() % 3) - 1 : 0;
        Ternary sum(4);
        for (std::size_t i = 0; i < 4; ++i)
            sum[i] = u1[i] + u2[i];
        const Vec lhs = add(plant_step(plant, x, u1), plant_step(plant, Vec{0.0, 0.0}, u2));
        CHECK(max_abs_diff(lhs, plant_step(plant, x, sum)) <= 1e-14);
    }
}

TEST_CASE("enumerate_alphabet") {
    CHECK(enumerate_alphabet(1) == std::vector<Ternary>{{-1}, {0}, {1}});
    const auto two = enumerate_alphabet(2);
    REQUIRE(two.size() == 9);
    CHECK(two.front() == Ternary{-1, -1});
    CHECK(two.back() == Ternary{1, 1});
    const auto four = enumerate_alphabet(4);
    CHECK(four.size() == 81);
    CHECK(std::set<Ternary>(four.begin(), four.end()).size() == 81);
    CHECK(std::is_sorted(four.begin(), four.end()));
    CHECK(enumerate_alphabet(0).size() == 1);
    CHECK_THROWS_AS((void)enumerate_alphabet(13), GuardExceeded);
}

TEST_CASE("the reference B_q spans the 5 x 5 integer grid") {
    std::set<std::pair<long, long>> dirs;
    for (const auto& u : enumerate_alphabet(4)) {
        const Vec d = kBq * to_real(u);
        dirs.emplace(std::lround(d[0]), std::lround(d[1]));
    }
    CHECK(dirs.size() == 25);
    for (long a = -2; a <= 2; ++a)
        for (long b = -2; b <= 2; ++b)
            CHECK(dirs.count({a, b}) == 1);
}

TEST_CASE("next_ternary walks the alphabet and wraps") {
    Ternary u{-1, -1, -1};
    std::size_t count = 1;
    while (next_ternary(u))
        ++count;
    CHECK(count == 27);
    CHECK(u == Ternary{-1, -1, -1});
}

TEST_CASE("plant validates its shapes") {
    CHECK_THROWS_AS(QuantizedPlant(Mat(2, 3), kBq, 0.2), DimensionError);
    CHECK_THROWS_AS(QuantizedPlant(Mat::identity(3), kBq, 0.2), DimensionError);
    CHECK_THROWS(QuantizedPlant(Mat::identity(2), kBq, -0.2));
}

} // TEST_SUITE
