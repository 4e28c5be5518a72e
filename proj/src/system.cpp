#include "qsmpc/system.hpp"

#include <algorithm>
#include <string>
#include <utility>

namespace qsmpc {

bool is_ternary(std::span<const int> u) noexcept {
    return std::all_of(u.begin(), u.end(), [](int v) { return v >= -1 && v <= 1; });
}

Vec to_real(std::span<const int> u) { return Vec(u.begin(), u.end()); }

LtiReference::LtiReference(Mat H, double h) : H_(std::move(H)), h_(h) {
    if (!H_.is_square())
        throw DimensionError("LtiReference: H must be square");
    if (!(h_ > 0.0))
        throw Error("LtiReference: sampling interval must be positive");
    A_d_ = discretize(H_, h_);
}

bool LtiReference::is_hurwitz() const {
    const auto ev = eigenvalues(H_);
    return std::all_of(ev.begin(), ev.end(), [](const auto& l) { return l.real() < 0.0; });
}

QuantizedPlant::QuantizedPlant(Mat A_q, Mat B_q, double h) : A_q_(std::move(A_q)), B_q_(std::move(B_q)), h_(h) {
    if (!A_q_.is_square())
        throw DimensionError("QuantizedPlant: A_q must be square");
    if (B_q_.rows() != A_q_.rows())
        throw DimensionError("QuantizedPlant: B_q has " + std::to_string(B_q_.rows()) + " rows, expected " +
                             std::to_string(A_q_.rows()));
    if (B_q_.cols() == 0)
        throw DimensionError("QuantizedPlant: B_q has no columns");
    if (!(h_ > 0.0))
        throw Error("QuantizedPlant: time step must be positive");
    if (!A_q_.all_finite() || !B_q_.all_finite())
        throw NonFiniteValue("QuantizedPlant: non-finite entry");
}

Mat discretize(const Mat& H, double h) {
    if (!(h > 0.0))
        throw Error("discretize: sampling interval must be positive");
    return mat_exp(H * h);
}

Vec lti_step(const LtiReference& ref, std::span<const double> x) {
    if (x.size() != ref.n())
        throw DimensionError("lti_step: state has dimension " + std::to_string(x.size()) + ", expected " +
                             std::to_string(ref.n()));
    return ref.A_d() * x;
}

Vec plant_step(const QuantizedPlant& plant, std::span<const double> x_q, std::span<const int> u) {
    if (!is_ternary(u))
        throw DimensionError("plant_step: input entry outside {-1, 0, 1}");
    const Vec ur = to_real(u);
    return plant_step_relaxed(plant, x_q, ur);
}

Vec plant_step_relaxed(const QuantizedPlant& plant, std::span<const double> x_q, std::span<const double> u) {
    if (x_q.size() != plant.n())
        throw DimensionError("plant_step: state has dimension " + std::to_string(x_q.size()) + ", expected " +
                             std::to_string(plant.n()));
    if (u.size() != plant.m())
        throw DimensionError("plant_step: input has dimension " + std::to_string(u.size()) + ", expected " +
                             std::to_string(plant.m()));
    Vec next = plant.A_q() * x_q;
    const Vec bu = plant.B_q() * u;
    for (std::size_t i = 0; i < next.size(); ++i)
        next[i] += plant.h() * bu[i];
    return next;
}

bool next_ternary(std::span<int> u) noexcept {
    for (std::size_t i = u.size(); i-- > 0;) {
        if (u[i] < 1) {
            ++u[i];
            return true;
        }
        u[i] = -1;
    }
    return false;
}

std::vector<Ternary> enumerate_alphabet(std::size_t m) {
    if (m > kMaxAlphabetInputs)
        throw GuardExceeded("enumerate_alphabet: m = " + std::to_string(m) + " exceeds the limit of " +
                            std::to_string(kMaxAlphabetInputs));
    std::vector<Ternary> out;
    std::size_t count = 1;
    for (std::size_t i = 0; i < m; ++i)
        count *= 3;
    out.reserve(count);
    Ternary u(m, -1);
    do {
        out.push_back(u);
    } while (next_ternary(u));
    return out;
}

} // namespace qsmpc
