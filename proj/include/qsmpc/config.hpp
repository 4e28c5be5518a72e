#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "qsmpc/emulator.hpp"

namespace qsmpc {

// Parse or validation failure; the message names the offending field.
struct ConfigError : Error {
    using Error::Error;
};

struct InitialPoint {
    Vec x_q;
    Vec x_ref;
};

// Experiment description read from JSON:
//
//   {
//     "system":  {"H": [[0, 1], [-1, -2]], "h": 0.2},
//     "plant":   {"B_q": [[1, 0, -1, 0], [0, 1, 0, -1]], "A_q_mode": "exp"},
//     "weights": {"P": 50, "Q": 0.1, "R": 0.05},
//     "horizon": 5,
//     "run": {"steps": 60,
//             "initial_points": {"quantized": {"radius": 1, "count": 8},
//                                "reference": {"radius": 2, "count": 8}}},
//     "solver": "sphere",
//     "seed": 1
//   }
//
// Matrices are nested row arrays. A_q_mode is "exp" (e^{Hh}), "identity", or
// an explicit matrix. A weight given as a number means that multiple of the
// identity. initial_points is either a list of {"x_q": [...], "x_ref": [...]}
// or a circle spec; a circle spec {radius, count[, phase]} places point i at
// radius·(cos α_i, sin α_i) with α_i = phase + 2πi/count. A bare circle spec
// starts reference and plant at the same points.
struct ConfigFile {
    MpcProblem problem;
    std::vector<InitialPoint> initial_points;
    std::size_t steps = 1;
    std::string solver = "sphere";
    std::uint64_t seed = 0;
};

[[nodiscard]] ConfigFile parse_config(const std::string& text);
[[nodiscard]] ConfigFile load_config(const std::string& path);

// Points on a circle in the plane of the first two coordinates.
[[nodiscard]] std::vector<Vec> circle_points(double radius, std::size_t count, std::size_t dim, double phase = 0.0);

// One RunConfig per initial point.
[[nodiscard]] std::vector<RunConfig> make_runs(const ConfigFile& cfg, SolverKind solver,
                                               std::shared_ptr<const ClassifierModel> model = nullptr,
                                               bool record_timing = true);

// The reference experiment: H = [[0,1],[-1,-2]], h = 0.2, four-column B_q,
// P = 50I, Q = 0.1I, R = 0.05I, A_q = e^{Hh}.
[[nodiscard]] MpcProblem reference_problem(std::size_t N, bool identity_plant = false);

} // namespace qsmpc
