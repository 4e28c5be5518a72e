#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "qsmpc/classifier.hpp"
#include "qsmpc/mpc_core.hpp"
#include "qsmpc/solvers.hpp"

namespace qsmpc {

enum class SolverKind { SphereExact, Suboptimal, Exhaustive, Classifier };

[[nodiscard]] std::string_view solver_name(SolverKind kind) noexcept;
// Accepts "sphere", "sphere-exact", "suboptimal", "exhaustive", "classifier".
[[nodiscard]] std::optional<SolverKind> parse_solver(std::string_view name) noexcept;

struct RunConfig {
    MpcProblem problem;
    SolverKind solver = SolverKind::SphereExact;
    Vec x_q0;
    Vec x_ref0;
    std::size_t steps = 1;
    std::uint64_t seed = 0;
    // Required for SolverKind::Classifier.
    std::shared_ptr<const ClassifierModel> model;
    // Wall-clock solver timing; disable for byte-reproducible logs.
    bool record_timing = true;
};

struct StepRecord {
    std::size_t k = 0;
    Vec x_q;
    Vec x_ref;
    Ternary u;         // applied input
    double J = 0.0;    // horizon cost of the selected sequence at (x_q, x_ref)
    double solve_ms = 0.0;
    Ternary selected;  // full stacked sequence the input was taken from
    std::optional<Ternary> shifted_candidate;
    std::optional<double> cost_shifted;  // suboptimal solver only
    std::optional<double> cost_rounded;  // suboptimal solver only
    std::size_t nodes_visited = 0;
    bool solver_ok = true;
    std::string note;
};

struct TrajectoryLog {
    SolverKind solver = SolverKind::SphereExact;
    std::size_t n = 0;
    std::size_t m = 0;
    std::size_t N = 0;
    std::uint64_t seed = 0;
    Mat B_q;
    std::vector<StepRecord> steps;
    Vec final_x_q;    // state after the last step
    Vec final_x_ref;
    std::optional<std::string> failure;  // set when the run aborted

    [[nodiscard]] double total_solve_ms() const noexcept;
};

// Everything except the wall-clock fields compares bitwise.
[[nodiscard]] bool same_trajectory(const TrajectoryLog& a, const TrajectoryLog& b) noexcept;

struct Metrics {
    double max_error = 0.0;
    double final_error = 0.0;
    std::size_t cost_monotone_violations = 0;
    double terminal_ball_radius = 0.0;
};

inline constexpr double kMonotoneTol = 1e-9;

// Receding-horizon loop: solve, apply the first input block, advance plant and
// reference by one step. The J logged for the classifier solver is the cost of
// its single input followed by zero blocks.
[[nodiscard]] TrajectoryLog run_emulation(const RunConfig& cfg);

[[nodiscard]] Metrics compute_metrics(const TrajectoryLog& log);

// Classifier features at one step: (x_q, x_ref, x_ref - x_q).
[[nodiscard]] Vec classifier_features(std::span<const double> x_q, std::span<const double> x_ref);

[[nodiscard]] Dataset collect_dataset(const std::vector<TrajectoryLog>& logs, const DirectionCodec& codec);

// Worker count for batch_run: QSMPC_THREADS when set and positive, otherwise
// the hardware concurrency.
[[nodiscard]] std::size_t batch_thread_cap();

// Independent runs, possibly concurrent; output order matches input order.
// A run that throws yields a log with `failure` set.
[[nodiscard]] std::vector<TrajectoryLog> batch_run(const std::vector<RunConfig>& cfgs);

// ============================================================================
// CSV persistence
// ============================================================================

void write_trajectory_csv(std::ostream& out, const TrajectoryLog& log);
void write_trajectory_csv(const std::string& path, const TrajectoryLog& log);

struct TrajectoryTable {
    std::size_t n = 0;
    std::size_t m = 0;
    std::vector<std::size_t> k;
    std::vector<Vec> x_q;
    std::vector<Vec> x_ref;
    std::vector<Ternary> u;
    std::vector<double> J;
};

[[nodiscard]] TrajectoryTable read_trajectory_csv(const std::string& path);

void write_dataset_csv(std::ostream& out, const Dataset& data);
void write_dataset_csv(const std::string& path, const Dataset& data);
[[nodiscard]] Dataset read_dataset_csv(const std::string& path);

// Shortest round-trip representation used in every CSV cell.
[[nodiscard]] std::string format_real(double v);

} // namespace qsmpc
