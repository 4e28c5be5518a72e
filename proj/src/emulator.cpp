#include "qsmpc/emulator.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <thread>

namespace qsmpc {

std::string_view solver_name(SolverKind kind) noexcept {
    switch (kind) {
    case SolverKind::SphereExact:
        return "sphere";
    case SolverKind::Suboptimal:
        return "suboptimal";
    case SolverKind::Exhaustive:
        return "exhaustive";
    case SolverKind::Classifier:
        return "classifier";
    }
    return "unknown";
}

std::optional<SolverKind> parse_solver(std::string_view name) noexcept {
    if (name == "sphere" || name == "sphere-exact")
        return SolverKind::SphereExact;
    if (name == "suboptimal")
        return SolverKind::Suboptimal;
    if (name == "exhaustive")
        return SolverKind::Exhaustive;
    if (name == "classifier")
        return SolverKind::Classifier;
    return std::nullopt;
}

double TrajectoryLog::total_solve_ms() const noexcept {
    double t = 0.0;
    for (const auto& s : steps)
        t += s.solve_ms;
    return t;
}

bool same_trajectory(const TrajectoryLog& a, const TrajectoryLog& b) noexcept {
    if (a.solver != b.solver || a.n != b.n || a.m != b.m || a.N != b.N || a.seed != b.seed || !(a.B_q == b.B_q) ||
        a.final_x_q != b.final_x_q || a.final_x_ref != b.final_x_ref || a.failure != b.failure ||
        a.steps.size() != b.steps.size())
        return false;
    for (std::size_t i = 0; i < a.steps.size(); ++i) {
        const auto& x = a.steps[i];
        const auto& y = b.steps[i];
        if (x.k != y.k || x.x_q != y.x_q || x.x_ref != y.x_ref || x.u != y.u || x.J != y.J ||
            x.selected != y.selected || x.shifted_candidate != y.shifted_candidate ||
            x.cost_shifted != y.cost_shifted || x.cost_rounded != y.cost_rounded ||
            x.nodes_visited != y.nodes_visited || x.solver_ok != y.solver_ok || x.note != y.note)
            return false;
    }
    return true;
}

Vec classifier_features(std::span<const double> x_q, std::span<const double> x_ref) {
    if (x_q.size() != x_ref.size())
        throw DimensionError("classifier_features: state dimensions differ");
    Vec f;
    f.reserve(3 * x_q.size());
    f.insert(f.end(), x_q.begin(), x_q.end());
    f.insert(f.end(), x_ref.begin(), x_ref.end());
    for (std::size_t i = 0; i < x_q.size(); ++i)
        f.push_back(x_ref[i] - x_q[i]);
    return f;
}

namespace {

struct StepChoice {
    Ternary selected;
    std::optional<Ternary> shifted;
    std::optional<double> cost_shifted;
    std::optional<double> cost_rounded;
    std::size_t nodes = 0;
};

// Per-run solver data that depends only on the problem.
struct RunCache {
    std::optional<BlockAlphabet> alphabet;
    std::optional<double> lipschitz;
};

StepChoice choose(const RunConfig& cfg, const ExtensiveForm& ext, const RunCache& cache, const Vec& x, const Vec& xr,
                  const std::optional<Ternary>& prev) {
    const MpcProblem& prob = cfg.problem;
    const std::size_t N = prob.N;
    const std::size_t m = prob.m();
    StepChoice out;

    if (cfg.solver == SolverKind::Classifier) {
        const Ternary u = predict_input(cfg.model->mlp, cfg.model->codec, classifier_features(x, xr));
        out.selected.assign(N * m, 0);
        std::copy(u.begin(), u.end(), out.selected.begin());
        return out;
    }

    const IlsInstance ils = ils_transform(ext, x, reference_horizon(prob.ref, xr, N));
    switch (cfg.solver) {
    case SolverKind::SphereExact: {
        const Ternary babai = babai_round(ils.u_uncon);
        if (prev)
            out.shifted = shift_sequence(*prev, m);
        const double radius = initial_radius(ils, babai, out.shifted);
        auto sol = sphere_decode(ils, radius, N, m, cache.alphabet ? &*cache.alphabet : nullptr);
        out.selected = std::move(sol.U);
        out.nodes = sol.nodes_visited;
        break;
    }
    case SolverKind::Exhaustive: {
        auto sol = exhaustive_solve(ils, N, m);
        out.selected = std::move(sol.U);
        out.nodes = sol.nodes_visited;
        break;
    }
    case SolverKind::Suboptimal: {
        auto ch = suboptimal_step(prob, ils, x, xr, prev, cache.lipschitz);
        out.selected = std::move(ch.selected);
        out.shifted = std::move(ch.shifted);
        out.cost_shifted = ch.cost_shifted;
        out.cost_rounded = ch.cost_rounded;
        break;
    }
    case SolverKind::Classifier:
        break;
    }
    return out;
}

} // namespace

TrajectoryLog run_emulation(const RunConfig& cfg) {
    const MpcProblem& prob = cfg.problem;
    const std::size_t n = prob.n();
    const std::size_t m = prob.m();
    if (cfg.x_q0.size() != n || cfg.x_ref0.size() != n)
        throw DimensionError("run_emulation: initial states must have dimension " + std::to_string(n));
    if (cfg.steps == 0)
        throw Error("run_emulation: steps must be at least 1");
    if (cfg.solver == SolverKind::Classifier) {
        if (!cfg.model)
            throw Error("run_emulation: classifier solver requires a model");
        if (cfg.model->mlp.input_dim() != 3 * n)
            throw DimensionError("run_emulation: classifier input dimension does not match 3n");
        if (cfg.model->codec.size() != cfg.model->mlp.class_count())
            throw DimensionError("run_emulation: classifier codec does not match its output layer");
        for (const auto& u : cfg.model->codec.canonical_inputs())
            if (u.size() != m)
                throw DimensionError("run_emulation: classifier codec was built for a different input count");
    }
    if (cfg.solver == SolverKind::Exhaustive) {
        std::size_t count = 1;
        for (std::size_t i = 0; i < prob.stacked_size(); ++i)
            if ((count *= 3) > kExhaustiveGuard)
                throw GuardExceeded("run_emulation: exhaustive solver needs 3^" +
                                    std::to_string(prob.stacked_size()) + " candidates (limit 2^20)");
    }

    const ExtensiveForm ext = build_extensive(prob);
    // Inputs with a common direction and a larger penalty never beat their
    // representative, so the sphere search branches per block over the
    // representatives. Inputs too wide to enumerate fall back to coordinates.
    RunCache cache;
    if (cfg.solver == SolverKind::SphereExact) {
        try {
            cache.alphabet = reduced_block_alphabet(prob.plant.B_q(), prob.R);
        } catch (const GuardExceeded&) {
        }
    }
    if (cfg.solver == SolverKind::Suboptimal)
        cache.lipschitz = relaxed_lipschitz(ext.W);

    TrajectoryLog log;
    log.solver = cfg.solver;
    log.n = n;
    log.m = m;
    log.N = prob.N;
    log.seed = cfg.seed;
    log.B_q = prob.plant.B_q();
    log.steps.reserve(cfg.steps);

    Vec x = cfg.x_q0;
    Vec xr = cfg.x_ref0;
    std::optional<Ternary> prev;
    for (std::size_t k = 0; k < cfg.steps; ++k) {
        StepRecord rec;
        rec.k = k;
        rec.x_q = x;
        rec.x_ref = xr;

        const auto t0 = std::chrono::steady_clock::now();
        StepChoice choice;
        try {
            choice = choose(cfg, ext, cache, x, xr, prev);
        } catch (const DimensionError&) {
            throw;
        } catch (const Error& e) {
            choice = StepChoice{};
            choice.selected.assign(prob.stacked_size(), 0);
            rec.solver_ok = false;
            rec.note = e.what();
        }
        const auto t1 = std::chrono::steady_clock::now();
        if (cfg.record_timing)
            rec.solve_ms = std::chrono::duration<double, std::milli>(t1 - t0).count();

        rec.selected = std::move(choice.selected);
        rec.shifted_candidate = std::move(choice.shifted);
        rec.cost_shifted = choice.cost_shifted;
        rec.cost_rounded = choice.cost_rounded;
        rec.nodes_visited = choice.nodes;
        rec.u.assign(rec.selected.begin(), rec.selected.begin() + static_cast<std::ptrdiff_t>(m));
        rec.J = stage_cost(prob, x, xr, std::span<const int>(rec.selected));

        x = plant_step(prob.plant, x, rec.u);
        xr = lti_step(prob.ref, xr);
        prev = rec.selected;
        log.steps.push_back(std::move(rec));
    }
    log.final_x_q = std::move(x);
    log.final_x_ref = std::move(xr);
    return log;
}

Metrics compute_metrics(const TrajectoryLog& log) {
    if (log.steps.empty())
        throw Error("compute_metrics: empty log");
    Metrics out;
    std::vector<const Vec*> states;
    for (const auto& s : log.steps) {
        out.max_error = std::max(out.max_error, norm2(sub(s.x_q, s.x_ref)));
        states.push_back(&s.x_q);
    }
    if (!log.final_x_q.empty()) {
        out.final_error = norm2(sub(log.final_x_q, log.final_x_ref));
        states.push_back(&log.final_x_q);
    } else {
        out.final_error = norm2(sub(log.steps.back().x_q, log.steps.back().x_ref));
    }
    out.max_error = std::max(out.max_error, out.final_error);

    for (std::size_t k = 0; k + 1 < log.steps.size(); ++k)
        if (log.steps[k + 1].J > log.steps[k].J + kMonotoneTol)
            ++out.cost_monotone_violations;

    const auto tail = std::max<std::size_t>(
        1, static_cast<std::size_t>(std::ceil(0.2 * static_cast<double>(states.size()))));
    for (std::size_t i = states.size() - tail; i < states.size(); ++i)
        out.terminal_ball_radius = std::max(out.terminal_ball_radius, norm2(*states[i]));
    return out;
}

Dataset collect_dataset(const std::vector<TrajectoryLog>& logs, const DirectionCodec& codec) {
    Dataset data;
    for (const auto& log : logs) {
        if (log.failure)
            throw Error("collect_dataset: cannot harvest a failed run");
        if (!codec.canonical_inputs().empty() && codec.canonical_inputs().front().size() != log.m)
            throw DimensionError("collect_dataset: codec was built for a different plant");
        data.feature_dim = 3 * log.n;
        for (const auto& s : log.steps) {
            const auto cls = codec.class_of_input(log.B_q, s.u);
            if (!cls)
                throw DimensionError("collect_dataset: applied input direction is not in the codec");
            data.push_back(classifier_features(s.x_q, s.x_ref), *cls);
        }
    }
    return data;
}

std::size_t batch_thread_cap() {
    if (const char* env = std::getenv("QSMPC_THREADS")) {
        char* end = nullptr;
        const long v = std::strtol(env, &end, 10);
        if (end != env && *end == '\0' && v > 0)
            return static_cast<std::size_t>(v);
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

std::vector<TrajectoryLog> batch_run(const std::vector<RunConfig>& cfgs) {
    std::vector<TrajectoryLog> out(cfgs.size());
    auto run_one = [&](std::size_t i) {
        try {
            out[i] = run_emulation(cfgs[i]);
        } catch (const std::exception& e) {
            out[i] = TrajectoryLog{};
            out[i].solver = cfgs[i].solver;
            out[i].seed = cfgs[i].seed;
            out[i].failure = e.what();
        }
    };
    const std::size_t workers = std::min(batch_thread_cap(), cfgs.size());
    if (workers <= 1) {
        for (std::size_t i = 0; i < cfgs.size(); ++i)
            run_one(i);
        return out;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w)
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < cfgs.size(); i = next++)
                run_one(i);
        });
    for (auto& t : pool)
        t.join();
    return out;
}

// ============================================================================
// CSV
// ============================================================================

std::string format_real(double v) {
    char buf[64];
    for (int prec = 15; prec <= 17; ++prec) {
        std::snprintf(buf, sizeof buf, "%.*g", prec, v);
        if (std::strtod(buf, nullptr) == v)
            break;
    }
    return buf;
}

void write_trajectory_csv(std::ostream& out, const TrajectoryLog& log) {
    out << 'k';
    for (std::size_t i = 0; i < log.n; ++i)
        out << ",xq_" << i;
    for (std::size_t i = 0; i < log.n; ++i)
        out << ",xref_" << i;
    for (std::size_t i = 0; i < log.m; ++i)
        out << ",u_" << i;
    out << ",J,solve_ms\n";
    for (const auto& s : log.steps) {
        out << s.k;
        for (double v : s.x_q)
            out << ',' << format_real(v);
        for (double v : s.x_ref)
            out << ',' << format_real(v);
        for (int v : s.u)
            out << ',' << v;
        out << ',' << format_real(s.J) << ',' << format_real(s.solve_ms) << '\n';
    }
}

void write_trajectory_csv(const std::string& path, const TrajectoryLog& log) {
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw Error("cannot write " + path);
    write_trajectory_csv(out, log);
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream ss(line);
    while (std::getline(ss, cell, ','))
        cells.push_back(cell);
    if (!line.empty() && line.back() == ',')
        cells.emplace_back();
    for (auto& c : cells) {
        while (!c.empty() && (c.back() == '\r' || c.back() == ' '))
            c.pop_back();
        while (!c.empty() && c.front() == ' ')
            c.erase(c.begin());
    }
    return cells;
}

double parse_real(const std::string& cell, const std::string& path, std::size_t line_no) {
    char* end = nullptr;
    const double v = std::strtod(cell.c_str(), &end);
    if (cell.empty() || end != cell.c_str() + cell.size())
        throw Error(path + ":" + std::to_string(line_no) + ": not a number: '" + cell + "'");
    return v;
}

std::size_t count_prefix(const std::vector<std::string>& header, const std::string& prefix) {
    std::size_t c = 0;
    for (const auto& h : header)
        if (h.rfind(prefix, 0) == 0)
            ++c;
    return c;
}

} // namespace

TrajectoryTable read_trajectory_csv(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw Error("cannot read " + path);
    std::string line;
    if (!std::getline(in, line))
        throw Error(path + ": empty file");
    const auto header = split_csv_line(line);
    TrajectoryTable t;
    t.n = count_prefix(header, "xq_");
    t.m = count_prefix(header, "u_");
    const std::size_t expect = 1 + 2 * t.n + t.m + 2;
    if (header.empty() || header[0] != "k" || t.n == 0 || count_prefix(header, "xref_") != t.n ||
        header.size() != expect)
        throw Error(path + ": unrecognized trajectory header");

    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line == "\r")
            continue;
        const auto cells = split_csv_line(line);
        if (cells.size() != expect)
            throw Error(path + ":" + std::to_string(line_no) + ": expected " + std::to_string(expect) + " cells");
        std::size_t c = 0;
        t.k.push_back(static_cast<std::size_t>(parse_real(cells[c++], path, line_no)));
        Vec xq, xr;
        Ternary u;
        for (std::size_t i = 0; i < t.n; ++i)
            xq.push_back(parse_real(cells[c++], path, line_no));
        for (std::size_t i = 0; i < t.n; ++i)
            xr.push_back(parse_real(cells[c++], path, line_no));
        for (std::size_t i = 0; i < t.m; ++i)
            u.push_back(static_cast<int>(parse_real(cells[c++], path, line_no)));
        t.x_q.push_back(std::move(xq));
        t.x_ref.push_back(std::move(xr));
        t.u.push_back(std::move(u));
        t.J.push_back(parse_real(cells[c++], path, line_no));
    }
    return t;
}

void write_dataset_csv(std::ostream& out, const Dataset& data) {
    for (std::size_t i = 0; i < data.feature_dim; ++i)
        out << "f_" << i << ',';
    out << "label\n";
    for (std::size_t r = 0; r < data.size(); ++r) {
        for (double v : data.features[r])
            out << format_real(v) << ',';
        out << data.labels[r] << '\n';
    }
}

void write_dataset_csv(const std::string& path, const Dataset& data) {
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw Error("cannot write " + path);
    write_dataset_csv(out, data);
}

Dataset read_dataset_csv(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw Error("cannot read " + path);
    std::string line;
    if (!std::getline(in, line))
        throw Error(path + ": empty file");
    const auto header = split_csv_line(line);
    const std::size_t dim = count_prefix(header, "f_");
    if (header.size() != dim + 1 || header.back() != "label")
        throw Error(path + ": unrecognized dataset header");
    Dataset data;
    data.feature_dim = dim;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line == "\r")
            continue;
        const auto cells = split_csv_line(line);
        if (cells.size() != dim + 1)
            throw Error(path + ":" + std::to_string(line_no) + ": expected " + std::to_string(dim + 1) + " cells");
        Vec f(dim);
        for (std::size_t i = 0; i < dim; ++i)
            f[i] = parse_real(cells[i], path, line_no);
        const double label = parse_real(cells[dim], path, line_no);
        if (label < 0 || label != std::floor(label))
            throw Error(path + ":" + std::to_string(line_no) + ": label must be a non-negative integer");
        data.push_back(std::move(f), static_cast<std::size_t>(label));
    }
    return data;
}

} // namespace qsmpc
