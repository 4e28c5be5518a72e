// qsmpc: check, emulate, collect, train and plot workflows.
//
// Exit status: 0 success, 1 the checked property does not hold (check) or a
// run failed (emulate, collect), 2 usage, parse or input errors.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "qsmpc/config.hpp"
#include "qsmpc/plot.hpp"

namespace fs = std::filesystem;
using namespace qsmpc;

namespace {

constexpr int kOk = 0;
constexpr int kFailed = 1;
constexpr int kUsage = 2;

struct UsageError : Error {
    using Error::Error;
};

std::string vec_str(std::span<const double> v) {
    std::string s = "(";
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i)
            s += ", ";
        s += format_real(v[i]);
    }
    return s + ")";
}

std::string codec_sidecar(const std::string& data_path) { return data_path + ".codec.json"; }

std::string read_text(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw Error("cannot read " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

SolverKind solver_from(const std::string& name) {
    const auto kind = parse_solver(name);
    if (!kind)
        throw UsageError("unknown solver '" + name + "' (sphere, suboptimal, exhaustive, classifier)");
    return *kind;
}

int cmd_check(const std::string& config_path) {
    const ConfigFile cfg = load_config(config_path);
    const Theorem1Report rep = check_theorem1(cfg.problem);
    std::printf("cond_a  A_q = e^{Hh}                 %s  (max |A_q - e^{Hh}| = %.3e)\n",
                rep.cond_a ? "satisfied" : "violated", rep.exp_mismatch);
    std::printf("cond_b  Q - P + A_q'PA_q < 0         %s\n", rep.cond_b ? "satisfied" : "violated");
    std::printf("eigenvalues of Q - P + A_q'PA_q:\n");
    for (const auto& ev : rep.witness)
        std::printf("  %.10g%+.10gi\n", ev.real(), ev.imag());
    const bool ok = rep.cond_a && rep.cond_b;
    std::printf("%s\n", ok ? "stability conditions hold" : "stability conditions do not hold");
    return ok ? kOk : kFailed;
}

std::vector<TrajectoryLog> run_config(const ConfigFile& cfg, SolverKind solver, const std::string& model_path,
                                      bool timing) {
    std::shared_ptr<const ClassifierModel> model;
    if (solver == SolverKind::Classifier) {
        if (model_path.empty())
            throw UsageError("the classifier solver needs --model");
        model = std::make_shared<const ClassifierModel>(load_model(model_path));
    } else if (!model_path.empty()) {
        throw UsageError("--model is only used with --solver classifier");
    }
    return batch_run(make_runs(cfg, solver, model, timing));
}

int cmd_emulate(const std::string& config_path, const std::string& solver_flag, const std::string& model_path,
                const std::string& out_dir, bool timing) {
    const ConfigFile cfg = load_config(config_path);
    const SolverKind solver = solver_from(solver_flag.empty() ? cfg.solver : solver_flag);
    const auto logs = run_config(cfg, solver, model_path, timing);

    fs::create_directories(out_dir);
    int status = kOk;
    std::printf("%-4s %-28s %-28s %12s %12s %5s %12s %10s  %s\n", "run", "x_q0", "x_ref0", "max_error",
                "final_error", "viol", "ball_radius", "solve_ms", "file");
    for (std::size_t i = 0; i < logs.size(); ++i) {
        const auto& log = logs[i];
        const auto& p = cfg.initial_points[i];
        if (log.failure) {
            std::fprintf(stderr, "run %zu failed: %s\n", i, log.failure->c_str());
            status = kFailed;
            continue;
        }
        char name[32];
        std::snprintf(name, sizeof name, "run_%03zu.csv", i);
        const fs::path path = fs::path(out_dir) / name;
        write_trajectory_csv(path.string(), log);
        const Metrics m = compute_metrics(log);
        std::size_t solver_errors = 0;
        for (const auto& s : log.steps)
            solver_errors += s.solver_ok ? 0 : 1;
        std::printf("%-4zu %-28s %-28s %12.4e %12.4e %5zu %12.4e %10.2f  %s\n", i, vec_str(p.x_q).c_str(),
                    vec_str(p.x_ref).c_str(), m.max_error, m.final_error, m.cost_monotone_violations,
                    m.terminal_ball_radius, log.total_solve_ms(), path.string().c_str());
        if (solver_errors)
            std::fprintf(stderr, "run %zu: %zu steps fell back to zero input after a solver error\n", i,
                         solver_errors);
    }
    return status;
}

int cmd_collect(const std::string& config_path, const std::string& solver_flag, const std::string& out_path) {
    const ConfigFile cfg = load_config(config_path);
    const SolverKind solver = solver_from(solver_flag.empty() ? cfg.solver : solver_flag);
    if (solver == SolverKind::Classifier)
        throw UsageError("collect needs an optimizing solver, not the classifier");
    const auto logs = run_config(cfg, solver, "", false);
    for (std::size_t i = 0; i < logs.size(); ++i)
        if (logs[i].failure) {
            std::fprintf(stderr, "run %zu failed: %s\n", i, logs[i].failure->c_str());
            return kFailed;
        }
    const DirectionCodec codec = codec_build(cfg.problem.plant);
    const Dataset data = collect_dataset(logs, codec);
    write_dataset_csv(out_path, data);
    {
        std::ofstream out(codec_sidecar(out_path), std::ios::binary);
        if (!out)
            throw Error("cannot write " + codec_sidecar(out_path));
        out << codec_to_json(codec) << '\n';
    }
    std::printf("%zu rows, %zu features, %zu classes -> %s (codec %s)\n", data.size(), data.feature_dim,
                codec.size(), out_path.c_str(), codec_sidecar(out_path).c_str());
    return kOk;
}

struct TrainArgs {
    std::string data;
    std::string test;
    std::size_t epochs = 20;
    std::uint64_t seed = 0;
    std::string out;
    std::string codec;
    std::string config;
    std::vector<std::size_t> hidden = kDefaultHiddenLayers;
    std::size_t batch = 32;
    double lr = 1e-3;
};

int cmd_train(const TrainArgs& a) {
    DirectionCodec codec;
    if (!a.config.empty())
        codec = codec_build(load_config(a.config).problem.plant);
    else
        codec = codec_from_json(read_text(a.codec.empty() ? codec_sidecar(a.data) : a.codec));
    if (codec.size() == 0)
        throw UsageError("empty direction codec");

    const Dataset data = read_dataset_csv(a.data);
    std::optional<Dataset> test;
    if (!a.test.empty()) {
        test = read_dataset_csv(a.test);
        if (test->feature_dim != data.feature_dim)
            throw UsageError("test set has " + std::to_string(test->feature_dim) + " features, training set " +
                             std::to_string(data.feature_dim));
    }
    const std::size_t n = codec.directions().front().size();
    if (data.feature_dim != 3 * n)
        throw UsageError("dataset has " + std::to_string(data.feature_dim) + " features; the codec needs " +
                         std::to_string(3 * n));
    for (const Dataset* d : {&data, test ? static_cast<const Dataset*>(&*test) : nullptr})
        if (d)
            for (std::size_t label : d->labels)
                if (label >= codec.size())
                    throw UsageError("label " + std::to_string(label) + " outside the codec's " +
                                     std::to_string(codec.size()) + " classes");

    std::vector<std::size_t> dims{data.feature_dim};
    dims.insert(dims.end(), a.hidden.begin(), a.hidden.end());
    dims.push_back(codec.size());

    TrainOptions opts;
    opts.epochs = a.epochs;
    opts.batch_size = a.batch;
    opts.adam.lr = a.lr;
    opts.seed = a.seed;

    ClassifierModel model{Mlp::initialized(dims, a.seed), codec, kFeatureSchemaVersion};
    const TrainReport rep = train(model.mlp, data, opts, test ? &*test : nullptr);
    for (std::size_t e = 0; e < rep.epoch_losses.size(); ++e)
        std::printf("epoch %3zu  loss %.6f\n", e + 1, rep.epoch_losses[e]);
    std::printf("train rows %zu  accuracy %.4f\n", rep.train_rows, rep.train_accuracy);
    std::printf("test  rows %zu  accuracy %.4f\n", rep.test_rows, rep.test_accuracy);
    if (rep.diverged) {
        std::fprintf(stderr, "training diverged (non-finite loss); no model written\n");
        return kFailed;
    }
    save_model(a.out, model);
    std::printf("model -> %s\n", a.out.c_str());
    return kOk;
}

int cmd_plot(const std::vector<std::string>& traj, const std::string& out, const std::vector<double>& bounds) {
    if (traj.empty())
        throw UsageError("plot needs at least one --traj file");
    PlotSpec spec;
    spec.trajectory_files = traj;
    spec.output_path = out;
    if (!bounds.empty()) {
        if (bounds.size() != 4)
            throw UsageError("--bounds takes x_min x_max y_min y_max");
        spec.bounds = PlotBounds{bounds[0], bounds[1], bounds[2], bounds[3]};
    }
    write_phase_portrait(spec);
    std::printf("%zu trajectories -> %s\n", traj.size(), out.c_str());
    return kOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Quantized-input MPC emulation of LTI systems"};
    app.require_subcommand(1);

    std::string config, solver, model, out, data_out;
    bool timing = false;

    auto* check = app.add_subcommand("check", "Check the stability conditions of a configuration");
    check->add_option("--config", config, "Experiment JSON")->required();

    auto* emulate = app.add_subcommand("emulate", "Run every initial point and write one trajectory CSV each");
    emulate->add_option("--config", config, "Experiment JSON")->required();
    emulate->add_option("--solver", solver, "sphere, suboptimal, exhaustive or classifier (default: config)");
    emulate->add_option("--model", model, "Classifier model JSON");
    emulate->add_option("--out", out, "Output directory")->required();
    emulate->add_flag("--timing", timing, "Record wall-clock solve times (output then varies between runs)");

    auto* collect = app.add_subcommand("collect", "Emulate and harvest a classifier dataset");
    collect->add_option("--config", config, "Experiment JSON")->required();
    collect->add_option("--solver", solver, "Solver providing the labels (default: config)");
    collect->add_option("--out", data_out, "Dataset CSV")->required();

    TrainArgs targs;
    auto* trn = app.add_subcommand("train", "Train the direction classifier");
    trn->add_option("--data", targs.data, "Training dataset CSV")->required();
    trn->add_option("--test", targs.test, "Held-out dataset CSV (otherwise an 80/20 split)");
    trn->add_option("--epochs", targs.epochs, "Epochs")->capture_default_str();
    trn->add_option("--seed", targs.seed, "Initialisation and shuffling seed")->capture_default_str();
    trn->add_option("--out", targs.out, "Model JSON")->required();
    trn->add_option("--codec", targs.codec, "Codec JSON (default: <data>.codec.json written by collect)");
    trn->add_option("--config", targs.config, "Build the codec from this experiment instead");
    trn->add_option("--hidden", targs.hidden, "Hidden layer widths")->delimiter(',')->capture_default_str();
    trn->add_option("--batch", targs.batch, "Mini-batch size")->capture_default_str();
    trn->add_option("--lr", targs.lr, "Adam learning rate")->capture_default_str();

    std::vector<std::string> traj;
    std::vector<double> bounds;
    auto* plot = app.add_subcommand("plot", "Phase portrait SVG from trajectory CSVs");
    plot->add_option("--traj", traj, "Trajectory CSV files")->required();
    plot->add_option("--out", out, "SVG path")->required();
    plot->add_option("--bounds", bounds, "x_min x_max y_min y_max")->expected(4);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kUsage;
    }

    try {
        if (*check)
            return cmd_check(config);
        if (*emulate)
            return cmd_emulate(config, solver, model, out, timing);
        if (*collect)
            return cmd_collect(config, solver, data_out);
        if (*trn) {
            if (targs.epochs == 0 || targs.batch == 0)
                throw UsageError("--epochs and --batch must be positive");
            return cmd_train(targs);
        }
        if (*plot)
            return cmd_plot(traj, out, bounds);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "qsmpc: %s\n", e.what());
        return kUsage;
    }
    return kUsage;
}
