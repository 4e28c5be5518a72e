#include "qsmpc/config.hpp"

#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include <json.hpp>

namespace qsmpc {

namespace {

using nlohmann::json;

const json& field(const json& obj, const char* key, const std::string& path) {
    if (!obj.is_object())
        throw ConfigError(path + ": expected an object");
    const auto it = obj.find(key);
    if (it == obj.end())
        throw ConfigError(path + "." + key + ": missing field");
    return *it;
}

double number(const json& v, const std::string& path) {
    if (!v.is_number())
        throw ConfigError(path + ": expected a number");
    const double d = v.get<double>();
    if (!std::isfinite(d))
        throw ConfigError(path + ": must be finite");
    return d;
}

std::size_t count(const json& v, const std::string& path) {
    if (!v.is_number_integer() || v.get<long long>() < 0)
        throw ConfigError(path + ": expected a non-negative integer");
    return v.get<std::size_t>();
}

Mat matrix(const json& v, const std::string& path) {
    if (!v.is_array() || v.empty())
        throw ConfigError(path + ": expected a non-empty array of rows");
    std::vector<std::vector<double>> rows;
    for (std::size_t r = 0; r < v.size(); ++r) {
        const std::string rp = path + "[" + std::to_string(r) + "]";
        if (!v[r].is_array() || v[r].empty())
            throw ConfigError(rp + ": expected a non-empty row array");
        std::vector<double> row;
        for (std::size_t c = 0; c < v[r].size(); ++c)
            row.push_back(number(v[r][c], rp + "[" + std::to_string(c) + "]"));
        if (!rows.empty() && row.size() != rows.front().size())
            throw ConfigError(rp + ": row length differs from row 0");
        rows.push_back(std::move(row));
    }
    return Mat::from_rows(rows);
}

Vec vector(const json& v, std::size_t dim, const std::string& path) {
    if (!v.is_array() || v.size() != dim)
        throw ConfigError(path + ": expected an array of " + std::to_string(dim) + " numbers");
    Vec out;
    for (std::size_t i = 0; i < v.size(); ++i)
        out.push_back(number(v[i], path + "[" + std::to_string(i) + "]"));
    return out;
}

Mat weight(const json& v, std::size_t dim, const std::string& path) {
    if (v.is_number())
        return Mat::identity(dim) * number(v, path);
    Mat w = matrix(v, path);
    if (w.rows() != dim || w.cols() != dim)
        throw ConfigError(path + ": expected a " + std::to_string(dim) + "x" + std::to_string(dim) + " matrix");
    return w;
}

std::vector<Vec> circle(const json& spec, std::size_t dim, const std::string& path) {
    const double radius = number(field(spec, "radius", path), path + ".radius");
    const std::size_t n = count(field(spec, "count", path), path + ".count");
    if (n == 0)
        throw ConfigError(path + ".count: must be positive");
    double phase = 0.0;
    if (spec.contains("phase"))
        phase = number(spec["phase"], path + ".phase");
    return circle_points(radius, n, dim, phase);
}

std::vector<InitialPoint> initial_points(const json& v, std::size_t dim, const std::string& path) {
    std::vector<InitialPoint> out;
    if (v.is_array()) {
        if (v.empty())
            throw ConfigError(path + ": empty list");
        for (std::size_t i = 0; i < v.size(); ++i) {
            const std::string ip = path + "[" + std::to_string(i) + "]";
            InitialPoint p;
            p.x_q = vector(field(v[i], "x_q", ip), dim, ip + ".x_q");
            p.x_ref = v[i].contains("x_ref") ? vector(v[i]["x_ref"], dim, ip + ".x_ref") : p.x_q;
            out.push_back(std::move(p));
        }
        return out;
    }
    if (!v.is_object())
        throw ConfigError(path + ": expected a list of points or a circle spec");
    if (v.contains("quantized")) {
        const auto q = circle(v["quantized"], dim, path + ".quantized");
        const auto r = v.contains("reference") ? circle(v["reference"], dim, path + ".reference") : q;
        if (q.size() != r.size())
            throw ConfigError(path + ": quantized and reference circles have different counts");
        for (std::size_t i = 0; i < q.size(); ++i)
            out.push_back({q[i], r[i]});
        return out;
    }
    for (auto& p : circle(v, dim, path))
        out.push_back({p, p});
    return out;
}

} // namespace

std::vector<Vec> circle_points(double radius, std::size_t count, std::size_t dim, double phase) {
    if (dim < 2)
        throw DimensionError("circle_points: need at least two state coordinates");
    std::vector<Vec> pts;
    for (std::size_t i = 0; i < count; ++i) {
        const double a = phase + 2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(count);
        Vec p(dim, 0.0);
        p[0] = radius * std::cos(a);
        p[1] = radius * std::sin(a);
        pts.push_back(std::move(p));
    }
    return pts;
}

ConfigFile parse_config(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("parse error: ") + e.what());
    }
    try {
        const json& sys = field(j, "system", "config");
        Mat H = matrix(field(sys, "H", "system"), "system.H");
        if (!H.is_square())
            throw ConfigError("system.H: must be square");
        const double h = number(field(sys, "h", "system"), "system.h");
        if (!(h > 0.0))
            throw ConfigError("system.h: must be positive");
        const std::size_t n = H.rows();

        const json& pl = field(j, "plant", "config");
        Mat B = matrix(field(pl, "B_q", "plant"), "plant.B_q");
        if (B.rows() != n)
            throw ConfigError("plant.B_q: expected " + std::to_string(n) + " rows");
        Mat A;
        const json& mode = pl.contains("A_q_mode") ? pl["A_q_mode"] : json("exp");
        if (mode.is_string()) {
            const auto s = mode.get<std::string>();
            if (s == "exp")
                A = discretize(H, h);
            else if (s == "identity")
                A = Mat::identity(n);
            else
                throw ConfigError("plant.A_q_mode: expected \"exp\", \"identity\" or a matrix");
        } else {
            A = matrix(mode, "plant.A_q_mode");
            if (A.rows() != n || A.cols() != n)
                throw ConfigError("plant.A_q_mode: expected a " + std::to_string(n) + "x" + std::to_string(n) +
                                  " matrix");
        }
        const std::size_t m = B.cols();

        const json& wt = field(j, "weights", "config");
        Mat P = weight(field(wt, "P", "weights"), n, "weights.P");
        Mat Q = weight(field(wt, "Q", "weights"), n, "weights.Q");
        Mat R = weight(field(wt, "R", "weights"), m, "weights.R");
        const std::size_t N = count(field(j, "horizon", "config"), "horizon");

        MpcProblem prob{QuantizedPlant(std::move(A), std::move(B), h), LtiReference(std::move(H), h), std::move(P),
                        std::move(Q), std::move(R), N};
        try {
            prob.validate();
        } catch (const Error& e) {
            throw ConfigError(std::string("problem: ") + e.what());
        }

        const json& run = field(j, "run", "config");
        ConfigFile cfg{std::move(prob), {}, 1, "sphere", 0};
        cfg.steps = count(field(run, "steps", "run"), "run.steps");
        if (cfg.steps == 0)
            throw ConfigError("run.steps: must be at least 1");
        cfg.initial_points = initial_points(field(run, "initial_points", "run"), n, "run.initial_points");
        if (j.contains("solver")) {
            if (!j["solver"].is_string() || !parse_solver(j["solver"].get<std::string>()))
                throw ConfigError("solver: expected one of sphere, suboptimal, exhaustive, classifier");
            cfg.solver = j["solver"].get<std::string>();
        }
        if (j.contains("seed"))
            cfg.seed = count(j["seed"], "seed");
        return cfg;
    } catch (const ConfigError&) {
        throw;
    } catch (const json::exception& e) {
        throw ConfigError(e.what());
    } catch (const Error& e) {
        throw ConfigError(e.what());
    }
}

ConfigFile load_config(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw ConfigError("cannot read " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    try {
        return parse_config(ss.str());
    } catch (const ConfigError& e) {
        throw ConfigError(path + ": " + e.what());
    }
}

std::vector<RunConfig> make_runs(const ConfigFile& cfg, SolverKind solver, std::shared_ptr<const ClassifierModel> model,
                                 bool record_timing) {
    std::vector<RunConfig> runs;
    for (const auto& p : cfg.initial_points)
        runs.push_back(RunConfig{cfg.problem, solver, p.x_q, p.x_ref, cfg.steps, cfg.seed, model, record_timing});
    return runs;
}

MpcProblem reference_problem(std::size_t N, bool identity_plant) {
    const double h = 0.2;
    Mat H = Mat::from_rows({{0.0, 1.0}, {-1.0, -2.0}});
    Mat B = Mat::from_rows({{1.0, 0.0, -1.0, 0.0}, {0.0, 1.0, 0.0, -1.0}});
    Mat A = identity_plant ? Mat::identity(2) : discretize(H, h);
    return MpcProblem{QuantizedPlant(std::move(A), std::move(B), h), LtiReference(std::move(H), h),
                      Mat::identity(2) * 50.0, Mat::identity(2) * 0.1, Mat::identity(4) * 0.05, N};
}

} // namespace qsmpc
