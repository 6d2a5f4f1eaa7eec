#include "scenario.hpp"

#include "nlflow/equilibrium.hpp"
#include "nlflow/fv_oracle.hpp"
#include "nlflow/tracking.hpp"
#include "nlflow/transport.hpp"

#include <nlohmann/json.hpp>
#include <yaml-cpp/yaml.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

namespace nlflow::cli {

using nlohmann::json;

namespace {

int line_of(const YAML::Node& n) {
    return n.Mark().is_null() ? 0 : n.Mark().line + 1;
}

template <class T>
T scalar(const YAML::Node& n, const std::string& what) {
    try {
        return n.as<T>();
    } catch (const YAML::Exception&) {
        throw ConfigError(what + ": expected a " +
                              (std::is_same_v<T, std::string> ? std::string("string")
                                                              : std::string("number")),
                          line_of(n));
    }
}

std::vector<double> number_list(const YAML::Node& n, const std::string& what) {
    if (!n.IsSequence()) {
        throw ConfigError(what + ": expected a list of numbers", line_of(n));
    }
    std::vector<double> v;
    for (const auto& item : n) {
        v.push_back(scalar<double>(item, what));
    }
    return v;
}

void check_keys(const YAML::Node& map, const std::set<std::string>& allowed, const std::string& where) {
    if (!map.IsMap()) {
        throw ConfigError(where + ": expected a mapping", line_of(map));
    }
    for (const auto& kv : map) {
        const auto key = kv.first.as<std::string>();
        if (allowed.count(key) == 0) {
            throw ConfigError("unknown key '" + key + "' in " + where, line_of(kv.first));
        }
    }
}

std::vector<double> uniform_breaks(double hi, std::size_t n) {
    std::vector<double> b(n + 1);
    for (std::size_t k = 0; k <= n; ++k) {
        b[k] = hi * static_cast<double>(k) / static_cast<double>(n);
    }
    b.back() = hi;
    return b;
}

// `hi` is the domain end used by `constant` and `uniform`; 0 if unknown.
SignalSpec parse_signal(const YAML::Node& n, const std::string& what, double hi) {
    if (n.IsScalar()) {
        if (!(hi > 0.0)) {
            throw ConfigError(what + ": a constant needs a known domain (set horizon)", line_of(n));
        }
        return {{0.0, hi}, {scalar<double>(n, what)}};
    }
    check_keys(n, {"constant", "uniform", "breakpoints", "values", "nodes", "node_values", "cells"},
               what);
    SignalSpec s;
    if (n["constant"]) {
        if (!(hi > 0.0)) {
            throw ConfigError(what + ": a constant needs a known domain (set horizon)", line_of(n));
        }
        s = {{0.0, hi}, {scalar<double>(n["constant"], what + ".constant")}};
    } else if (n["uniform"]) {
        if (!(hi > 0.0)) {
            throw ConfigError(what + ": uniform cells need a known domain (set horizon)", line_of(n));
        }
        s.values = number_list(n["uniform"], what + ".uniform");
        if (s.values.empty()) {
            throw ConfigError(what + ".uniform: need at least one value", line_of(n["uniform"]));
        }
        s.breakpoints = uniform_breaks(hi, s.values.size());
    } else if (n["nodes"] && n["node_values"]) {
        // Continuous piecewise-linear data, averaged onto uniform cells.
        const auto xs = number_list(n["nodes"], what + ".nodes");
        const auto ys = number_list(n["node_values"], what + ".node_values");
        if (xs.size() < 2 || xs.size() != ys.size() || xs.front() != 0.0) {
            throw ConfigError(what + ": nodes must start at 0 and match node_values", line_of(n));
        }
        for (std::size_t k = 1; k < xs.size(); ++k) {
            if (!(xs[k] > xs[k - 1])) {
                throw ConfigError(what + ".nodes must be strictly increasing", line_of(n["nodes"]));
            }
        }
        const std::size_t cells =
            n["cells"] ? scalar<std::size_t>(n["cells"], what + ".cells") : std::size_t{4096};
        if (cells == 0) {
            throw ConfigError(what + ".cells must be positive", line_of(n["cells"]));
        }
        const auto f = [&](double x) {
            const auto it = std::upper_bound(xs.begin(), xs.end(), x);
            const std::size_t k = std::clamp<std::size_t>(
                static_cast<std::size_t>(it - xs.begin()), 1, xs.size() - 1);
            const double w = (x - xs[k - 1]) / (xs[k] - xs[k - 1]);
            return (1.0 - w) * ys[k - 1] + w * ys[k];
        };
        s.breakpoints = uniform_breaks(xs.back(), cells);
        s.values.resize(cells);
        for (std::size_t k = 0; k < cells; ++k) {
            // Trapezoid rule on both halves of the cell.
            const double a = s.breakpoints[k];
            const double b = s.breakpoints[k + 1];
            const double m = 0.5 * (a + b);
            s.values[k] = 0.5 * (0.5 * (f(a) + f(m)) + 0.5 * (f(m) + f(b)));
        }
    } else if (n["breakpoints"] && n["values"]) {
        s.breakpoints = number_list(n["breakpoints"], what + ".breakpoints");
        s.values = number_list(n["values"], what + ".values");
    } else {
        throw ConfigError(what + ": give 'constant', 'uniform' or 'breakpoints' with 'values'",
                          line_of(n));
    }
    try {
        (void)StepFunction(s.breakpoints, s.values);
    } catch (const std::invalid_argument& e) {
        throw ConfigError(what + ": " + e.what(), line_of(n));
    }
    return s;
}

void require_span(const SignalSpec& s, double lo, double hi, const std::string& what, int line) {
    if (s.breakpoints.front() != lo || s.breakpoints.back() < hi * (1.0 - 1e-14)) {
        std::ostringstream msg;
        msg << what << ": must span [" << lo << ", " << hi << "]";
        throw ConfigError(msg.str(), line);
    }
}

json signal_json(const SignalSpec& s) {
    return {{"breakpoints", s.breakpoints}, {"values", s.values}};
}

// CSV with a column line and a units line; numbers as %.17g.
class CsvWriter {
public:
    CsvWriter(const std::filesystem::path& path, const std::string& columns, const std::string& units)
        : out_(path) {
        if (!out_) {
            throw std::runtime_error("cannot write " + path.string());
        }
        out_ << "# columns: " << columns << "\n# units: " << units << "\n";
    }
    void comment(const std::string& text) { out_ << "# " << text << "\n"; }
    void row(std::initializer_list<double> values) {
        bool first = true;
        for (double v : values) {
            if (!first) {
                out_ << ',';
            }
            first = false;
            out_ << format(v);
        }
        out_ << '\n';
    }
    static std::string format(double v) {
        char buf[40];
        std::snprintf(buf, sizeof buf, "%.17g", v);
        return buf;
    }

private:
    std::ofstream out_;
};

void write_json(const std::filesystem::path& path, const json& j) {
    std::ofstream out(path);
    if (!out) {
        throw std::runtime_error("cannot write " + path.string());
    }
    out << j.dump(2) << "\n";
}

json finite_or_null(double v) {
    return std::isfinite(v) ? json(v) : json(nullptr);
}

}  // namespace

ScenarioConfig parse_config(const std::string& text) {
    YAML::Node root;
    try {
        root = YAML::Load(text);
    } catch (const YAML::ParserException& e) {
        throw ConfigError(std::string("YAML syntax: ") + e.msg, e.mark.line + 1);
    }
    if (!root.IsMap()) {
        throw ConfigError("config must be a mapping at the top level", line_of(root));
    }
    check_keys(root,
               {"law", "rho0", "control", "boundary_density", "demand", "horizon", "solver",
                "output", "seed", "optimize", "transfer", "verify", "crosscheck"},
               "config");
    ScenarioConfig c;
    if (root["horizon"]) {
        c.horizon = scalar<double>(root["horizon"], "horizon");
        if (!(*c.horizon > 0.0) || !std::isfinite(*c.horizon)) {
            throw ConfigError("horizon must be positive and finite", line_of(root["horizon"]));
        }
    }
    const double T = c.horizon.value_or(0.0);

    if (const auto n = root["law"]) {
        check_keys(n, {"kind", "w_step", "values", "derivatives", "value"}, "law");
        c.law.kind = n["kind"] ? scalar<std::string>(n["kind"], "law.kind") : "reciprocal";
        if (c.law.kind == "tabulated") {
            if (!n["w_step"] || !n["values"] || !n["derivatives"]) {
                throw ConfigError("law: tabulated needs w_step, values and derivatives", line_of(n));
            }
            c.law.w_step = scalar<double>(n["w_step"], "law.w_step");
            c.law.values = number_list(n["values"], "law.values");
            c.law.derivatives = number_list(n["derivatives"], "law.derivatives");
        } else if (c.law.kind == "constant") {
            c.law.constant = n["value"] ? scalar<double>(n["value"], "law.value") : 1.0;
        } else if (c.law.kind != "reciprocal") {
            throw ConfigError("law.kind must be reciprocal, tabulated or constant", line_of(n["kind"]));
        }
        try {
            (void)build_law(c);
        } catch (const std::invalid_argument& e) {
            throw ConfigError(std::string("law: ") + e.what(), line_of(n));
        }
    }
    if (const auto n = root["rho0"]) {
        c.rho0 = parse_signal(n, "rho0", 1.0);
        require_span(*c.rho0, 0.0, 1.0, "rho0", line_of(n));
        if (c.rho0->breakpoints.back() != 1.0) {
            throw ConfigError("rho0: must end at x = 1", line_of(n));
        }
    }
    if (root["control"] && root["boundary_density"]) {
        throw ConfigError("give exactly one of 'control' and 'boundary_density'",
                          line_of(root["boundary_density"]));
    }
    for (const char* key : {"control", "boundary_density", "demand"}) {
        if (const auto n = root[key]) {
            SignalSpec s = parse_signal(n, key, T);
            if (c.horizon) {
                require_span(s, 0.0, T, key, line_of(n));
            }
            if (std::string(key) == "control") {
                c.control = std::move(s);
            } else if (std::string(key) == "boundary_density") {
                c.boundary_density = std::move(s);
            } else {
                c.demand = std::move(s);
            }
        }
    }
    if (const auto n = root["solver"]) {
        check_keys(n, {"tol", "knots_per_window", "max_iter"}, "solver");
        if (n["tol"]) {
            c.solver.tol = scalar<double>(n["tol"], "solver.tol");
            if (!(c.solver.tol > 0.0)) {
                throw ConfigError("solver.tol must be positive", line_of(n["tol"]));
            }
        }
        if (n["knots_per_window"]) {
            c.solver.knots_per_window = scalar<int>(n["knots_per_window"], "solver.knots_per_window");
            if (c.solver.knots_per_window < 1) {
                throw ConfigError("solver.knots_per_window must be >= 1", line_of(n["knots_per_window"]));
            }
        }
        if (n["max_iter"]) {
            c.solver.max_iter = scalar<int>(n["max_iter"], "solver.max_iter");
            if (c.solver.max_iter < 1) {
                throw ConfigError("solver.max_iter must be >= 1", line_of(n["max_iter"]));
            }
        }
    }
    if (const auto n = root["output"]) {
        check_keys(n, {"samples", "slice_times", "slice_points"}, "output");
        if (n["samples"]) {
            c.samples = scalar<std::size_t>(n["samples"], "output.samples");
        }
        if (n["slice_times"]) {
            c.slice_times = number_list(n["slice_times"], "output.slice_times");
        }
        if (n["slice_points"]) {
            c.slice_points = scalar<std::size_t>(n["slice_points"], "output.slice_points");
        }
        if (c.samples == 0 || c.slice_points == 0) {
            throw ConfigError("output: samples and slice_points must be positive", line_of(n));
        }
    }
    if (root["seed"]) {
        c.seed = scalar<std::uint64_t>(root["seed"], "seed");
    }
    if (const auto n = root["optimize"]) {
        check_keys(n, {"cells", "weight", "max_iters", "restarts", "step", "knots_per_window"},
                   "optimize");
        auto& o = c.optimize;
        if (n["cells"]) o.cells = scalar<std::size_t>(n["cells"], "optimize.cells");
        if (n["weight"]) o.weight = scalar<double>(n["weight"], "optimize.weight");
        if (n["max_iters"]) o.max_iters = scalar<int>(n["max_iters"], "optimize.max_iters");
        if (n["restarts"]) o.restarts = scalar<int>(n["restarts"], "optimize.restarts");
        if (n["step"]) o.step = scalar<double>(n["step"], "optimize.step");
        if (n["knots_per_window"]) {
            o.knots_per_window = scalar<int>(n["knots_per_window"], "optimize.knots_per_window");
        }
        if (o.cells == 0 || o.cells > 128 || o.weight < 0.0 || o.max_iters < 0 || o.restarts < 0 ||
            !(o.step > 0.0) || o.knots_per_window < 1) {
            throw ConfigError("optimize: need 1 <= cells <= 128, weight >= 0, max_iters >= 0,"
                              " restarts >= 0, step > 0, knots_per_window >= 1",
                              line_of(n));
        }
    }
    if (const auto n = root["transfer"]) {
        check_keys(n, {"rho0", "rho1"}, "transfer");
        if (n["rho0"]) c.transfer.rho0 = scalar<double>(n["rho0"], "transfer.rho0");
        if (n["rho1"]) c.transfer.rho1 = scalar<double>(n["rho1"], "transfer.rho1");
        if (c.transfer.rho0 < 0.0 || c.transfer.rho1 < 0.0) {
            throw ConfigError("transfer: densities must be nonnegative", line_of(n));
        }
    }
    if (const auto n = root["verify"]) {
        check_keys(n, {"rho0", "rho1", "T", "control"}, "verify");
        VerifySpec v;
        if (n["rho0"]) v.rho0 = scalar<double>(n["rho0"], "verify.rho0");
        if (n["rho1"]) v.rho1 = scalar<double>(n["rho1"], "verify.rho1");
        if (n["T"]) {
            v.T = scalar<double>(n["T"], "verify.T");
            if (!(*v.T > 0.0)) {
                throw ConfigError("verify.T must be positive", line_of(n["T"]));
            }
        }
        if (!n["control"]) {
            throw ConfigError("verify: missing boundary-density 'control'", line_of(n));
        }
        v.control = parse_signal(n["control"], "verify.control", v.T.value_or(0.0));
        if (v.T) {
            require_span(v.control, 0.0, *v.T, "verify.control", line_of(n["control"]));
        }
        c.verify = std::move(v);
    }
    if (const auto n = root["crosscheck"]) {
        check_keys(n, {"cells", "cfl"}, "crosscheck");
        if (n["cells"]) {
            c.crosscheck.cells.clear();
            for (double v : number_list(n["cells"], "crosscheck.cells")) {
                if (!(v >= 1.0) || v != std::floor(v)) {
                    throw ConfigError("crosscheck.cells: positive integers expected", line_of(n["cells"]));
                }
                c.crosscheck.cells.push_back(static_cast<std::size_t>(v));
            }
            if (!std::is_sorted(c.crosscheck.cells.begin(), c.crosscheck.cells.end())) {
                throw ConfigError("crosscheck.cells must be increasing", line_of(n["cells"]));
            }
        }
        if (n["cfl"]) {
            c.crosscheck.cfl = scalar<double>(n["cfl"], "crosscheck.cfl");
            if (!(c.crosscheck.cfl > 0.0 && c.crosscheck.cfl <= 1.0)) {
                throw ConfigError("crosscheck.cfl must lie in (0, 1]", line_of(n["cfl"]));
            }
        }
    }
    return c;
}

ScenarioConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("cannot read config file " + path.string());
    }
    std::stringstream buf;
    buf << in.rdbuf();
    try {
        return parse_config(buf.str());
    } catch (const ConfigError& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
}

std::string config_echo(const ScenarioConfig& c) {
    json j;
    json law{{"kind", c.law.kind}};
    if (c.law.kind == "tabulated") {
        law["w_step"] = c.law.w_step;
        law["values"] = c.law.values;
        law["derivatives"] = c.law.derivatives;
    } else if (c.law.kind == "constant") {
        law["value"] = c.law.constant;
    }
    j["law"] = law;
    if (c.rho0) j["rho0"] = signal_json(*c.rho0);
    if (c.control) j["control"] = signal_json(*c.control);
    if (c.boundary_density) j["boundary_density"] = signal_json(*c.boundary_density);
    if (c.demand) j["demand"] = signal_json(*c.demand);
    j["horizon"] = c.horizon ? json(*c.horizon) : json(nullptr);
    j["solver"] = {{"tol", c.solver.tol},
                   {"knots_per_window", c.solver.knots_per_window},
                   {"max_iter", c.solver.max_iter}};
    j["output"] = {{"samples", c.samples}, {"slice_times", c.slice_times}, {"slice_points", c.slice_points}};
    j["seed"] = c.seed;
    j["optimize"] = {{"cells", c.optimize.cells},         {"weight", c.optimize.weight},
                     {"max_iters", c.optimize.max_iters}, {"restarts", c.optimize.restarts},
                     {"step", c.optimize.step},           {"knots_per_window", c.optimize.knots_per_window}};
    j["transfer"] = {{"rho0", c.transfer.rho0}, {"rho1", c.transfer.rho1}};
    if (c.verify) {
        j["verify"] = {{"rho0", c.verify->rho0},
                       {"rho1", c.verify->rho1},
                       {"T", c.verify->T ? json(*c.verify->T) : json(nullptr)},
                       {"control", signal_json(c.verify->control)}};
    }
    j["crosscheck"] = {{"cells", c.crosscheck.cells}, {"cfl", c.crosscheck.cfl}};
    return j.dump();
}

SpeedLaw build_law(const ScenarioConfig& c) {
    if (c.law.kind == "tabulated") {
        return SpeedLaw::tabulated(c.law.w_step, c.law.values, c.law.derivatives);
    }
    if (c.law.kind == "constant") {
        return SpeedLaw::constant(c.law.constant);
    }
    return SpeedLaw::reciprocal();
}

DensityProfile build_rho0(const ScenarioConfig& c) {
    if (!c.rho0) {
        throw ConfigError("missing 'rho0'");
    }
    return DensityProfile(c.rho0->breakpoints, c.rho0->values);
}

CharacteristicProblem build_problem(const ScenarioConfig& c) {
    if (!c.horizon) {
        throw ConfigError("missing 'horizon'");
    }
    if (c.control.has_value() == c.boundary_density.has_value()) {
        throw ConfigError("give exactly one of 'control' and 'boundary_density'");
    }
    const SignalSpec& s = c.control ? *c.control : *c.boundary_density;
    ControlSignal signal(s.breakpoints, s.values);
    Inflow inflow = c.control ? Inflow::flux(std::move(signal)) : Inflow::boundary_density(std::move(signal));
    return {std::move(inflow), build_rho0(c), build_law(c), *c.horizon};
}

Command parse_command(const std::string& name) {
    if (name == "simulate") return Command::Simulate;
    if (name == "optimize") return Command::Optimize;
    if (name == "transfer") return Command::Transfer;
    if (name == "verify") return Command::Verify;
    if (name == "crosscheck") return Command::Crosscheck;
    throw ConfigError("unknown command '" + name + "'");
}

void apply_overrides(ScenarioConfig& c, const Overrides& o) {
    if (o.seed) {
        c.seed = *o.seed;
    }
    if (o.tol) {
        if (!(*o.tol > 0.0)) {
            throw ConfigError("--tol must be positive");
        }
        c.solver.tol = *o.tol;
    }
    if (o.cells) {
        if (*o.cells == 0) {
            throw ConfigError("--cells must be positive");
        }
        c.optimize.cells = *o.cells;
        c.slice_points = *o.cells;
        // Crosscheck ladder: five doublings ending at the given count.
        c.crosscheck.cells.clear();
        for (int k = 4; k >= 0; --k) {
            c.crosscheck.cells.push_back(std::max<std::size_t>(1, *o.cells >> k));
        }
    }
}

namespace {

void run_simulate(const ScenarioConfig& c, const std::filesystem::path& out, json& summary) {
    const Trajectory traj = Trajectory::simulate(build_problem(c), c.solver);
    std::optional<ControlSignal> demand;
    if (c.demand) {
        demand.emplace(c.demand->breakpoints, c.demand->values);
    }
    const TimeSeries s = traj.sample(c.samples, demand ? &*demand : nullptr);
    {
        CsvWriter csv(out / "trajectory.csv", "t,W,u,y,beta",
                      "t: time, W: mass, u: mass/time, y: mass/time, beta: mass");
        for (std::size_t i = 0; i < s.t.size(); ++i) {
            csv.row({s.t[i], s.W[i], s.u[i], s.y[i], s.beta[i]});
        }
    }
    {
        CsvWriter csv(out / "xi.csv", "t,xi,xi_prime", "t: time, xi: length, xi_prime: length/time");
        const auto& xi = traj.xi();
        for (std::size_t i = 0; i < xi.knot_count(); ++i) {
            csv.row({xi.times()[i], xi.values()[i], xi.slopes()[i]});
        }
    }
    std::vector<std::string> slice_files;
    for (std::size_t k = 0; k < c.slice_times.size(); ++k) {
        char name[32];
        std::snprintf(name, sizeof name, "slice_%03zu.csv", k);
        const double t = std::clamp(c.slice_times[k], 0.0, traj.horizon());
        CsvWriter csv(out / name, "x,rho", "x: length, rho: mass/length");
        csv.comment("t = " + CsvWriter::format(t));
        for (std::size_t i = 0; i <= c.slice_points; ++i) {
            const double x = static_cast<double>(i) / static_cast<double>(c.slice_points);
            csv.row({x, traj.rho_at(t, x)});
        }
        slice_files.emplace_back(name);
    }
    double balance = 0.0;
    for (double t : s.t) {
        balance = std::max(balance, std::abs(traj.total_mass(t) - traj.total_mass(0.0) -
                                             traj.cumulative_influx(t) + traj.cumulative_outflux(t)));
    }
    const auto& d = traj.diagnostics();
    summary["windows"] = d.windows.size();
    summary["max_fixed_point_residual"] = d.max_residual();
    summary["mass_bound"] = d.mass_bound;
    summary["lambda_tilde"] = d.bounds.lambda_tilde;
    summary["lambda_bar"] = d.bounds.lambda_bar;
    summary["d"] = d.bounds.d;
    summary["constant_speed"] = d.constant_speed;
    summary["input_mass"] = traj.input_mass();
    summary["exit_time"] = finite_or_null(traj.exit_time());
    summary["W_final"] = traj.total_mass(traj.horizon());
    summary["total_variation"] = traj.total_variation(traj.horizon());
    summary["max_mass_balance_error"] = balance;
    summary["slices"] = slice_files;
    write_json(out / "summary.json", summary);
}

void run_optimize(const ScenarioConfig& c, const std::filesystem::path& out, json& report_json) {
    if (!c.horizon || !c.demand) {
        throw ConfigError("optimize needs 'horizon' and 'demand'");
    }
    TrackingProblem p{build_rho0(c), ControlSignal(c.demand->breakpoints, c.demand->values),
                      build_law(c), *c.horizon, uniform_grid(*c.horizon, c.optimize.cells)};
    p.tracking_weight = c.optimize.weight;
    p.solver = c.solver;
    p.solver.knots_per_window = c.optimize.knots_per_window;
    MinimizeOptions mo;
    mo.max_iters = c.optimize.max_iters;
    mo.random_restarts = c.optimize.restarts;
    mo.initial_step = c.optimize.step;
    mo.seed = c.seed;
    const OptimizationReport r = minimize(p, mo);

    report_json["best_cost"] = r.best_cost;
    report_json["best_control"] = {
        {"breakpoints", std::vector<double>(r.best_control.breakpoints().begin(), r.best_control.breakpoints().end())},
        {"values", std::vector<double>(r.best_control.values().begin(), r.best_control.values().end())}};
    report_json["restarts"] = r.restarts;
    report_json["best_restart"] = r.best_restart;
    report_json["cost_history"] = r.cost_history;
    report_json["gradient_norm_history"] = r.gradient_norm_history;
    json runs = json::array();
    for (const auto& run : r.runs) {
        runs.push_back({{"init", run.init},
                        {"cost", run.cost},
                        {"iterations", run.iterations},
                        {"converged", run.converged},
                        {"control", run.control}});
    }
    report_json["runs"] = runs;
    write_json(out / "report.json", report_json);

    CsvWriter hist(out / "history.csv", "restart,iteration,J,grad_norm",
                   "restart: index, iteration: count, J: cost, grad_norm: cost/(mass/time)");
    for (std::size_t k = 0; k < r.runs.size(); ++k) {
        const auto& run = r.runs[k];
        for (std::size_t i = 0; i < run.cost_history.size(); ++i) {
            const double g = i < run.gradient_norm_history.size() ? run.gradient_norm_history[i] : NAN;
            hist.row({static_cast<double>(k), static_cast<double>(i), run.cost_history[i], g});
        }
    }
    CsvWriter ctl(out / "control.csv", "t_start,t_end,u", "t: time, u: mass/time");
    const auto bp = r.best_control.breakpoints();
    const auto val = r.best_control.values();
    for (std::size_t k = 0; k < val.size(); ++k) {
        ctl.row({bp[k], bp[k + 1], val[k]});
    }
}

void run_transfer(const ScenarioConfig& c, const std::filesystem::path& out, json& diag) {
    const TransferScenario sc{c.transfer.rho0, c.transfer.rho1};
    sc.validate();
    const ClosedFormTransfer cf(sc);
    const double T = cf.T();
    diag["T"] = T;
    diag["decreasing"] = sc.decreasing();
    if (sc.rho0 != sc.rho1) {
        const TransferDiagnostics d = transfer_diagnostics(sc);
        diag["alpha"] = d.alpha;
        diag["beta"] = d.beta;
        diag["mass_balance_residual"] = d.mass_balance_residual;
        diag["u_jump"] = d.u_jump;
        diag["y_jump"] = d.y_jump;
    }
    const double y0 = sc.rho0 / (1.0 + sc.rho0);
    const double y1 = sc.rho1 / (1.0 + sc.rho1);
    CsvWriter csv(out / "transfer.csv", "t,W,xi,u,y,alpha_integrand,beta_integrand",
                  "t: time, W: mass, xi: length, u/y/integrands: mass/time");
    for (std::size_t i = 0; i <= c.samples; ++i) {
        const double t = T * static_cast<double>(i) / static_cast<double>(c.samples);
        // Values on (0, T); the end points take the interior limits.
        const double ti = std::clamp(t, 0.0, std::nextafter(T, 0.0));
        csv.row({t, cf.W(t), cf.xi(t), cf.u(ti), cf.y(ti), cf.u(ti) - y1, y0 - cf.y(ti)});
    }
    write_json(out / "diagnostics.json", diag);
}

bool run_verify(const ScenarioConfig& c, const std::filesystem::path& out, json& cert_json) {
    if (!c.verify) {
        throw ConfigError("verify needs a 'verify' section");
    }
    const VerifySpec& v = *c.verify;
    const ControlSignal control(v.control.breakpoints, v.control.values);
    CertificateOptions opt;
    opt.solver = c.solver;
    const double T = v.T ? *v.T : reach_time(control, v.rho0, v.rho1, opt);
    const OptimalityCertificate cert = check_lower_bound(control, v.rho0, v.rho1, T, opt);
    cert_json["T"] = cert.T;
    cert_json["minimal_time"] = minimal_time({v.rho0, v.rho1});
    cert_json["t0"] = cert.t0;
    cert_json["t1"] = cert.t1;
    cert_json["xi_t0"] = cert.xi_t0;
    cert_json["case"] = cert.onset_before_exit ? "t0 < t1" : "t1 <= t0";
    cert_json["bound_value"] = cert.bound_value;
    cert_json["general_bound"] = cert.general_bound;
    cert_json["slack"] = cert.slack;
    cert_json["tolerance"] = cert.tolerance;
    cert_json["satisfied"] = cert.satisfied;
    json ineq = json::array();
    for (const auto& q : cert.inequalities) {
        ineq.push_back({{"name", q.name}, {"lhs", q.lhs}, {"rhs", q.rhs}, {"holds", q.holds}});
    }
    cert_json["inequalities"] = ineq;
    write_json(out / "certificate.json", cert_json);
    return cert.satisfied && cert.inequalities_hold();
}

void run_crosscheck(const ScenarioConfig& c, const std::filesystem::path& out, json& summary) {
    const CharacteristicProblem problem = build_problem(c);
    const Trajectory traj = Trajectory::simulate(problem, c.solver);
    const double T = problem.horizon;
    CsvWriter csv(out / "crosscheck.csv", "cells,l1_error,ratio,order,w_max_error,steps",
                  "cells: count, l1_error: mass, ratio: 1, order: 1, w_max_error: mass, steps: count");
    json rows = json::array();
    double prev = NAN;
    std::size_t prev_n = 0;
    for (std::size_t n : c.crosscheck.cells) {
        const FvSolution fv = fv_solve(problem, n, c.crosscheck.cfl);
        const std::vector<double> exact = traj.slice_cell_averages(T, n);
        double l1 = 0.0;
        for (std::size_t k = 0; k < n; ++k) {
            l1 += std::abs(exact[k] - fv.final_state.cells[k]) / static_cast<double>(n);
        }
        double w_err = 0.0;
        for (std::size_t i = 0; i < fv.t.size(); ++i) {
            w_err = std::max(w_err, std::abs(fv.W[i] - traj.total_mass(fv.t[i])));
        }
        const double ratio = std::isnan(prev) ? NAN : prev / l1;
        const double order = std::isnan(prev) ? NAN
                                              : std::log(ratio) / std::log(static_cast<double>(n) /
                                                                          static_cast<double>(prev_n));
        csv.row({static_cast<double>(n), l1, ratio, order, w_err, static_cast<double>(fv.steps)});
        rows.push_back({{"cells", n},
                        {"l1_error", l1},
                        {"ratio", finite_or_null(ratio)},
                        {"order", finite_or_null(order)},
                        {"w_max_error", w_err},
                        {"steps", fv.steps},
                        {"conservation_error", fv.conservation_error}});
        prev = l1;
        prev_n = n;
    }
    summary["levels"] = rows;
    write_json(out / "crosscheck.json", summary);
}

}  // namespace

int run(Command command, const std::filesystem::path& config_path, const std::filesystem::path& out_dir,
        const Overrides& overrides, std::ostream& log) {
    ScenarioConfig config;
    json artifact;
    try {
        config = load_config(config_path);
        apply_overrides(config, overrides);
        artifact["config"] = json::parse(config_echo(config));
        std::filesystem::create_directories(out_dir);
    } catch (const ConfigError& e) {
        log << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const std::filesystem::filesystem_error& e) {
        log << "output error: " << e.what() << "\n";
        return kExitConfig;
    }
    try {
        switch (command) {
        case Command::Simulate:
            run_simulate(config, out_dir, artifact);
            break;
        case Command::Optimize:
            run_optimize(config, out_dir, artifact);
            break;
        case Command::Transfer:
            run_transfer(config, out_dir, artifact);
            break;
        case Command::Verify:
            if (!run_verify(config, out_dir, artifact)) {
                log << "certificate not satisfied, see " << (out_dir / "certificate.json").string() << "\n";
                return kExitUnsatisfied;
            }
            break;
        case Command::Crosscheck:
            run_crosscheck(config, out_dir, artifact);
            break;
        }
    } catch (const ConfigError& e) {
        log << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const std::invalid_argument& e) {
        log << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const std::domain_error& e) {
        log << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const std::exception& e) {
        json err = {{"error", "solver failure"}, {"message", e.what()}, {"config", artifact["config"]}};
        if (const auto* se = dynamic_cast<const SolverError*>(&e)) {
            err["window_start"] = se->window_start;
            err["window_end"] = se->window_end;
            err["residual"] = se->residual;
        }
        write_json(out_dir / "error.json", err);
        log << "solver failure: " << e.what() << "\n";
        return kExitSolver;
    }
    return kExitOk;
}

}  // namespace nlflow::cli
