#include "nlflow/tracking.hpp"

#include "nlflow/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <stdexcept>

namespace nlflow {

void TrackingProblem::validate() const {
    if (!(horizon > 0.0)) {
        throw std::invalid_argument("tracking: horizon must be positive");
    }
    if (demand.horizon() < horizon * (1.0 - 1e-14)) {
        throw std::invalid_argument("tracking: demand must cover [0, horizon]");
    }
    if (control_grid.size() < 2 || control_grid.front() != 0.0 ||
        std::abs(control_grid.back() - horizon) > 1e-12 * std::max(1.0, horizon)) {
        throw std::invalid_argument("tracking: control grid must span [0, horizon]");
    }
    for (std::size_t k = 1; k < control_grid.size(); ++k) {
        if (!(control_grid[k] > control_grid[k - 1])) {
            throw std::invalid_argument("tracking: control grid must be strictly increasing");
        }
    }
    if (!(tracking_weight >= 0.0)) {
        throw std::invalid_argument("tracking: weight must be nonnegative");
    }
}

ControlSignal TrackingProblem::control(std::vector<double> values) const {
    return ControlSignal(control_grid, std::move(values));
}

std::vector<double> TrackingProblem::project(const ControlSignal& signal) const {
    std::vector<double> v(cell_count());
    for (std::size_t k = 0; k < v.size(); ++k) {
        const double a = control_grid[k];
        const double b = control_grid[k + 1];
        v[k] = std::max(0.0, signal.integrate(a, std::min(b, signal.horizon())) / (b - a));
    }
    return v;
}

std::vector<double> uniform_grid(double horizon, std::size_t cells) {
    if (cells == 0) {
        throw std::invalid_argument("uniform_grid: need at least one cell");
    }
    std::vector<double> g(cells + 1);
    for (std::size_t k = 0; k <= cells; ++k) {
        g[k] = horizon * static_cast<double>(k) / static_cast<double>(cells);
    }
    g.back() = horizon;
    return g;
}

CostTerms cost_terms(const Trajectory& trajectory, const ControlSignal& demand) {
    const double horizon = trajectory.horizon();
    const auto& inflow = trajectory.problem().inflow;
    std::vector<double> breaks;
    const auto knots = trajectory.xi().times();
    breaks.assign(knots.begin(), knots.end());
    for (double b : demand.breakpoints()) {
        if (b > 0.0 && b < horizon) {
            breaks.push_back(b);
        }
    }
    if (inflow.mode() == Inflow::Mode::Flux) {
        for (double b : inflow.signal().breakpoints()) {
            if (b > 0.0 && b < horizon) {
                breaks.push_back(b);
            }
        }
    }
    std::sort(breaks.begin(), breaks.end());
    breaks.erase(std::unique(breaks.begin(), breaks.end()), breaks.end());

    CostTerms terms{0.0, 0.0};
    for (std::size_t k = 0; k + 1 < breaks.size(); ++k) {
        const double a = breaks[k];
        const double b = breaks[k + 1];
        terms.tracking_error += gauss3(
            [&](double s) {
                const double e = trajectory.outflux(s) - demand(s);
                return e * e;
            },
            a, b);
        if (inflow.mode() == Inflow::Mode::BoundaryDensity) {
            terms.control_energy += gauss3(
                [&](double s) {
                    const double u = trajectory.influx(s);
                    return u * u;
                },
                a, b);
        }
    }
    if (inflow.mode() == Inflow::Mode::Flux) {
        const auto& u = inflow.signal();
        const auto bp = u.breakpoints();
        const auto val = u.values();
        for (std::size_t k = 0; k < val.size() && bp[k] < horizon; ++k) {
            terms.control_energy += val[k] * val[k] * (std::min(bp[k + 1], horizon) - bp[k]);
        }
    }
    return terms;
}

double cost(const TrackingProblem& problem, const ControlSignal& u) {
    problem.validate();
    CharacteristicProblem cp{Inflow::flux(u), problem.rho0, problem.law, problem.horizon};
    const Trajectory traj = Trajectory::simulate(std::move(cp), problem.solver);
    const CostTerms terms = cost_terms(traj, problem.demand);
    return terms.control_energy + problem.tracking_weight * terms.tracking_error;
}

double cost(const TrackingProblem& problem, std::span<const double> values) {
    if (values.size() != problem.cell_count()) {
        throw std::invalid_argument("cost: expected " + std::to_string(problem.cell_count()) +
                                    " control values, got " + std::to_string(values.size()));
    }
    for (std::size_t k = 0; k < values.size(); ++k) {
        if (!std::isfinite(values[k]) || values[k] < 0.0) {
            throw std::domain_error("cost: control value " + std::to_string(k) +
                                    " must be finite and nonnegative");
        }
    }
    return cost(problem, problem.control({values.begin(), values.end()}));
}

namespace {

double l2_norm(const TrackingProblem& p, const std::vector<double>& v) {
    double s = 0.0;
    for (std::size_t k = 0; k < v.size(); ++k) {
        s += v[k] * v[k] * (p.control_grid[k + 1] - p.control_grid[k]);
    }
    return std::sqrt(s);
}

std::vector<double> gradient(const TrackingProblem& p, const std::vector<double>& v, double j0,
                             double rel_step) {
    std::vector<double> g(v.size());
    std::vector<double> probe = v;
    for (std::size_t k = 0; k < v.size(); ++k) {
        const double h = rel_step * std::max(1.0, std::abs(v[k]));
        const double width = p.control_grid[k + 1] - p.control_grid[k];
        probe[k] = v[k] + h;
        const double jp = cost(p, probe);
        if (v[k] >= h) {
            probe[k] = v[k] - h;
            const double jm = cost(p, probe);
            g[k] = (jp - jm) / (2.0 * h);
        } else {
            g[k] = (jp - j0) / h;
        }
        probe[k] = v[k];
        // L2 gradient: divide by the cell width.
        g[k] /= width;
    }
    return g;
}

std::vector<double> project_step(const std::vector<double>& v, const std::vector<double>& g,
                                 double step) {
    std::vector<double> out(v.size());
    for (std::size_t k = 0; k < v.size(); ++k) {
        out[k] = std::max(0.0, v[k] - step * g[k]);
    }
    return out;
}

RestartLog descend(const TrackingProblem& p, const MinimizeOptions& opt, std::string init,
                   std::vector<double> v) {
    RestartLog log;
    log.init = std::move(init);
    double j = cost(p, v);
    log.cost_history.push_back(j);
    double step = opt.initial_step;
    for (int iter = 0; iter < opt.max_iters; ++iter) {
        const std::vector<double> g = gradient(p, v, j, opt.fd_rel_step);
        // Projected-gradient stationarity measure in the L2 metric.
        const std::vector<double> pg = project_step(v, g, 1.0);
        std::vector<double> diff(v.size());
        for (std::size_t k = 0; k < v.size(); ++k) {
            diff[k] = v[k] - pg[k];
        }
        const double gnorm = l2_norm(p, diff);
        log.gradient_norm_history.push_back(gnorm);
        log.iterations = iter + 1;
        if (gnorm <= opt.grad_tol) {
            log.converged = true;
            break;
        }
        bool accepted = false;
        for (int bt = 0; bt < opt.max_backtracks; ++bt) {
            std::vector<double> trial = project_step(v, g, step);
            std::vector<double> d(v.size());
            for (std::size_t k = 0; k < v.size(); ++k) {
                d[k] = trial[k] - v[k];
            }
            const double dn = l2_norm(p, d);
            if (dn == 0.0) {
                break;
            }
            const double jt = cost(p, trial);
            if (jt <= j - opt.armijo / step * dn * dn) {
                v = std::move(trial);
                j = jt;
                accepted = true;
                break;
            }
            step *= opt.shrink;
        }
        if (!accepted) {
            // No descent at the smallest step: stationary up to FD noise.
            log.converged = true;
            break;
        }
        log.cost_history.push_back(j);
        step = std::min(step / opt.shrink, 64.0 * opt.initial_step);
    }
    log.control = std::move(v);
    log.cost = j;
    return log;
}

}  // namespace

OptimizationReport minimize(const TrackingProblem& problem, const MinimizeOptions& options,
                            const std::vector<std::vector<double>>& extra_inits) {
    problem.validate();
    const std::size_t n = problem.cell_count();
    std::vector<std::pair<std::string, std::vector<double>>> inits;
    inits.emplace_back("zero", std::vector<double>(n, 0.0));
    const double mean = problem.demand.integrate(0.0, problem.horizon) / problem.horizon;
    inits.emplace_back("equilibrium", std::vector<double>(n, mean));
    inits.emplace_back("demand", problem.project(problem.demand));
    for (std::size_t k = 0; k < extra_inits.size(); ++k) {
        if (extra_inits[k].size() != n) {
            throw std::invalid_argument("minimize: extra initialization has wrong size");
        }
        inits.emplace_back("extra-" + std::to_string(k), extra_inits[k]);
    }
    std::mt19937_64 rng(options.seed);
    const double top = std::max(1.0, 2.0 * problem.demand.sup_norm());
    std::uniform_real_distribution<double> dist(0.0, top);
    for (int r = 0; r < options.random_restarts; ++r) {
        std::vector<double> v(n);
        for (double& x : v) {
            x = dist(rng);
        }
        inits.emplace_back("random-" + std::to_string(r), std::move(v));
    }

    OptimizationReport report{problem.control(std::vector<double>(n, 0.0)),
                              std::numeric_limits<double>::infinity(), {}, {}, 0, 0, {}};
    for (auto& [name, v] : inits) {
        report.runs.push_back(descend(problem, options, name, std::move(v)));
    }
    report.restarts = static_cast<int>(report.runs.size());
    double best_norm = std::numeric_limits<double>::infinity();
    for (std::size_t r = 0; r < report.runs.size(); ++r) {
        const RestartLog& run = report.runs[r];
        const double norm = l2_norm(problem, run.control);
        const double tie = 1e-12 * std::max(1.0, std::abs(run.cost));
        const bool better = run.cost < report.best_cost - tie ||
                            (std::abs(run.cost - report.best_cost) <= tie && norm < best_norm);
        if (better) {
            report.best_cost = run.cost;
            report.best_restart = r;
            best_norm = norm;
        }
    }
    const RestartLog& best = report.runs[report.best_restart];
    report.best_control = problem.control(best.control);
    report.cost_history = best.cost_history;
    report.gradient_norm_history = best.gradient_norm_history;
    return report;
}

}  // namespace nlflow
