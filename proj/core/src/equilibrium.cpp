#include "nlflow/equilibrium.hpp"

#include <algorithm>
#include <cmath>

namespace nlflow {

void TransferScenario::validate() const {
    if (!std::isfinite(rho0) || !std::isfinite(rho1) || rho0 < 0.0 || rho1 < 0.0) {
        throw std::invalid_argument("transfer: densities must be finite and nonnegative");
    }
}

double minimal_time(const TransferScenario& scenario) {
    scenario.validate();
    return 1.0 + 0.5 * (scenario.rho0 + scenario.rho1);
}

ClosedFormTransfer::ClosedFormTransfer(TransferScenario scenario)
    : s_(scenario), T_(minimal_time(scenario)), lo_(std::min(scenario.rho0, scenario.rho1)),
      hi_(std::max(scenario.rho0, scenario.rho1)) {}

double ClosedFormTransfer::W_increasing(double t) const {
    return -1.0 + std::sqrt((1.0 + lo_) * (1.0 + lo_) + 2.0 * t * (hi_ - lo_));
}

double ClosedFormTransfer::xi_increasing(double t) const {
    if (hi_ == lo_) {
        return t / (1.0 + lo_);
    }
    const double root = std::sqrt((1.0 + lo_) * (1.0 + lo_) + 2.0 * t * (hi_ - lo_));
    return (root - (1.0 + lo_)) / (hi_ - lo_);
}

double ClosedFormTransfer::W(double t) const {
    if (t <= 0.0) {
        return s_.rho0;
    }
    if (t >= T_) {
        return s_.rho1;
    }
    return s_.decreasing() ? W_increasing(T_ - t) : W_increasing(t);
}

double ClosedFormTransfer::xi(double t) const {
    if (t <= 0.0) {
        return t / (1.0 + s_.rho0);
    }
    if (t >= T_) {
        return 1.0 + (t - T_) / (1.0 + s_.rho1);
    }
    return s_.decreasing() ? 1.0 - xi_increasing(T_ - t) : xi_increasing(t);
}

double ClosedFormTransfer::u(double t) const {
    if (t < 0.0) {
        return s_.rho0 / (1.0 + s_.rho0);
    }
    return s_.rho1 / (1.0 + W(t));
}

double ClosedFormTransfer::y(double t) const {
    if (t >= T_) {
        return s_.rho1 / (1.0 + s_.rho1);
    }
    return s_.rho0 / (1.0 + W(t));
}

ControlSignal ClosedFormTransfer::boundary_control(double horizon) const {
    return ControlSignal::constant(horizon, s_.rho1);
}

CharacteristicProblem ClosedFormTransfer::problem(double horizon) const {
    return {Inflow::boundary_density(boundary_control(horizon)), DensityProfile::constant(s_.rho0),
            SpeedLaw::reciprocal(), horizon};
}

TransferDiagnostics transfer_diagnostics(const TransferScenario& scenario) {
    scenario.validate();
    const double r0 = scenario.rho0;
    const double r1 = scenario.rho1;
    if (r0 == r1) {
        throw std::invalid_argument("transfer diagnostics need rho0 != rho1");
    }
    TransferDiagnostics d{};
    d.T = minimal_time(scenario);
    const double y0 = r0 / (1.0 + r0);
    const double y1 = r1 / (1.0 + r1);
    // int u = rho1 xi(T) = rho1 and int y = rho0 xi(T) = rho0 over (0, T).
    d.alpha = r1 - r1 * d.T / (1.0 + r1);
    d.beta = (r0 * d.T - r0 - r0 * r0) / (1.0 + r0);
    d.mass_balance_residual = d.alpha + d.beta + (y1 - y0) * d.T - (r1 - r0);
    d.u_jump = (r1 - r0) / (1.0 + r0);
    d.y_jump = (r1 - r0) / (1.0 + r1);
    return d;
}

bool OptimalityCertificate::inequalities_hold() const {
    return std::all_of(inequalities.begin(), inequalities.end(),
                       [](const InequalityCheck& c) { return c.holds; });
}

namespace {

CharacteristicProblem boundary_problem(const ControlSignal& control, double rho0, double horizon) {
    return {Inflow::boundary_density(control), DensityProfile::constant(rho0), SpeedLaw::reciprocal(),
            horizon};
}

// Start of the run of cells equal to rho1 that ends at `end`; `end` if the
// last cell before it differs.
double trailing_onset(const ControlSignal& control, double rho1, double end, double tol) {
    const auto bp = control.breakpoints();
    const auto val = control.values();
    std::size_t k = control.cell_index(end);
    if (k > 0 && bp[k] >= end) {
        --k;
    }
    double onset = end;
    while (true) {
        if (std::abs(val[k] - rho1) > tol) {
            break;
        }
        onset = bp[k];
        if (k == 0) {
            break;
        }
        --k;
    }
    return onset;
}

}  // namespace

OptimalityCertificate check_lower_bound(const ControlSignal& control, double rho0, double rho1,
                                        double T, const CertificateOptions& options) {
    TransferScenario{rho0, rho1}.validate();
    if (!(rho1 > rho0)) {
        throw std::invalid_argument("lower-bound certificate needs rho1 > rho0 (target differs from"
                                    " the initial state and lies above it)");
    }
    if (!(T > 0.0) || control.horizon() < T * (1.0 - 1e-14)) {
        throw std::invalid_argument("lower-bound certificate: control must cover [0, T], T > 0");
    }
    const Trajectory traj = Trajectory::simulate(boundary_problem(control, rho0, T), options.solver);
    const double miss = traj.slice_distance_to(T, rho1);
    if (miss > options.slice_tol * std::max(1.0, rho1)) {
        throw TargetNotReached("state at T differs from rho1 by " + std::to_string(miss) + " in L1");
    }
    const auto& xi = traj.xi();
    const double xi_T = xi(T);
    if (xi_T < 1.0 - 1e-9) {
        throw TargetNotReached("characteristic from t = 0 has not reached x = 1 by T");
    }

    OptimalityCertificate c;
    c.T = T;
    c.tolerance = options.tolerance;
    c.t0 = trailing_onset(control, rho1, T, options.density_tol);
    if (xi_T - 1.0 > xi(c.t0)) {
        c.t0 = xi.inverse(xi_T - 1.0);
    }
    c.xi_t0 = xi(c.t0);
    c.t1 = xi.inverse(std::min(1.0, xi.end_value()));
    c.onset_before_exit = c.t0 < c.t1;

    const double x0 = c.xi_t0;
    const double x1 = xi(c.t1);
    auto check = [&](std::string name, double lhs, double rhs) {
        c.inequalities.push_back({std::move(name), lhs, rhs, lhs <= rhs + options.tolerance});
        return lhs;
    };
    if (c.onset_before_exit) {
        const double a = check("initial-phase", (1.0 + rho0) * x0 - 0.5 * rho0 * x0 * x0, c.t0);
        const double b = check("transition-phase",
                               (1.0 + rho0 - rho0 * x0) * (x1 - x0) +
                                   0.5 * (rho1 - rho0) * (x1 - x0) * (x1 - x0),
                               c.t1 - c.t0);
        const double d = check("final-phase",
                               xi_T - x1 + 0.5 * rho1 * ((xi_T - x0) * (xi_T - x0) - (x1 - x0) * (x1 - x0)),
                               T - c.t1);
        c.general_bound = a + b + d;
        c.bound_value = 1.0 + 0.5 * (rho0 + rho1) + x0;
    } else {
        const double a = check("before-exit", x1 * (1.0 + rho0) - 0.5 * rho0 * x1 * x1, c.t1);
        const double b = check("after-onset", (xi_T - x0) + 0.5 * rho1 * (xi_T - x0) * (xi_T - x0),
                               T - c.t0);
        c.general_bound = a + b;
        c.bound_value = 2.0 + 0.5 * (rho0 + rho1);
    }
    c.slack = T - c.bound_value;
    c.satisfied = c.slack >= -options.tolerance;
    return c;
}

double reach_time(const ControlSignal& control, double rho0, double rho1,
                  const CertificateOptions& options) {
    TransferScenario{rho0, rho1}.validate();
    const double horizon = control.horizon();
    const double t0 = trailing_onset(control, rho1, horizon, options.density_tol);
    if (t0 >= horizon) {
        throw std::invalid_argument("reach_time: control must end with a run equal to rho1");
    }
    const auto sol = solve_characteristic(boundary_problem(control, rho0, horizon), options.solver);
    const double target = sol.curve(t0) + 1.0;
    if (sol.curve.end_value() < target - 1e-12) {
        throw TargetNotReached("rho1 is not reached before the control's horizon " +
                               std::to_string(horizon));
    }
    return sol.curve.inverse(std::min(target, sol.curve.end_value()));
}

}  // namespace nlflow
