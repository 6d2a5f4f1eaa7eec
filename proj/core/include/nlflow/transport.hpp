#pragma once

#include "nlflow/characteristics.hpp"

#include <cstddef>
#include <limits>
#include <vector>

namespace nlflow {

/// Time series sampled on a uniform grid, ready for CSV output.
struct TimeSeries {
    std::vector<double> t;
    std::vector<double> W;
    std::vector<double> u;
    std::vector<double> y;
    std::vector<double> beta;  ///< backlog against the demand, 0 when none given
};

/**
 * Full solution assembled from the characteristic curve.
 *
 *   rho(t, x) = rho0(x - xi(t))                 for x > xi(t)
 *   rho(t, x) = u(tau) / xi'(tau)               for x <= xi(t), xi(tau) = xi(t) - x
 *
 * At the interface x = xi(t) the inflow branch is returned. xi' is taken as
 * lambda(W), the exact derivative, rather than the interpolant's slope.
 *
 * Running integrals of the influx, outflux and |W'| are tabulated at the
 * curve knots on construction, so the object is immutable afterwards and all
 * queries are const.
 */
class Trajectory {
public:
    static Trajectory simulate(CharacteristicProblem problem, const SolveOptions& options = {});

    [[nodiscard]] const CharacteristicProblem& problem() const { return problem_; }
    [[nodiscard]] const CharacteristicCurve& xi() const { return xi_; }
    [[nodiscard]] const SolveDiagnostics& diagnostics() const { return diagnostics_; }
    [[nodiscard]] double horizon() const { return problem_.horizon; }

    /// M = int_0^T u + int_0^1 rho0, with u the realized influx.
    [[nodiscard]] double input_mass() const;

    /// xi^{-1}(1), or +infinity when xi(T) < 1 - 1e-9.
    [[nodiscard]] double exit_time() const { return exit_time_; }

    [[nodiscard]] double rho_at(double t, double x) const;
    [[nodiscard]] double total_mass(double t) const;
    [[nodiscard]] double influx(double t) const;
    [[nodiscard]] double outflux(double t) const;
    /// u(t) - y(t); right-continuous at data breakpoints.
    [[nodiscard]] double w_derivative(double t) const;

    [[nodiscard]] double cumulative_influx(double t) const;
    [[nodiscard]] double cumulative_outflux(double t) const;
    /// int_0^t |W'|.
    [[nodiscard]] double total_variation(double t) const;

    /// int_0^t y_d - int_0^t y. Throws std::domain_error if t is beyond
    /// either horizon.
    [[nodiscard]] double backlog(const ControlSignal& y_d, double t) const;

    /// int_0^1 |rho(s, x) - rho(t, x)| dx.
    [[nodiscard]] double l1_slice_distance(double s, double t) const;
    /// int_0^1 |rho(t, x) - c| dx.
    [[nodiscard]] double slice_distance_to(double t, double c) const;
    /// int_0^T |rho(t, a) - rho(t, b)| dt.
    [[nodiscard]] double x_slice_distance(double a, double b) const;
    /// (int_0^1 rho(t, x)^p dx)^(1/p), p = 1 or 2.
    [[nodiscard]] double slice_lp_norm(double t, int p) const;

    /// Exact averages of rho(t, .) over n equal cells.
    [[nodiscard]] std::vector<double> slice_cell_averages(double t, std::size_t n) const;

    /// Uniform samples at n + 1 times on [0, T]; beta uses y_d if given.
    [[nodiscard]] TimeSeries sample(std::size_t n, const ControlSignal* y_d = nullptr) const;

    /// Times at which the integrands of the running integrals may be
    /// nonsmooth: window ends of the solver, in increasing order.
    [[nodiscard]] std::vector<double> event_times() const;

    /// Positions in [0, 1] where rho(t, .) may be nonsmooth, sorted.
    [[nodiscard]] std::vector<double> slice_breaks(double t) const;

private:
    Trajectory(CharacteristicProblem problem, XiSolution solution);

    [[nodiscard]] double speed(double t) const;
    [[nodiscard]] double inflow_density(double tau) const;
    [[nodiscard]] double running(const std::vector<double>& prefix, double t, int which) const;
    [[nodiscard]] double integrand(double s, int which) const;

    CharacteristicProblem problem_;
    CharacteristicCurve xi_;
    SolveDiagnostics diagnostics_;
    InflowHistory history_;
    double exit_time_ = std::numeric_limits<double>::infinity();
    std::vector<double> in_prefix_;
    std::vector<double> out_prefix_;
    std::vector<double> var_prefix_;
};

}  // namespace nlflow
