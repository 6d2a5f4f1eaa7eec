#pragma once

#include "nlflow/transport.hpp"

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace nlflow {

/**
 * Demand tracking: minimize
 *   J(u) = int_0^T u^2 + w * int_0^T (y - y_d)^2
 * over nonnegative influx controls that are piecewise constant on
 * control_grid.
 */
struct TrackingProblem {
    DensityProfile rho0;
    ControlSignal demand;
    SpeedLaw law;
    double horizon;
    std::vector<double> control_grid;
    double tracking_weight = 1.0;
    SolveOptions solver{1e-10, 64, 4, 200};

    /// Throws std::invalid_argument if the demand does not cover [0, T] or
    /// the grid does not span it.
    void validate() const;

    [[nodiscard]] std::size_t cell_count() const { return control_grid.size() - 1; }
    [[nodiscard]] ControlSignal control(std::vector<double> values) const;
    /// Averages of a signal over the control cells (0 beyond its horizon).
    [[nodiscard]] std::vector<double> project(const ControlSignal& signal) const;
};

/// Uniform control grid with `cells` cells on [0, horizon].
std::vector<double> uniform_grid(double horizon, std::size_t cells);

double cost(const TrackingProblem& problem, const ControlSignal& u);
/// Cost of the grid control with the given cell values; std::domain_error on
/// negative or non-finite entries.
double cost(const TrackingProblem& problem, std::span<const double> values);

/// Cost terms of a solved trajectory, split at its knots and the demand's
/// breakpoints.
struct CostTerms {
    double control_energy;
    double tracking_error;
};
CostTerms cost_terms(const Trajectory& trajectory, const ControlSignal& demand);

struct MinimizeOptions {
    double initial_step = 1.0;
    int max_iters = 60;
    int random_restarts = 0;  ///< in addition to the three fixed initializations
    std::uint64_t seed = 0;
    double armijo = 1e-4;
    double shrink = 0.5;
    int max_backtracks = 30;
    double grad_tol = 1e-7;
    double fd_rel_step = 1e-5;
};

struct RestartLog {
    std::string init;
    std::vector<double> control;
    double cost = 0.0;
    int iterations = 0;
    bool converged = false;
    std::vector<double> cost_history;
    std::vector<double> gradient_norm_history;
};

struct OptimizationReport {
    ControlSignal best_control;
    double best_cost;
    std::vector<double> cost_history;           ///< of the winning restart
    std::vector<double> gradient_norm_history;  ///< of the winning restart
    int restarts;
    std::size_t best_restart;
    std::vector<RestartLog> runs;
};

/**
 * Projected gradient descent on the cell values: finite-difference gradient
 * (central, forward next to the bound), scaled by the cell widths, clamp at 0,
 * projected Armijo backtracking. Initializations: zero, the constant equal to
 * the mean demand, the demand itself, any `extra_inits`, then seeded random
 * ones. Lowest J wins, ties go to the smaller L2 norm.
 */
OptimizationReport minimize(const TrackingProblem& problem, const MinimizeOptions& options = {},
                            const std::vector<std::vector<double>>& extra_inits = {});

}  // namespace nlflow
