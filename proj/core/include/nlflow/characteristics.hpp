#pragma once

#include "nlflow/characteristic_curve.hpp"
#include "nlflow/signals.hpp"
#include "nlflow/speed_law.hpp"

#include <cstddef>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

namespace nlflow {

/**
 * Boundary data at x = 0.
 *
 * In flux mode the signal is the influx u(t) itself. In boundary-density
 * mode the signal prescribes rho(t, 0) and the influx is derived as
 * rho(t, 0) * lambda(W(t)), closing the loop through the total mass.
 */
class Inflow {
public:
    enum class Mode { Flux, BoundaryDensity };

    static Inflow flux(ControlSignal u) { return Inflow(Mode::Flux, std::move(u)); }
    static Inflow boundary_density(ControlSignal rho_in) {
        return Inflow(Mode::BoundaryDensity, std::move(rho_in));
    }

    [[nodiscard]] Mode mode() const { return mode_; }
    [[nodiscard]] const ControlSignal& signal() const { return signal_; }

private:
    Inflow(Mode mode, ControlSignal signal) : mode_(mode), signal_(std::move(signal)) {}

    Mode mode_;
    ControlSignal signal_;
};

struct CharacteristicProblem {
    Inflow inflow;
    DensityProfile rho0;
    SpeedLaw law;
    double horizon;

    /// Throws std::invalid_argument if the horizon is not positive or the
    /// inflow signal does not cover [0, horizon].
    void validate() const;

    /// A priori bound on the total mass over [0, horizon]. Flux mode:
    /// ||u||_1 + ||rho0||_1. Boundary-density mode: the largest density value
    /// in the data, which bounds every slice integral.
    [[nodiscard]] double mass_bound() const;
};

struct SolveOptions {
    double tol = 1e-10;            ///< C0 fixed-point residual per window
    int knots_per_window = 256;    ///< knots in a full-length window
    int min_knots_per_window = 4;
    int max_iter = 200;
};

struct WindowRecord {
    double start;
    double end;
    int iterations;
    double residual;
    double tail_mass;   ///< mass of the current slice within lambda_bar * length of x = 1
    bool level_aligned; ///< end moved onto a level crossing
};

struct SolveDiagnostics {
    double mass_bound = 0.0;
    SpeedBounds bounds{};
    bool constant_speed = false;
    std::vector<WindowRecord> windows;
    [[nodiscard]] double max_residual() const;
};

/// Raised when the fixed-point iteration does not converge within max_iter.
class SolverError : public std::runtime_error {
public:
    SolverError(const std::string& what, double window_start, double window_end, double residual)
        : std::runtime_error(what), window_start(window_start), window_end(window_end),
          residual(residual) {}
    double window_start;
    double window_end;
    double residual;
};

/**
 * Cumulative influx U(t) for a given characteristic curve.
 *
 * Boundary-density breakpoints are tracked as levels xi(t_j), so that
 * U(xi^{-1}(level)) is available without inverting the curve.
 */
class InflowHistory {
public:
    explicit InflowHistory(const Inflow& inflow);

    /// History for a curve that is already known on its whole range.
    static InflowHistory from_curve(const Inflow& inflow, const CharacteristicCurve& xi);

    /// Records xi at the next inflow breakpoint (boundary-density mode only).
    void record_breakpoint(double xi_at_break);

    /// U(t) where xi_t = xi(t). For boundary density the cell containing t
    /// must start at a recorded breakpoint.
    [[nodiscard]] double cumulative(double t, double xi_t) const;

    /// U(xi^{-1}(level)) for 0 <= level <= xi(end of curve); U = 0 for level <= 0.
    [[nodiscard]] double cumulative_at_level(double level, const CharacteristicCurve& xi) const;

private:
    Inflow inflow_;
    std::vector<double> level_;  // xi at recorded breakpoints, starting with 0
    std::vector<double> mass_;   // U at those breakpoints
};

/**
 * The density slice rho(t, .) expressed through the data and the curve on [0, t].
 * mass(len) is the exact integral of the slice over [0, len].
 */
class Slice {
public:
    Slice(const CharacteristicProblem& problem, const CharacteristicCurve& xi,
          const InflowHistory& history, double t);

    [[nodiscard]] double time() const { return t_; }
    [[nodiscard]] double position() const { return xi_t_; }
    [[nodiscard]] double entered() const { return entered_; }

    [[nodiscard]] double mass(double len) const;
    [[nodiscard]] double total() const { return mass(1.0); }
    /// Mass within `len` of the outlet x = 1.
    [[nodiscard]] double tail(double len) const;

private:
    const CharacteristicProblem* problem_;
    const CharacteristicCurve* xi_;
    const InflowHistory* history_;
    double t_;
    double xi_t_;
    double entered_;
};

struct Window {
    double start;
    double end;
};

/**
 * The map F on one window: for a candidate xi on [start, end] returns
 *   t -> xi(start) + int_start^t lambda(W(s; xi)) ds,
 * where W(s; xi) is the influx since `start` plus the mass of the slice at
 * `start` in [0, 1 - (xi(s) - xi(start))]. `past` is the solved curve on
 * [0, start]. Knots are uniform; each subinterval uses 3-point Gauss.
 * Throws std::domain_error if the window leaves [0, horizon] or does not
 * begin where `past` ends.
 */
CharacteristicCurve apply_F(const std::function<double(double)>& xi,
                            const CharacteristicProblem& problem,
                            const CharacteristicCurve& past, Window window, int knots);

struct XiSolution {
    CharacteristicCurve curve;
    SolveDiagnostics diagnostics;
};

/**
 * Characteristic through (0, 0) on [0, horizon] by contraction on
 * successive windows. Each window satisfies
 *   tail(lambda_bar * delta) < lambda_tilde / (2 d),  delta < min(1, 1/lambda_bar),
 * and ends no later than the next inflow breakpoint or level crossing where
 * the integrand loses smoothness.
 */
XiSolution solve_characteristic(const CharacteristicProblem& problem,
                                const SolveOptions& options = {});

/// Curve-only convenience wrapper around solve_characteristic.
CharacteristicCurve solve_xi(const CharacteristicProblem& problem, const SolveOptions& options = {});

/// xi^{-1}(x); throws std::domain_error outside [0, xi(T)].
double xi_inverse(const CharacteristicCurve& xi, double x);

}  // namespace nlflow
