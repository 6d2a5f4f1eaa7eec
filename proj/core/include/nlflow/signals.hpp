#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace nlflow {

/**
 * Nonnegative piecewise-constant function on [breakpoints.front(), breakpoints.back()].
 *
 * Cell k covers [b_k, b_{k+1}); the last cell is closed on the right. Point
 * evaluation is right-continuous and returns 0 outside the domain. Integrals
 * are exact and clamp their limits to the domain.
 */
class StepFunction {
public:
    /// Throws std::invalid_argument unless breakpoints are finite and strictly
    /// increasing, there is one value per cell, and every value is finite and >= 0.
    StepFunction(std::vector<double> breakpoints, std::vector<double> values);

    [[nodiscard]] double lower() const { return breaks_.front(); }
    [[nodiscard]] double upper() const { return breaks_.back(); }
    [[nodiscard]] std::size_t cell_count() const { return values_.size(); }
    [[nodiscard]] std::span<const double> breakpoints() const { return breaks_; }
    [[nodiscard]] std::span<const double> values() const { return values_; }

    /// Index of the cell containing x (clamped to the first/last cell).
    [[nodiscard]] std::size_t cell_index(double x) const;

    /// Right-continuous value; 0 outside the domain.
    [[nodiscard]] double operator()(double x) const;

    /// Left limit at x; 0 at or below lower().
    [[nodiscard]] double left_limit(double x) const;

    /// Integral from lower() to x.
    [[nodiscard]] double cumulative(double x) const;

    /// Integral over [a, b]; additive in its limits.
    [[nodiscard]] double integrate(double a, double b) const;

    [[nodiscard]] double total() const { return prefix_.back(); }

    /// Exact L^p norm; p must be 1 or 2 (std::domain_error otherwise).
    [[nodiscard]] double lp_norm(int p) const;

    [[nodiscard]] double sup_norm() const;

protected:
    std::vector<double> breaks_;
    std::vector<double> values_;
    std::vector<double> prefix_;  // cumulative integral at each breakpoint
};

/// Initial density on [0, 1].
class DensityProfile : public StepFunction {
public:
    /// Breakpoints must start at 0 and end at 1.
    DensityProfile(std::vector<double> breakpoints, std::vector<double> values);

    static DensityProfile constant(double value);
    static DensityProfile uniform(std::vector<double> cell_values);
    /// Cell averages of f on a uniform grid of `cells` cells. Negative
    /// averages are rejected.
    static DensityProfile sampled(const std::function<double(double)>& f, std::size_t cells);
};

/// Flux (or boundary density, or demand) on [0, T].
class ControlSignal : public StepFunction {
public:
    /// Breakpoints must start at 0; the last breakpoint is the horizon.
    ControlSignal(std::vector<double> breakpoints, std::vector<double> values);

    [[nodiscard]] double horizon() const { return upper(); }

    static ControlSignal constant(double horizon, double value);
    static ControlSignal uniform(double horizon, std::vector<double> cell_values);
    static ControlSignal sampled(double horizon, const std::function<double(double)>& f,
                                 std::size_t cells);
};

/// Mass of the profile in the last `delta` of [0, 1]. Requires 0 <= delta <= 1.
double tail_mass(const DensityProfile& profile, double delta);

}  // namespace nlflow
