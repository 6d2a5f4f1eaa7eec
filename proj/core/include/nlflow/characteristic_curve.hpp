#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace nlflow {

/**
 * Increasing curve t -> xi(t) stored as knots (t_i, xi_i, xi'_i) with
 * piecewise cubic Hermite interpolation.
 *
 * Knot slopes are kept as given (they are lambda(W(t_i)) for a solved
 * curve). Interpolation uses a per-interval Fritsch-Carlson limited copy so
 * that every interval stays monotone.
 *
 * Segment ends record the window boundaries the solver used; integrands
 * built from the curve are smooth between consecutive segment ends.
 */
class CharacteristicCurve {
public:
    CharacteristicCurve() = default;

    /// Throws std::invalid_argument unless sizes agree, times are strictly
    /// increasing and values are nondecreasing.
    CharacteristicCurve(std::vector<double> times, std::vector<double> values,
                        std::vector<double> slopes);

    /// Single knot at (t0, x0) with the given slope.
    static CharacteristicCurve point(double t0, double x0, double slope);

    [[nodiscard]] bool empty() const { return t_.empty(); }
    [[nodiscard]] std::size_t knot_count() const { return t_.size(); }

    [[nodiscard]] double start_time() const { return t_.front(); }
    [[nodiscard]] double end_time() const { return t_.back(); }
    [[nodiscard]] double start_value() const { return x_.front(); }
    [[nodiscard]] double end_value() const { return x_.back(); }
    [[nodiscard]] double end_slope() const { return s_.back(); }

    [[nodiscard]] std::span<const double> times() const { return t_; }
    [[nodiscard]] std::span<const double> values() const { return x_; }
    [[nodiscard]] std::span<const double> slopes() const { return s_; }
    [[nodiscard]] std::span<const double> segment_ends() const { return segment_ends_; }

    /// xi(t); linear extrapolation with the end slopes outside the knot range.
    [[nodiscard]] double operator()(double t) const;

    /// Derivative of the interpolant.
    [[nodiscard]] double derivative(double t) const;

    /// Unique t with xi(t) = x. Throws std::domain_error when x lies outside
    /// [start_value(), end_value()] by more than 1e-12.
    [[nodiscard]] double inverse(double x) const;

    /// Appends a curve whose first knot coincides with end_time().
    void append(const CharacteristicCurve& tail);

private:
    [[nodiscard]] std::size_t interval(double t) const;
    void limit_interval(std::size_t i);

    std::vector<double> t_;
    std::vector<double> x_;
    std::vector<double> s_;
    // Limited slopes used on interval i: left end and right end.
    std::vector<double> m_left_;
    std::vector<double> m_right_;
    std::vector<double> segment_ends_;
};

}  // namespace nlflow
