#pragma once

#include <vector>

namespace nlflow {

/// Infimum, supremum and derivative bound of a speed law over [0, M].
struct SpeedBounds {
    double lambda_tilde;  ///< inf of lambda on [0, M]
    double lambda_bar;    ///< sup of lambda on [0, M]
    double d;             ///< sup of |lambda'| on [0, M]
};

/**
 * Transport speed as a function of total mass, lambda(W) > 0.
 *
 * Two kinds are supported: the reciprocal law 1/(1+W), and a tabulated C1
 * law sampled (values and derivatives) on a uniform grid starting at W = 0.
 * Tabulated laws interpolate both samples linearly and are extended
 * constantly past the last knot. Every law is extended constantly below
 * W = 0.
 *
 * Immutable after construction.
 */
class SpeedLaw {
public:
    enum class Kind { Reciprocal, Tabulated };

    /// lambda(W) = 1 / (1 + W).
    static SpeedLaw reciprocal();

    /// Tabulated law with knots W_k = k * w_step. Throws std::invalid_argument
    /// on empty or mismatched samples, non-positive values or a bad step.
    static SpeedLaw tabulated(double w_step, std::vector<double> values,
                              std::vector<double> derivatives);

    /// Tabulated constant law (two knots spanning [0, domain_cap]).
    static SpeedLaw constant(double value, double domain_cap = 1.0);

    [[nodiscard]] Kind kind() const { return kind_; }

    /// Largest W covered by knots (infinite for the reciprocal law).
    [[nodiscard]] double domain_cap() const;

    [[nodiscard]] double eval(double w) const;
    [[nodiscard]] double derivative(double w) const;

    /// Bound functions on [0, m]. Throws std::domain_error for m < 0.
    [[nodiscard]] SpeedBounds bounds(double m) const;

    [[nodiscard]] double w_step() const { return w_step_; }
    [[nodiscard]] const std::vector<double>& values() const { return values_; }
    [[nodiscard]] const std::vector<double>& derivatives() const { return derivatives_; }

private:
    SpeedLaw() = default;

    Kind kind_ = Kind::Reciprocal;
    double w_step_ = 0.0;
    std::vector<double> values_;
    std::vector<double> derivatives_;
};

}  // namespace nlflow
