#include "nlflow/speed_law.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace nlflow {

namespace {

double interpolate(const std::vector<double>& samples, double step, double w) {
    if (w <= 0.0) {
        return samples.front();
    }
    const double pos = w / step;
    const auto last = samples.size() - 1;
    if (pos >= static_cast<double>(last)) {
        return samples.back();
    }
    const auto k = static_cast<std::size_t>(pos);
    const double frac = pos - static_cast<double>(k);
    return samples[k] + frac * (samples[k + 1] - samples[k]);
}

}  // namespace

SpeedLaw SpeedLaw::reciprocal() {
    SpeedLaw law;
    law.kind_ = Kind::Reciprocal;
    return law;
}

SpeedLaw SpeedLaw::tabulated(double w_step, std::vector<double> values,
                             std::vector<double> derivatives) {
    if (values.empty()) {
        throw std::invalid_argument("tabulated speed law needs at least one knot");
    }
    if (values.size() != derivatives.size()) {
        throw std::invalid_argument("tabulated speed law: " + std::to_string(values.size()) +
                                    " values but " + std::to_string(derivatives.size()) +
                                    " derivatives");
    }
    if (values.size() > 1 && !(w_step > 0.0 && std::isfinite(w_step))) {
        throw std::invalid_argument("tabulated speed law: w_step must be positive");
    }
    for (std::size_t k = 0; k < values.size(); ++k) {
        if (!(values[k] > 0.0) || !std::isfinite(values[k])) {
            throw std::invalid_argument("tabulated speed law: value at knot " +
                                        std::to_string(k) + " must be positive and finite");
        }
        if (!std::isfinite(derivatives[k])) {
            throw std::invalid_argument("tabulated speed law: derivative at knot " +
                                        std::to_string(k) + " is not finite");
        }
    }
    SpeedLaw law;
    law.kind_ = Kind::Tabulated;
    law.w_step_ = values.size() > 1 ? w_step : 1.0;
    law.values_ = std::move(values);
    law.derivatives_ = std::move(derivatives);
    return law;
}

SpeedLaw SpeedLaw::constant(double value, double domain_cap) {
    return tabulated(domain_cap, {value, value}, {0.0, 0.0});
}

double SpeedLaw::domain_cap() const {
    if (kind_ == Kind::Reciprocal) {
        return std::numeric_limits<double>::infinity();
    }
    return w_step_ * static_cast<double>(values_.size() - 1);
}

double SpeedLaw::eval(double w) const {
    if (kind_ == Kind::Reciprocal) {
        return 1.0 / (1.0 + std::max(w, 0.0));
    }
    return interpolate(values_, w_step_, w);
}

double SpeedLaw::derivative(double w) const {
    if (w < 0.0) {
        return 0.0;
    }
    if (kind_ == Kind::Reciprocal) {
        const double s = 1.0 + w;
        return -1.0 / (s * s);
    }
    if (w > domain_cap()) {
        return 0.0;
    }
    return interpolate(derivatives_, w_step_, w);
}

SpeedBounds SpeedLaw::bounds(double m) const {
    if (!(m >= 0.0)) {
        throw std::domain_error("speed bounds need a nonnegative mass, got " + std::to_string(m));
    }
    if (kind_ == Kind::Reciprocal) {
        return {1.0 / (1.0 + m), 1.0, 1.0};
    }

    // Interpolated values are extremal at knots or at m itself. The derivative
    // bound also takes the first knot past m (max-neighbor padding).
    const double at_m = eval(m);
    SpeedBounds b{at_m, at_m, 0.0};
    const std::size_t n = values_.size();
    for (std::size_t k = 0; k < n; ++k) {
        const double w = w_step_ * static_cast<double>(k);
        if (w <= m) {
            b.lambda_tilde = std::min(b.lambda_tilde, values_[k]);
            b.lambda_bar = std::max(b.lambda_bar, values_[k]);
            b.d = std::max(b.d, std::abs(derivatives_[k]));
        } else {
            b.d = std::max(b.d, std::abs(derivatives_[k]));
        }
        // Values are interpolated linearly, so the secant slopes bound the
        // Lipschitz constant of eval itself.
        if (k > 0) {
            b.d = std::max(b.d, std::abs(values_[k] - values_[k - 1]) / w_step_);
        }
        if (w > m) {
            break;
        }
    }
    return b;
}

}  // namespace nlflow
