#include "nlflow/signals.hpp"

#include "nlflow/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace nlflow {

StepFunction::StepFunction(std::vector<double> breakpoints, std::vector<double> values)
    : breaks_(std::move(breakpoints)), values_(std::move(values)) {
    if (breaks_.size() < 2) {
        throw std::invalid_argument("step function needs at least two breakpoints");
    }
    if (values_.size() + 1 != breaks_.size()) {
        throw std::invalid_argument("step function: " + std::to_string(breaks_.size()) +
                                    " breakpoints need " + std::to_string(breaks_.size() - 1) +
                                    " values, got " + std::to_string(values_.size()));
    }
    for (std::size_t k = 0; k < breaks_.size(); ++k) {
        if (!std::isfinite(breaks_[k])) {
            throw std::invalid_argument("step function: breakpoint " + std::to_string(k) +
                                        " is not finite");
        }
        if (k > 0 && !(breaks_[k] > breaks_[k - 1])) {
            throw std::invalid_argument("step function: breakpoints must be strictly increasing"
                                        " (index " + std::to_string(k) + ")");
        }
    }
    for (std::size_t k = 0; k < values_.size(); ++k) {
        if (!std::isfinite(values_[k]) || values_[k] < 0.0) {
            throw std::invalid_argument("step function: value " + std::to_string(k) +
                                        " must be finite and nonnegative");
        }
    }
    prefix_.resize(breaks_.size());
    prefix_[0] = 0.0;
    for (std::size_t k = 0; k < values_.size(); ++k) {
        prefix_[k + 1] = prefix_[k] + values_[k] * (breaks_[k + 1] - breaks_[k]);
    }
}

std::size_t StepFunction::cell_index(double x) const {
    if (x <= breaks_.front()) {
        return 0;
    }
    const auto it = std::upper_bound(breaks_.begin(), breaks_.end(), x);
    const auto k = static_cast<std::size_t>(it - breaks_.begin()) - 1;
    return std::min(k, values_.size() - 1);
}

double StepFunction::operator()(double x) const {
    if (x < lower() || x > upper()) {
        return 0.0;
    }
    return values_[cell_index(x)];
}

double StepFunction::left_limit(double x) const {
    if (x <= lower() || x > upper()) {
        return 0.0;
    }
    const auto it = std::lower_bound(breaks_.begin(), breaks_.end(), x);
    const auto k = static_cast<std::size_t>(it - breaks_.begin()) - 1;
    return values_[k];
}

double StepFunction::cumulative(double x) const {
    if (x <= lower()) {
        return 0.0;
    }
    if (x >= upper()) {
        return prefix_.back();
    }
    const std::size_t k = cell_index(x);
    return prefix_[k] + values_[k] * (x - breaks_[k]);
}

double StepFunction::integrate(double a, double b) const {
    return cumulative(b) - cumulative(a);
}

double StepFunction::lp_norm(int p) const {
    if (p == 1) {
        return prefix_.back();
    }
    if (p == 2) {
        double sum = 0.0;
        for (std::size_t k = 0; k < values_.size(); ++k) {
            sum += values_[k] * values_[k] * (breaks_[k + 1] - breaks_[k]);
        }
        return std::sqrt(sum);
    }
    throw std::domain_error("lp_norm supports p = 1 or p = 2, got " + std::to_string(p));
}

double StepFunction::sup_norm() const {
    return *std::max_element(values_.begin(), values_.end());
}

namespace {

std::vector<double> uniform_breaks(double lo, double hi, std::size_t cells) {
    if (cells == 0) {
        throw std::invalid_argument("uniform grid needs at least one cell");
    }
    std::vector<double> b(cells + 1);
    for (std::size_t k = 0; k <= cells; ++k) {
        b[k] = lo + (hi - lo) * static_cast<double>(k) / static_cast<double>(cells);
    }
    b.back() = hi;
    return b;
}

std::vector<double> cell_averages(const std::vector<double>& breaks,
                                  const std::function<double(double)>& f) {
    std::vector<double> v(breaks.size() - 1);
    for (std::size_t k = 0; k + 1 < breaks.size(); ++k) {
        const double a = breaks[k];
        const double b = breaks[k + 1];
        // Two Gauss panels per cell.
        const double m = 0.5 * (a + b);
        const double avg = (gauss3(f, a, m) + gauss3(f, m, b)) / (b - a);
        if (avg < 0.0 && avg > -1e-14) {
            v[k] = 0.0;
        } else {
            v[k] = avg;
        }
    }
    return v;
}

}  // namespace

DensityProfile::DensityProfile(std::vector<double> breakpoints, std::vector<double> values)
    : StepFunction(std::move(breakpoints), std::move(values)) {
    if (breaks_.front() != 0.0 || breaks_.back() != 1.0) {
        throw std::invalid_argument("density profile must span exactly [0, 1]");
    }
}

DensityProfile DensityProfile::constant(double value) {
    return DensityProfile({0.0, 1.0}, {value});
}

DensityProfile DensityProfile::uniform(std::vector<double> cell_values) {
    auto b = uniform_breaks(0.0, 1.0, cell_values.size());
    return DensityProfile(std::move(b), std::move(cell_values));
}

DensityProfile DensityProfile::sampled(const std::function<double(double)>& f, std::size_t cells) {
    auto b = uniform_breaks(0.0, 1.0, cells);
    auto v = cell_averages(b, f);
    return DensityProfile(std::move(b), std::move(v));
}

ControlSignal::ControlSignal(std::vector<double> breakpoints, std::vector<double> values)
    : StepFunction(std::move(breakpoints), std::move(values)) {
    if (breaks_.front() != 0.0) {
        throw std::invalid_argument("control signal must start at t = 0");
    }
}

ControlSignal ControlSignal::constant(double horizon, double value) {
    return ControlSignal({0.0, horizon}, {value});
}

ControlSignal ControlSignal::uniform(double horizon, std::vector<double> cell_values) {
    auto b = uniform_breaks(0.0, horizon, cell_values.size());
    return ControlSignal(std::move(b), std::move(cell_values));
}

ControlSignal ControlSignal::sampled(double horizon, const std::function<double(double)>& f,
                                     std::size_t cells) {
    auto b = uniform_breaks(0.0, horizon, cells);
    auto v = cell_averages(b, f);
    return ControlSignal(std::move(b), std::move(v));
}

double tail_mass(const DensityProfile& profile, double delta) {
    if (!(delta >= 0.0 && delta <= 1.0)) {
        throw std::domain_error("tail_mass needs 0 <= delta <= 1, got " + std::to_string(delta));
    }
    return profile.integrate(1.0 - delta, 1.0);
}

}  // namespace nlflow
