#include "nlflow/characteristic_curve.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace nlflow {

CharacteristicCurve::CharacteristicCurve(std::vector<double> times, std::vector<double> values,
                                         std::vector<double> slopes)
    : t_(std::move(times)), x_(std::move(values)), s_(std::move(slopes)) {
    if (t_.empty() || t_.size() != x_.size() || t_.size() != s_.size()) {
        throw std::invalid_argument("characteristic curve: knot arrays must be nonempty and equal");
    }
    for (std::size_t i = 1; i < t_.size(); ++i) {
        if (!(t_[i] > t_[i - 1])) {
            throw std::invalid_argument("characteristic curve: knot times must increase (knot " +
                                        std::to_string(i) + ")");
        }
        if (x_[i] < x_[i - 1]) {
            throw std::invalid_argument("characteristic curve: values must be nondecreasing (knot " +
                                        std::to_string(i) + ")");
        }
    }
    const std::size_t n = t_.size() - 1;
    m_left_.resize(n);
    m_right_.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        limit_interval(i);
    }
    segment_ends_ = {t_.front(), t_.back()};
    if (t_.size() == 1) {
        segment_ends_.pop_back();
    }
}

CharacteristicCurve CharacteristicCurve::point(double t0, double x0, double slope) {
    return CharacteristicCurve({t0}, {x0}, {slope});
}

void CharacteristicCurve::limit_interval(std::size_t i) {
    const double h = t_[i + 1] - t_[i];
    const double secant = (x_[i + 1] - x_[i]) / h;
    double a = s_[i];
    double b = s_[i + 1];
    if (secant <= 0.0) {
        a = 0.0;
        b = 0.0;
    } else {
        a = std::max(a, 0.0);
        b = std::max(b, 0.0);
        const double ra = a / secant;
        const double rb = b / secant;
        const double r2 = ra * ra + rb * rb;
        if (r2 > 9.0) {
            const double tau = 3.0 / std::sqrt(r2);
            a = tau * ra * secant;
            b = tau * rb * secant;
        }
    }
    m_left_[i] = a;
    m_right_[i] = b;
}

std::size_t CharacteristicCurve::interval(double t) const {
    if (t <= t_.front()) {
        return 0;
    }
    const auto it = std::upper_bound(t_.begin(), t_.end(), t);
    const auto i = static_cast<std::size_t>(it - t_.begin()) - 1;
    return std::min(i, t_.size() - 2);
}

double CharacteristicCurve::operator()(double t) const {
    if (t_.size() == 1 || t <= t_.front()) {
        return x_.front() + s_.front() * (t - t_.front());
    }
    if (t >= t_.back()) {
        return x_.back() + s_.back() * (t - t_.back());
    }
    const std::size_t i = interval(t);
    const double h = t_[i + 1] - t_[i];
    const double s = (t - t_[i]) / h;
    const double s2 = s * s;
    const double s3 = s2 * s;
    return (2.0 * s3 - 3.0 * s2 + 1.0) * x_[i] + (s3 - 2.0 * s2 + s) * h * m_left_[i] +
           (-2.0 * s3 + 3.0 * s2) * x_[i + 1] + (s3 - s2) * h * m_right_[i];
}

double CharacteristicCurve::derivative(double t) const {
    if (t_.size() == 1 || t <= t_.front()) {
        return s_.front();
    }
    if (t >= t_.back()) {
        return s_.back();
    }
    const std::size_t i = interval(t);
    const double h = t_[i + 1] - t_[i];
    const double s = (t - t_[i]) / h;
    const double s2 = s * s;
    return (6.0 * s2 - 6.0 * s) / h * x_[i] + (3.0 * s2 - 4.0 * s + 1.0) * m_left_[i] +
           (-6.0 * s2 + 6.0 * s) / h * x_[i + 1] + (3.0 * s2 - 2.0 * s) * m_right_[i];
}

double CharacteristicCurve::inverse(double x) const {
    constexpr double slack = 1e-12;
    if (x < x_.front() - slack || x > x_.back() + slack) {
        throw std::domain_error("xi_inverse: position " + std::to_string(x) +
                                " outside curve range [" + std::to_string(x_.front()) + ", " +
                                std::to_string(x_.back()) + "]");
    }
    if (x <= x_.front()) {
        return t_.front();
    }
    if (x >= x_.back()) {
        return t_.back();
    }
    // First knot with value >= x bounds the interval on the right.
    const auto it = std::lower_bound(x_.begin(), x_.end(), x);
    const auto j = static_cast<std::size_t>(it - x_.begin());
    if (x_[j] == x) {
        return t_[j];
    }
    const std::size_t i = j - 1;
    double lo = t_[i];
    double hi = t_[i + 1];
    const double span = x_[i + 1] - x_[i];
    double t = lo + (hi - lo) * (x - x_[i]) / span;
    // Safeguarded Newton: bracket shrinks every step, bisection on bad steps.
    for (int iter = 0; iter < 100; ++iter) {
        const double f = (*this)(t) - x;
        if (f == 0.0) {
            return t;
        }
        if (f > 0.0) {
            hi = t;
        } else {
            lo = t;
        }
        const double df = derivative(t);
        double next = df > 0.0 ? t - f / df : 0.5 * (lo + hi);
        if (!(next > lo && next < hi)) {
            next = 0.5 * (lo + hi);
        }
        if (std::abs(next - t) <= 1e-15 * std::max(1.0, std::abs(t)) || hi - lo <= 1e-15) {
            return next;
        }
        t = next;
    }
    return t;
}

void CharacteristicCurve::append(const CharacteristicCurve& tail) {
    if (tail.empty()) {
        return;
    }
    if (empty()) {
        *this = tail;
        return;
    }
    if (std::abs(tail.start_time() - end_time()) > 1e-12 * std::max(1.0, end_time())) {
        throw std::invalid_argument("characteristic curve: appended window must start at " +
                                    std::to_string(end_time()));
    }
    // The joining knot takes the tail's slope (right derivative).
    s_.back() = tail.s_.front();
    x_.back() = tail.x_.front();
    t_.insert(t_.end(), tail.t_.begin() + 1, tail.t_.end());
    x_.insert(x_.end(), tail.x_.begin() + 1, tail.x_.end());
    s_.insert(s_.end(), tail.s_.begin() + 1, tail.s_.end());
    m_left_.insert(m_left_.end(), tail.m_left_.begin(), tail.m_left_.end());
    m_right_.insert(m_right_.end(), tail.m_right_.begin(), tail.m_right_.end());
    for (std::size_t k = 1; k < tail.segment_ends_.size(); ++k) {
        segment_ends_.push_back(tail.segment_ends_[k]);
    }
    if (segment_ends_.empty()) {
        segment_ends_.push_back(t_.front());
    }
    if (segment_ends_.back() != t_.back()) {
        segment_ends_.push_back(t_.back());
    }
}

}  // namespace nlflow
