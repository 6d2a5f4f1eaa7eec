#pragma once

// Helpers shared by the unit and acceptance tests that build on the library.

#include "nlflow/characteristics.hpp"
#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

namespace support {

/// Longest window from t_a (capped at the horizon and 0.999 min(1, 1/lambda_bar))
/// whose slice tail satisfies tail(lambda_bar * delta) < lambda_tilde / (2 d).
inline double admissible_window(const nlflow::CharacteristicProblem& problem,
                                const nlflow::CharacteristicCurve& past, double t_a) {
    const auto b = problem.law.bounds(problem.mass_bound());
    const nlflow::InflowHistory history = nlflow::InflowHistory::from_curve(problem.inflow, past);
    const nlflow::Slice slice(problem, past, history, t_a);
    const double threshold = b.lambda_tilde / (2.0 * b.d);
    const double cap = std::min(0.999 * std::min(1.0, 1.0 / b.lambda_bar), problem.horizon - t_a);
    if (slice.tail(b.lambda_bar * cap) < threshold) {
        return cap;
    }
    double lo = 0.0;
    double hi = cap;
    for (int k = 0; k < 80; ++k) {
        const double mid = 0.5 * (lo + hi);
        (slice.tail(b.lambda_bar * mid) < threshold ? lo : hi) = mid;
    }
    return 0.999 * lo;
}

/// Random continuous piecewise-linear curve through (t_a, x_a) with slopes
/// drawn from [lo, hi]: a member of the admissible set on [t_a, t_b].
struct PiecewiseLinear {
    std::vector<double> t;
    std::vector<double> x;

    double operator()(double s) const {
        if (s <= t.front()) {
            return x.front();
        }
        const auto it = std::upper_bound(t.begin(), t.end(), s);
        if (it == t.end()) {
            return x.back();
        }
        const auto k = static_cast<std::size_t>(it - t.begin()) - 1;
        return x[k] + (x[k + 1] - x[k]) * (s - t[k]) / (t[k + 1] - t[k]);
    }
};

inline PiecewiseLinear random_curve(oracle::Gen& gen, double t_a, double t_b, double x_a, double lo,
                                    double hi) {
    PiecewiseLinear c;
    c.t = gen.breakpoints(t_a, t_b, gen.integer(1, 8));
    c.x.push_back(x_a);
    for (std::size_t k = 1; k < c.t.size(); ++k) {
        c.x.push_back(c.x.back() + gen.uniform(lo, hi) * (c.t[k] - c.t[k - 1]));
    }
    return c;
}

/// Sup distance of two piecewise-linear curves: attained at a breakpoint of either.
inline double sup_distance(const PiecewiseLinear& a, const PiecewiseLinear& b) {
    double d = 0.0;
    for (const auto* c : {&a, &b}) {
        for (double s : c->t) {
            d = std::max(d, std::abs(a(s) - b(s)));
        }
    }
    return d;
}

/// Sup distance of two curves on the same knot grid.
inline double knot_distance(const nlflow::CharacteristicCurve& a, const nlflow::CharacteristicCurve& b) {
    double d = 0.0;
    const auto va = a.values();
    const auto vb = b.values();
    for (std::size_t i = 0; i < va.size(); ++i) {
        d = std::max(d, std::abs(va[i] - vb[i]));
    }
    return d;
}

/// Random piecewise-constant scenario in flux mode with M <= m_max.
inline nlflow::CharacteristicProblem random_flux_problem(oracle::Gen& gen, double horizon, double m_max) {
    auto rb = gen.breakpoints(0.0, 1.0, gen.integer(1, 6));
    auto rv = gen.values(rb.size() - 1, 3.0);
    auto ub = gen.breakpoints(0.0, horizon, gen.integer(1, 6));
    auto uv = gen.values(ub.size() - 1, 3.0);
    nlflow::DensityProfile rho0(rb, rv);
    nlflow::ControlSignal u(ub, uv);
    const double m = rho0.total() + u.total();
    if (m > m_max) {
        const double s = m_max / m;
        for (double& v : rv) {
            v *= s;
        }
        for (double& v : uv) {
            v *= s;
        }
        rho0 = nlflow::DensityProfile(rb, rv);
        u = nlflow::ControlSignal(ub, uv);
    }
    return {nlflow::Inflow::flux(u), rho0, nlflow::SpeedLaw::reciprocal(), horizon};
}

}  // namespace support
