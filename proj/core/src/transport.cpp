#include "nlflow/transport.hpp"

#include "nlflow/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace nlflow {

namespace {

constexpr int kInflux = 0;
constexpr int kOutflux = 1;
constexpr int kVariation = 2;

// Widest panel used for slice integrals.
constexpr double kMaxPanel = 1.0 / 512.0;

void sort_unique(std::vector<double>& v) {
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end(),
                        [](double a, double b) { return std::abs(a - b) <= 1e-15; }),
            v.end());
}

template <class F>
double integrate_panels(const F& f, const std::vector<double>& breaks, double max_width) {
    double sum = 0.0;
    for (std::size_t k = 0; k + 1 < breaks.size(); ++k) {
        const double a = breaks[k];
        const double b = breaks[k + 1];
        const int n = std::max(1, static_cast<int>(std::ceil((b - a) / max_width)));
        const double h = (b - a) / n;
        for (int i = 0; i < n; ++i) {
            const double lo = a + h * i;
            const double hi = i + 1 == n ? b : lo + h;
            sum += gauss3(f, lo, hi);
        }
    }
    return sum;
}

// int_a^b |g| for g smooth on (a, b) apart from a few sign changes.
template <class G>
double integrate_abs(const G& g, double a, double b) {
    std::vector<double> cuts{a};
    constexpr int probes = 4;
    double prev_s = a;
    double prev_g = g(a + 1e-14 * std::max(1.0, std::abs(a)));
    for (int k = 1; k <= probes; ++k) {
        const double s = a + (b - a) * k / probes;
        const double gs = g(k == probes ? s - 1e-14 * std::max(1.0, std::abs(s)) : s);
        if ((prev_g < 0.0) != (gs < 0.0) && prev_g != 0.0 && gs != 0.0) {
            double lo = prev_s;
            double hi = s;
            for (int it = 0; it < 60 && hi - lo > 1e-15; ++it) {
                const double mid = 0.5 * (lo + hi);
                if ((g(mid) < 0.0) == (prev_g < 0.0)) {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            cuts.push_back(0.5 * (lo + hi));
        }
        prev_s = s;
        prev_g = gs;
    }
    cuts.push_back(b);
    double sum = 0.0;
    for (std::size_t k = 0; k + 1 < cuts.size(); ++k) {
        sum += gauss3([&](double s) { return std::abs(g(s)); }, cuts[k], cuts[k + 1]);
    }
    return sum;
}

}  // namespace

Trajectory::Trajectory(CharacteristicProblem problem, XiSolution solution)
    : problem_(std::move(problem)), xi_(std::move(solution.curve)),
      diagnostics_(std::move(solution.diagnostics)),
      history_(InflowHistory::from_curve(problem_.inflow, xi_)) {
    // A curve that lands on x = 1 at T up to the solver tolerance exits at T.
    if (xi_.end_value() >= 1.0 - 1e-9) {
        exit_time_ = xi_.inverse(std::min(1.0, xi_.end_value()));
    }
    const auto times = xi_.times();
    const std::size_t n = times.size();
    in_prefix_.assign(n, 0.0);
    out_prefix_.assign(n, 0.0);
    var_prefix_.assign(n, 0.0);
    for (std::size_t i = 0; i + 1 < n; ++i) {
        const double a = times[i];
        const double b = times[i + 1];
        in_prefix_[i + 1] = in_prefix_[i] + gauss3([&](double s) { return integrand(s, kInflux); }, a, b);
        out_prefix_[i + 1] =
            out_prefix_[i] + gauss3([&](double s) { return integrand(s, kOutflux); }, a, b);
        var_prefix_[i + 1] =
            var_prefix_[i] + integrate_abs([&](double s) { return w_derivative(s); }, a, b);
    }
}

Trajectory Trajectory::simulate(CharacteristicProblem problem, const SolveOptions& options) {
    XiSolution sol = solve_characteristic(problem, options);
    return Trajectory(std::move(problem), std::move(sol));
}

double Trajectory::input_mass() const {
    return cumulative_influx(horizon()) + problem_.rho0.total();
}

double Trajectory::total_mass(double t) const {
    t = std::clamp(t, 0.0, horizon());
    return Slice(problem_, xi_, history_, t).total();
}

double Trajectory::speed(double t) const {
    return problem_.law.eval(total_mass(t));
}

double Trajectory::inflow_density(double tau) const {
    const double v = problem_.inflow.signal()(tau);
    if (problem_.inflow.mode() == Inflow::Mode::BoundaryDensity) {
        return v;
    }
    return v / speed(tau);
}

double Trajectory::rho_at(double t, double x) const {
    t = std::clamp(t, 0.0, horizon());
    x = std::clamp(x, 0.0, 1.0);
    const double xt = xi_(t);
    if (x > xt) {
        return problem_.rho0(x - xt);
    }
    const double tau = xi_.inverse(std::clamp(xt - x, xi_.start_value(), xi_.end_value()));
    return inflow_density(tau);
}

double Trajectory::influx(double t) const {
    t = std::clamp(t, 0.0, horizon());
    const double v = problem_.inflow.signal()(t);
    if (problem_.inflow.mode() == Inflow::Mode::Flux) {
        return v;
    }
    return v * speed(t);
}

double Trajectory::outflux(double t) const {
    t = std::clamp(t, 0.0, horizon());
    return speed(t) * rho_at(t, 1.0);
}

double Trajectory::w_derivative(double t) const {
    return influx(t) - outflux(t);
}

double Trajectory::integrand(double s, int which) const {
    switch (which) {
    case kInflux:
        return influx(s);
    case kOutflux:
        return outflux(s);
    default:
        return std::abs(w_derivative(s));
    }
}

double Trajectory::running(const std::vector<double>& prefix, double t, int which) const {
    const auto times = xi_.times();
    t = std::clamp(t, times.front(), times.back());
    auto it = std::upper_bound(times.begin(), times.end(), t);
    auto i = static_cast<std::size_t>(it - times.begin());
    i = i == 0 ? 0 : i - 1;
    const double a = times[i];
    if (t <= a) {
        return prefix[i];
    }
    if (which != kVariation) {
        return prefix[i] + gauss3([&](double s) { return integrand(s, which); }, a, t);
    }
    return prefix[i] + integrate_abs([&](double s) { return w_derivative(s); }, a, t);
}

double Trajectory::cumulative_influx(double t) const {
    t = std::clamp(t, 0.0, horizon());
    if (problem_.inflow.mode() == Inflow::Mode::Flux) {
        return problem_.inflow.signal().cumulative(t);
    }
    return running(in_prefix_, t, kInflux);
}

double Trajectory::cumulative_outflux(double t) const {
    return running(out_prefix_, t, kOutflux);
}

double Trajectory::total_variation(double t) const {
    return running(var_prefix_, t, kVariation);
}

double Trajectory::backlog(const ControlSignal& y_d, double t) const {
    const double limit = std::min(y_d.horizon(), horizon());
    if (t < 0.0 || t > limit * (1.0 + 1e-12)) {
        throw std::domain_error("backlog: t = " + std::to_string(t) + " outside [0, " +
                                std::to_string(limit) + "]");
    }
    return y_d.cumulative(t) - cumulative_outflux(t);
}

std::vector<double> Trajectory::event_times() const {
    const auto ends = xi_.segment_ends();
    return {ends.begin(), ends.end()};
}

std::vector<double> Trajectory::slice_breaks(double t) const {
    t = std::clamp(t, 0.0, horizon());
    const double xt = xi_(t);
    std::vector<double> out{0.0, 1.0};
    auto add = [&](double x) {
        if (x > 0.0 && x < 1.0) {
            out.push_back(x);
        }
    };
    add(xt);
    for (double b : problem_.rho0.breakpoints()) {
        add(b + xt);
    }
    for (double e : xi_.segment_ends()) {
        if (e > t) {
            break;
        }
        add(xt - xi_(e));
    }
    sort_unique(out);
    return out;
}

double Trajectory::l1_slice_distance(double s, double t) const {
    if (s == t) {
        return 0.0;
    }
    std::vector<double> breaks = slice_breaks(s);
    const std::vector<double> other = slice_breaks(t);
    breaks.insert(breaks.end(), other.begin(), other.end());
    sort_unique(breaks);
    return integrate_panels([&](double x) { return std::abs(rho_at(s, x) - rho_at(t, x)); }, breaks,
                            kMaxPanel);
}

double Trajectory::slice_distance_to(double t, double c) const {
    return integrate_panels([&](double x) { return std::abs(rho_at(t, x) - c); }, slice_breaks(t),
                            kMaxPanel);
}

double Trajectory::x_slice_distance(double a, double b) const {
    if (a == b) {
        return 0.0;
    }
    const double top = xi_.end_value();
    std::vector<double> breaks{0.0, horizon()};
    const auto ends = xi_.segment_ends();
    breaks.insert(breaks.end(), ends.begin(), ends.end());
    auto add_level = [&](double level) {
        if (level >= 0.0 && level <= top) {
            breaks.push_back(xi_.inverse(level));
        }
    };
    for (double x : {a, b}) {
        add_level(x);
        for (double e : ends) {
            add_level(x + xi_(e));
        }
        for (double p : problem_.rho0.breakpoints()) {
            add_level(x - p);
        }
    }
    sort_unique(breaks);
    return integrate_panels([&](double t) { return std::abs(rho_at(t, a) - rho_at(t, b)); }, breaks,
                            kMaxPanel * std::max(1.0, horizon()));
}

double Trajectory::slice_lp_norm(double t, int p) const {
    if (p != 1 && p != 2) {
        throw std::domain_error("slice_lp_norm supports p = 1 or p = 2, got " + std::to_string(p));
    }
    const double v = integrate_panels(
        [&](double x) {
            const double r = rho_at(t, x);
            return p == 1 ? r : r * r;
        },
        slice_breaks(t), kMaxPanel);
    return p == 1 ? v : std::sqrt(v);
}

std::vector<double> Trajectory::slice_cell_averages(double t, std::size_t n) const {
    if (n == 0) {
        throw std::invalid_argument("slice_cell_averages: need at least one cell");
    }
    t = std::clamp(t, 0.0, horizon());
    const Slice slice(problem_, xi_, history_, t);
    const double dx = 1.0 / static_cast<double>(n);
    std::vector<double> out(n);
    double left = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        const double right = slice.mass(k + 1 == n ? 1.0 : dx * static_cast<double>(k + 1));
        out[k] = (right - left) / dx;
        left = right;
    }
    return out;
}

TimeSeries Trajectory::sample(std::size_t n, const ControlSignal* y_d) const {
    if (n == 0) {
        throw std::invalid_argument("sample: need at least one interval");
    }
    TimeSeries s;
    for (std::size_t i = 0; i <= n; ++i) {
        const double t = horizon() * static_cast<double>(i) / static_cast<double>(n);
        s.t.push_back(t);
        s.W.push_back(total_mass(t));
        s.u.push_back(influx(t));
        s.y.push_back(outflux(t));
        s.beta.push_back(y_d != nullptr && t <= y_d->horizon() ? backlog(*y_d, t) : 0.0);
    }
    return s;
}

}  // namespace nlflow
