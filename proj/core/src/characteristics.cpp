#include "nlflow/characteristics.hpp"

#include "nlflow/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>
#include <sstream>

namespace nlflow {

void CharacteristicProblem::validate() const {
    if (!(horizon > 0.0) || !std::isfinite(horizon)) {
        throw std::invalid_argument("horizon must be positive and finite");
    }
    if (inflow.signal().horizon() < horizon * (1.0 - 1e-14)) {
        std::ostringstream msg;
        msg << "inflow signal ends at t = " << inflow.signal().horizon()
            << " before the horizon " << horizon;
        throw std::invalid_argument(msg.str());
    }
}

double CharacteristicProblem::mass_bound() const {
    if (inflow.mode() == Inflow::Mode::Flux) {
        return inflow.signal().integrate(0.0, horizon) + rho0.total();
    }
    double peak = rho0.sup_norm();
    const auto& b = inflow.signal();
    const std::size_t last = b.cell_index(horizon);
    for (std::size_t k = 0; k <= last; ++k) {
        peak = std::max(peak, b.values()[k]);
    }
    return peak;
}

double SolveDiagnostics::max_residual() const {
    double r = 0.0;
    for (const auto& w : windows) {
        r = std::max(r, w.residual);
    }
    return r;
}

// ---------------------------------------------------------------------------

InflowHistory::InflowHistory(const Inflow& inflow) : inflow_(inflow), level_{0.0}, mass_{0.0} {}

InflowHistory InflowHistory::from_curve(const Inflow& inflow, const CharacteristicCurve& xi) {
    InflowHistory h(inflow);
    if (inflow.mode() == Inflow::Mode::BoundaryDensity) {
        const auto bp = inflow.signal().breakpoints();
        for (std::size_t j = 1; j + 1 < bp.size(); ++j) {
            if (bp[j] > xi.end_time()) {
                break;
            }
            h.record_breakpoint(xi(bp[j]));
        }
    }
    return h;
}

void InflowHistory::record_breakpoint(double xi_at_break) {
    if (inflow_.mode() != Inflow::Mode::BoundaryDensity) {
        return;
    }
    const std::size_t j = level_.size() - 1;
    const auto values = inflow_.signal().values();
    const double rate = j < values.size() ? values[j] : 0.0;
    mass_.push_back(mass_.back() + rate * (xi_at_break - level_.back()));
    level_.push_back(xi_at_break);
}

double InflowHistory::cumulative(double t, double xi_t) const {
    const auto& sig = inflow_.signal();
    if (inflow_.mode() == Inflow::Mode::Flux) {
        return sig.cumulative(t);
    }
    if (t <= 0.0) {
        return 0.0;
    }
    const std::size_t j = std::min(sig.cell_index(t), level_.size() - 1);
    return mass_[j] + sig.values()[j] * (xi_t - level_[j]);
}

double InflowHistory::cumulative_at_level(double level, const CharacteristicCurve& xi) const {
    if (level <= 0.0) {
        return 0.0;
    }
    const auto& sig = inflow_.signal();
    if (inflow_.mode() == Inflow::Mode::Flux) {
        return sig.cumulative(xi.inverse(std::min(level, xi.end_value())));
    }
    const auto it = std::upper_bound(level_.begin(), level_.end(), level);
    const auto k = static_cast<std::size_t>(it - level_.begin()) - 1;
    const auto values = sig.values();
    const double rate = k < values.size() ? values[k] : 0.0;
    return mass_[k] + rate * (level - level_[k]);
}

// ---------------------------------------------------------------------------

Slice::Slice(const CharacteristicProblem& problem, const CharacteristicCurve& xi,
             const InflowHistory& history, double t)
    : problem_(&problem), xi_(&xi), history_(&history), t_(t), xi_t_(xi(t)),
      entered_(history.cumulative(t, xi_t_)) {}

double Slice::mass(double len) const {
    if (len <= 0.0) {
        return 0.0;
    }
    len = std::min(len, 1.0);
    // Initial data that has advanced by xi(t) occupies [xi(t), 1].
    const double from_initial = problem_->rho0.cumulative(len - xi_t_);
    // Influx that entered at sigma lies at xi(t) - xi(sigma).
    const double level = xi_t_ - len;
    const double from_inflow = entered_ - history_->cumulative_at_level(level, *xi_);
    return from_inflow + from_initial;
}

double Slice::tail(double len) const {
    if (len <= 0.0) {
        return 0.0;
    }
    return mass(1.0) - mass(1.0 - std::min(len, 1.0));
}

// ---------------------------------------------------------------------------

namespace {

// F restricted to one window. Holds the slice at the window start.
class WindowMap {
public:
    WindowMap(const CharacteristicProblem& problem, const CharacteristicCurve& past,
              const InflowHistory& history, double start, double end, int subintervals)
        : problem_(problem), slice_(problem, past, history, start), start_(start), end_(end),
          n_(subintervals), h_((end - start) / subintervals), xi_start_(slice_.position()),
          flux_mode_(problem.inflow.mode() == Inflow::Mode::Flux),
          entered_start_(slice_.entered()),
          rate_(flux_mode_ ? 0.0 : problem.inflow.signal()(start)) {}

    // Total mass at time s when the candidate sits at x = xi(s).
    [[nodiscard]] double mass(double s, double x) const {
        const double advance = x - xi_start_;
        const double entered = flux_mode_ ? problem_.inflow.signal().cumulative(s) - entered_start_
                                          : rate_ * advance;
        return entered + slice_.mass(1.0 - advance);
    }

    [[nodiscard]] double speed(double s, double x) const {
        return problem_.law.eval(mass(s, x));
    }

    [[nodiscard]] double knot(int i) const {
        return i == n_ ? end_ : start_ + h_ * static_cast<double>(i);
    }

    [[nodiscard]] int subintervals() const { return n_; }
    [[nodiscard]] double start() const { return start_; }
    [[nodiscard]] double end() const { return end_; }
    [[nodiscard]] double xi_start() const { return xi_start_; }
    [[nodiscard]] const Slice& slice() const { return slice_; }

    template <class Xi>
    void apply(const Xi& xi, std::vector<double>& values, std::vector<double>& slopes) const {
        values.resize(static_cast<std::size_t>(n_) + 1);
        slopes.resize(static_cast<std::size_t>(n_) + 1);
        values[0] = xi_start_;
        for (int i = 0; i <= n_; ++i) {
            const double t = knot(i);
            slopes[static_cast<std::size_t>(i)] = speed(t, i == 0 ? xi_start_ : xi(t));
        }
        for (int i = 1; i <= n_; ++i) {
            const double a = knot(i - 1);
            const double b = knot(i);
            const double inc = gauss3([&](double s) { return speed(s, xi(s)); }, a, b);
            values[static_cast<std::size_t>(i)] = values[static_cast<std::size_t>(i) - 1] + inc;
        }
    }

    [[nodiscard]] std::vector<double> times() const {
        std::vector<double> t(static_cast<std::size_t>(n_) + 1);
        for (int i = 0; i <= n_; ++i) {
            t[static_cast<std::size_t>(i)] = knot(i);
        }
        return t;
    }

private:
    const CharacteristicProblem& problem_;
    Slice slice_;
    double start_;
    double end_;
    int n_;
    double h_;
    double xi_start_;
    bool flux_mode_;
    double entered_start_;
    double rate_;
};

// Cubic Hermite on the uniform knots of a window, without a search.
class UniformHermite {
public:
    UniformHermite(double start, double h, const std::vector<double>& values,
                   const std::vector<double>& slopes)
        : start_(start), h_(h), x_(values), m_(slopes) {}

    double operator()(double t) const {
        const auto n = static_cast<long>(x_.size()) - 1;
        long i = static_cast<long>((t - start_) / h_);
        i = std::clamp(i, 0L, n - 1);
        const auto k = static_cast<std::size_t>(i);
        const double s = (t - start_) / h_ - static_cast<double>(i);
        const double s2 = s * s;
        const double s3 = s2 * s;
        return (2.0 * s3 - 3.0 * s2 + 1.0) * x_[k] + (s3 - 2.0 * s2 + s) * h_ * m_[k] +
               (-2.0 * s3 + 3.0 * s2) * x_[k + 1] + (s3 - s2) * h_ * m_[k + 1];
    }

private:
    double start_;
    double h_;
    const std::vector<double>& x_;
    const std::vector<double>& m_;
};

struct WindowResult {
    CharacteristicCurve curve;
    int iterations;
    double residual;
};

WindowResult solve_window(const WindowMap& map, double slope_start, const SolveOptions& opt) {
    const int n = map.subintervals();
    const double h = (map.end() - map.start()) / n;
    std::vector<double> values(static_cast<std::size_t>(n) + 1);
    std::vector<double> slopes(static_cast<std::size_t>(n) + 1, slope_start);
    for (int i = 0; i <= n; ++i) {
        values[static_cast<std::size_t>(i)] = map.xi_start() + slope_start * (map.knot(i) - map.start());
    }
    std::vector<double> next_values;
    std::vector<double> next_slopes;
    double residual = std::numeric_limits<double>::infinity();
    for (int iter = 1; iter <= opt.max_iter; ++iter) {
        UniformHermite candidate(map.start(), h, values, slopes);
        map.apply(candidate, next_values, next_slopes);
        residual = 0.0;
        for (std::size_t i = 0; i < values.size(); ++i) {
            residual = std::max(residual, std::abs(next_values[i] - values[i]));
        }
        values.swap(next_values);
        slopes.swap(next_slopes);
        if (residual <= opt.tol) {
            return {CharacteristicCurve(map.times(), std::move(values), std::move(slopes)), iter,
                    residual};
        }
    }
    std::ostringstream msg;
    msg << "fixed-point iteration did not converge on window [" << map.start() << ", "
        << map.end() << "] after " << opt.max_iter << " iterations (residual " << residual
        << ")";
    throw SolverError(msg.str(), map.start(), map.end(), residual);
}

int subintervals_for(double length, double reference, const SolveOptions& opt) {
    const double h_target = reference / opt.knots_per_window;
    const double n = std::ceil(length / h_target - 1e-9);
    return std::max(opt.min_knots_per_window, static_cast<int>(std::min(n, 1e9)));
}

}  // namespace

CharacteristicCurve apply_F(const std::function<double(double)>& xi,
                            const CharacteristicProblem& problem,
                            const CharacteristicCurve& past, Window window, int knots) {
    if (!(window.start >= 0.0) || !(window.end > window.start) ||
        window.end > problem.horizon * (1.0 + 1e-14)) {
        throw std::domain_error("apply_F: window must satisfy 0 <= start < end <= horizon");
    }
    if (std::abs(past.end_time() - window.start) > 1e-12 * std::max(1.0, window.start)) {
        throw std::domain_error("apply_F: past curve must end at the window start");
    }
    if (knots < 1) {
        throw std::domain_error("apply_F: need at least one subinterval");
    }
    const InflowHistory history = InflowHistory::from_curve(problem.inflow, past);
    const WindowMap map(problem, past, history, window.start, window.end, knots);
    std::vector<double> values;
    std::vector<double> slopes;
    map.apply(xi, values, slopes);
    return CharacteristicCurve(map.times(), std::move(values), std::move(slopes));
}

XiSolution solve_characteristic(const CharacteristicProblem& problem, const SolveOptions& opt) {
    problem.validate();
    if (!(opt.tol > 0.0)) {
        throw std::invalid_argument("solver tolerance must be positive");
    }
    const double horizon = problem.horizon;
    const double m = problem.mass_bound();
    const SpeedBounds bnd = problem.law.bounds(m);

    XiSolution out;
    out.diagnostics.mass_bound = m;
    out.diagnostics.bounds = bnd;
    out.diagnostics.constant_speed = bnd.d == 0.0;

    const double threshold = bnd.d > 0.0 ? bnd.lambda_tilde / (2.0 * bnd.d)
                                         : std::numeric_limits<double>::infinity();
    // delta < 1 and delta < 1 / lambda_bar keep every window's advance below 1.
    const double max_window = 0.999 * std::min(1.0, 1.0 / bnd.lambda_bar);

    // Inflow breakpoints inside (0, horizon): fixed window ends.
    std::vector<double> fixed_ends;
    for (double b : problem.inflow.signal().breakpoints()) {
        if (b > 0.0 && b < horizon) {
            fixed_ends.push_back(b);
        }
    }
    std::size_t next_fixed = 0;

    // Positions of xi at which the integrand loses smoothness.
    std::priority_queue<double, std::vector<double>, std::greater<>> levels;
    for (double x : problem.rho0.breakpoints()) {
        levels.push(1.0 - x);
    }
    constexpr double level_eps = 1e-11;

    InflowHistory history(problem.inflow);
    CharacteristicCurve curve = CharacteristicCurve::point(0.0, 0.0, 0.0);
    const double time_eps = 1e-14 * std::max(1.0, horizon);

    double t_a = 0.0;
    while (t_a < horizon - time_eps) {
        const Slice slice(problem, curve, history, t_a);
        const double speed_a = problem.law.eval(slice.total());

        // Window length from the tail-mass condition.
        double cap = std::min(max_window, horizon - t_a);
        bool ends_at_fixed = false;
        if (next_fixed < fixed_ends.size() && fixed_ends[next_fixed] - t_a <= cap) {
            cap = fixed_ends[next_fixed] - t_a;
            ends_at_fixed = true;
        }
        double delta = cap;
        if (slice.tail(bnd.lambda_bar * cap) >= threshold) {
            ends_at_fixed = false;
            double lo = 0.0;
            double hi = cap;
            for (int k = 0; k < 100 && hi - lo > 1e-15 * cap; ++k) {
                const double mid = 0.5 * (lo + hi);
                if (slice.tail(bnd.lambda_bar * mid) < threshold) {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            delta = 0.999 * lo;
            if (!(delta > 0.0)) {
                throw SolverError("no admissible window length at t = " + std::to_string(t_a),
                                  t_a, t_a, 0.0);
            }
        }
        double t_b = ends_at_fixed ? fixed_ends[next_fixed] : t_a + delta;
        if (!ends_at_fixed && horizon - t_b <= time_eps) {
            t_b = horizon;
        }

        auto solve_on = [&](double end) -> WindowResult {
            const int n = out.diagnostics.constant_speed
                              ? 1
                              : subintervals_for(end - t_a, max_window, opt);
            const WindowMap map(problem, curve, history, t_a, end, n);
            if (out.diagnostics.constant_speed) {
                const double v = problem.law.eval(0.0);
                return {CharacteristicCurve({t_a, end}, {map.xi_start(), map.xi_start() + v * (end - t_a)},
                                            {v, v}),
                        0, 0.0};
            }
            return solve_window(map, speed_a, opt);
        };

        WindowResult win = solve_on(t_b);
        const double tail = slice.tail(bnd.lambda_bar * (t_b - t_a));

        while (!levels.empty() && levels.top() <= curve.end_value() + level_eps) {
            levels.pop();
        }
        bool aligned = false;
        if (!levels.empty() && levels.top() < win.curve.end_value() - level_eps) {
            const double target = levels.top();
            double t_c = win.curve.inverse(target);
            for (int k = 0; k < 12; ++k) {
                win = solve_on(t_c);
                const double err = win.curve.end_value() - target;
                if (std::abs(err) <= 1e-14 * std::max(1.0, target)) {
                    break;
                }
                t_c = std::clamp(t_c - err / win.curve.end_slope(), t_a + 1e-3 * (t_c - t_a), t_b);
            }
            aligned = true;
            ends_at_fixed = false;
            t_b = win.curve.end_time();
        }

        out.diagnostics.windows.push_back({t_a, t_b, win.iterations, win.residual, tail, aligned});
        curve.append(win.curve);
        t_a = t_b;
        if (ends_at_fixed) {
            history.record_breakpoint(curve.end_value());
            levels.push(1.0 + curve.end_value());
            ++next_fixed;
        }
    }
    out.curve = std::move(curve);
    return out;
}

CharacteristicCurve solve_xi(const CharacteristicProblem& problem, const SolveOptions& options) {
    return solve_characteristic(problem, options).curve;
}

double xi_inverse(const CharacteristicCurve& xi, double x) {
    return xi.inverse(x);
}

}  // namespace nlflow
