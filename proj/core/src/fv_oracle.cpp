#include "nlflow/fv_oracle.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace nlflow {

double FvState::mass() const {
    return dx * std::accumulate(cells.begin(), cells.end(), 0.0);
}

FvState fv_initial(const DensityProfile& rho0, std::size_t n_cells) {
    if (n_cells == 0) {
        throw std::invalid_argument("fv_initial: need at least one cell");
    }
    FvState s;
    s.n_cells = n_cells;
    s.dx = 1.0 / static_cast<double>(n_cells);
    s.cells.resize(n_cells);
    for (std::size_t k = 0; k < n_cells; ++k) {
        const double a = static_cast<double>(k) * s.dx;
        const double b = k + 1 == n_cells ? 1.0 : a + s.dx;
        s.cells[k] = rho0.integrate(a, b) / (b - a);
    }
    return s;
}

FvState fv_step(const FvState& state, double u_value, const SpeedLaw& law, double dt,
                FvFluxes* fluxes) {
    if (!(dt > 0.0)) {
        throw std::invalid_argument("fv_step: dt must be positive");
    }
    if (u_value < 0.0) {
        throw std::invalid_argument("fv_step: boundary flux must be nonnegative");
    }
    const double lambda = law.eval(state.mass());
    const double nu = dt * lambda / state.dx;
    if (nu > 1.0 + 1e-12) {
        std::ostringstream msg;
        msg << "CFL violated: dt * lambda / dx = " << nu << " > 1; need dt <= " << state.dx / lambda;
        throw CflViolation(msg.str(), state.dx / lambda);
    }
    FvState next = state;
    next.time = state.time + dt;
    const double r = dt / state.dx;
    const auto& c = state.cells;
    next.cells[0] = c[0] - r * (lambda * c[0] - u_value);
    for (std::size_t k = 1; k < c.size(); ++k) {
        next.cells[k] = c[k] - r * lambda * (c[k] - c[k - 1]);
    }
    if (fluxes != nullptr) {
        fluxes->speed = lambda;
        fluxes->influx = u_value;
        fluxes->outflux = lambda * c.back();
    }
    return next;
}

FvSolution fv_solve(const CharacteristicProblem& problem, std::size_t n_cells, double cfl) {
    problem.validate();
    if (!(cfl > 0.0 && cfl <= 1.0)) {
        throw std::invalid_argument("fv_solve: cfl must lie in (0, 1]");
    }
    const double horizon = problem.horizon;
    const auto& signal = problem.inflow.signal();
    const bool flux_mode = problem.inflow.mode() == Inflow::Mode::Flux;

    FvSolution out;
    FvState state = fv_initial(problem.rho0, n_cells);
    const double mass0 = state.mass();
    out.t.push_back(0.0);
    out.W.push_back(mass0);
    out.y.push_back(problem.law.eval(mass0) * state.cells.back());

    double net = 0.0;
    while (state.time < horizon) {
        const double lambda = problem.law.eval(state.mass());
        double dt = cfl * state.dx / lambda;
        const bool last = state.time + dt >= horizon * (1.0 - 1e-15);
        if (last) {
            dt = horizon - state.time;
        }
        const double avg = signal.integrate(state.time, state.time + dt) / dt;
        const double u_value = flux_mode ? avg : avg * lambda;
        FvFluxes fx;
        state = fv_step(state, u_value, problem.law, dt, &fx);
        if (last) {
            state.time = horizon;
        }
        out.influx_total += fx.influx * dt;
        out.outflux_total += fx.outflux * dt;
        net += (fx.influx - fx.outflux) * dt;
        ++out.steps;
        out.t.push_back(state.time);
        out.W.push_back(state.mass());
        out.y.push_back(problem.law.eval(state.mass()) * state.cells.back());
    }
    out.conservation_error = std::abs(state.mass() - mass0 - net);
    out.final_state = std::move(state);
    return out;
}

}  // namespace nlflow
