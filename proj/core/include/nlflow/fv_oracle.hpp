#pragma once

#include "nlflow/characteristics.hpp"

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace nlflow {

/// Cell averages of a first-order upwind discretization on [0, 1].
struct FvState {
    std::size_t n_cells = 0;
    double dx = 0.0;
    std::vector<double> cells;
    double time = 0.0;

    [[nodiscard]] double mass() const;
};

struct FvFluxes {
    double speed = 0.0;    ///< lambda(W) frozen over the step
    double influx = 0.0;   ///< boundary flux at x = 0
    double outflux = 0.0;  ///< speed * last cell
};

/// Thrown when dt * lambda / dx exceeds 1.
class CflViolation : public std::runtime_error {
public:
    CflViolation(const std::string& what, double required_dt)
        : std::runtime_error(what), required_dt(required_dt) {}
    double required_dt;
};

/// Exact cell averages of rho0 on a uniform grid.
FvState fv_initial(const DensityProfile& rho0, std::size_t n_cells);

/// One explicit upwind step with prescribed boundary flux u_value.
FvState fv_step(const FvState& state, double u_value, const SpeedLaw& law, double dt,
                FvFluxes* fluxes = nullptr);

struct FvSolution {
    std::vector<double> t;
    std::vector<double> W;
    std::vector<double> y;
    FvState final_state;
    double influx_total = 0.0;
    double outflux_total = 0.0;
    std::size_t steps = 0;
    /// |mass(T) - mass(0) - sum (influx - outflux) dt|
    double conservation_error = 0.0;
};

/**
 * Marches to the horizon with dt = cfl * dx / lambda(W^n), the last step
 * shortened to land on T. The boundary flux of a step is the exact average of
 * u over the step; in boundary-density mode it is the average of the
 * prescribed density times the frozen speed.
 */
FvSolution fv_solve(const CharacteristicProblem& problem, std::size_t n_cells, double cfl = 0.9);

}  // namespace nlflow
