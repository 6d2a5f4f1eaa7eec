#pragma once

#include "nlflow/transport.hpp"

#include <stdexcept>
#include <string>
#include <vector>

namespace nlflow {

/// Transfer between the equilibria rho = rho0 and rho = rho1 under
/// lambda(W) = 1 / (1 + W). Either order is allowed; rho0 > rho1 is handled
/// by the reversal (t, x) -> (T - t, 1 - x).
struct TransferScenario {
    double rho0;  ///< initial equilibrium density
    double rho1;  ///< target equilibrium density

    /// Throws std::invalid_argument on negative or non-finite densities.
    void validate() const;
    [[nodiscard]] bool decreasing() const { return rho0 > rho1; }
};

/// 1 + (rho0 + rho1) / 2.
double minimal_time(const TransferScenario& scenario);

/**
 * Closed-form optimal transfer: the boundary density is switched to rho1 at
 * t = 0 and held.
 *
 *   W(t)  = -1 + sqrt((1 + rho0)^2 + 2 t (rho1 - rho0))
 *   xi(t) = (sqrt((1 + rho0)^2 + 2 t (rho1 - rho0)) - (1 + rho0)) / (rho1 - rho0)
 *   u(t)  = rho1 / (1 + W(t)),   y(t) = rho0 / (1 + W(t))   on (0, T)
 *
 * Outside (0, T) the state is the respective equilibrium. When rho0 = rho1 the
 * trajectory is constant.
 */
class ClosedFormTransfer {
public:
    explicit ClosedFormTransfer(TransferScenario scenario);

    [[nodiscard]] const TransferScenario& scenario() const { return s_; }
    [[nodiscard]] double T() const { return T_; }

    [[nodiscard]] double W(double t) const;
    [[nodiscard]] double xi(double t) const;
    /// Influx; u(0) is the right limit.
    [[nodiscard]] double u(double t) const;
    /// Outflux; y(T) is the right limit.
    [[nodiscard]] double y(double t) const;

    /// Boundary density rho1 on [0, horizon], the control that realizes the
    /// transfer in boundary-density mode.
    [[nodiscard]] ControlSignal boundary_control(double horizon) const;
    /// Problem for the characteristic solver reproducing this transfer.
    [[nodiscard]] CharacteristicProblem problem(double horizon) const;

private:
    [[nodiscard]] double W_increasing(double t) const;
    [[nodiscard]] double xi_increasing(double t) const;

    TransferScenario s_;
    double T_;
    // Increasing transfer rho_lo -> rho_hi that the decreasing one reverses.
    double lo_;
    double hi_;
};

struct TransferDiagnostics {
    double T;
    double alpha;                  ///< int_0^T (u - y1): excess influx
    double beta;                   ///< int_0^T (y0 - y): backlog
    double mass_balance_residual;  ///< alpha + beta + (y1 - y0) T - (rho1 - rho0)
    double u_jump;                 ///< u(0+) - u(0-)
    double y_jump;                 ///< y(T+) - y(T-)
};

/**
 * alpha = rho1 - rho1 T / (1 + rho1) = rho1 (rho1 - rho0) / (2 (1 + rho1))
 * beta  = (rho0 T - rho0 - rho0^2) / (1 + rho0) = rho0 (rho1 - rho0) / (2 (1 + rho0))
 * Throws std::invalid_argument when rho0 == rho1.
 */
TransferDiagnostics transfer_diagnostics(const TransferScenario& scenario);

class TargetNotReached : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct InequalityCheck {
    std::string name;
    double lhs;
    double rhs;
    bool holds;  ///< lhs <= rhs + tolerance
};

struct OptimalityCertificate {
    double T = 0.0;
    double t0 = 0.0;  ///< onset of the final stretch of boundary density rho1
    double t1 = 0.0;  ///< xi(t1) = 1
    double xi_t0 = 0.0;
    bool onset_before_exit = true;  ///< t0 < t1
    double bound_value = 0.0;
    /// Combined bound from the three phase estimates with the measured xi
    /// values (first case only; equals bound_value when xi(T) - xi(t0) = 1).
    double general_bound = 0.0;
    double slack = 0.0;  ///< T - bound_value
    double tolerance = 0.0;
    bool satisfied = false;  ///< slack >= -tolerance
    std::vector<InequalityCheck> inequalities;
    [[nodiscard]] bool inequalities_hold() const;
};

struct CertificateOptions {
    double density_tol = 1e-6;  ///< |rho(t, 0) - rho1| counted as equal
    double slice_tol = 1e-6;    ///< int |rho(T, .) - rho1| allowed at T
    double tolerance = 1e-6;    ///< slack and inequality tolerance
    SolveOptions solver{};
};

/**
 * Simulates the boundary density `control` from the equilibrium rho0 to T and
 * checks the lower-bound chain for reaching rho1. t0 is the start of the
 * trailing run where the control equals rho1, moved forward if needed so that
 * xi(T) - xi(t0) <= 1. Requires rho1 > rho0; throws std::invalid_argument
 * otherwise and TargetNotReached if rho(T, .) is not rho1.
 */
OptimalityCertificate check_lower_bound(const ControlSignal& control, double rho0, double rho1,
                                        double T, const CertificateOptions& options = {});

/**
 * First time the state equals rho1 when the boundary density `control`
 * (which must end with a run of rho1 reaching its horizon) is applied from
 * the equilibrium rho0: xi^{-1}(xi(t0) + 1). Throws TargetNotReached if that
 * happens after the control's horizon.
 */
double reach_time(const ControlSignal& control, double rho0, double rho1,
                  const CertificateOptions& options = {});

}  // namespace nlflow
