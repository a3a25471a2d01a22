#pragma once

#include "menkf/grid.hpp"

#include <memory>
#include <vector>

namespace menkf {

/// Time-varying Dirichlet inlet forcing.
///
/// Burgers:  u(0,t) = u_ref * (1 + theta[0] * sin(omega t + theta[1]))
/// Euler:    u(0,t) = u_ref * (1 + theta(t) * sin(omega t)), where theta(t) is
///           either the assimilated scalar theta[0] or, in truth mode,
///           theta0 * (1 + sin(omega_theta t)).
struct InletForcing {
    enum class Kind { burgers_phase_amplitude, euler_modulated_amplitude };

    Kind kind = Kind::burgers_phase_amplitude;
    double u_ref = 1.0;
    double omega = 0.0;
    std::vector<double> theta;

    // Truth-mode modulation (Euler reference runs only).
    bool truth_modulation = false;
    double theta0 = 0.0;
    double omega_theta = 0.0;

    /// Instantaneous amplitude theta(t).
    double amplitude(double t) const;

    /// Inlet velocity u(x=0, t).
    double velocity(double t) const;

    InletForcing with_theta(std::vector<double> th) const;
};

double inlet_value(const InletForcing& inlet, double t);

/// Centered 7-point damping pass: v_i -= strength * sum_j d_j v_{i+j} with
/// d = (1/64) [-1, 6, -15, 20, -15, 6, -1]. Annihilates polynomials up to
/// degree 5 and fully removes the Nyquist mode at strength 1. The three nodes
/// at each end are left untouched.
std::vector<double> sixth_order_filter(const std::vector<double>& values, double strength);

/// Implicit step system Psi x = c: tridiagonal interior rows plus a Dirichlet
/// inlet row and a linear-extrapolation outlet row (which carries one
/// out-of-band coefficient on x_{n-3}).
struct TridiagonalOperator {
    std::vector<double> lower, diag, upper, rhs;
    double out_of_band = 0.0; // coefficient on x_{n-3} in the outlet row

    int size() const { return static_cast<int>(diag.size()); }
    std::vector<double> apply(const std::vector<double>& x) const;
    std::vector<double> residual(const std::vector<double>& x) const; // c - Psi x
    std::vector<double> jacobi_sweep(const std::vector<double>& x) const;
    std::vector<double> solve() const; // direct banded elimination
};

/// 1D viscous Burgers model on a uniform grid, nondimensionalized by the
/// reference velocity u0 and the forcing wavelength.
struct BurgersModel {
    Grid1D grid;
    double reynolds = 0.0;
    double dt = 0.0;
    double u0 = 1.0;
    double omega = 0.0;

    BurgersModel(const Grid1D& grid, double reynolds, double dt, double u0, double omega);
};

StateField burgers_step_explicit(const StateField& state, const BurgersModel& model,
                                 const InletForcing& inlet, double t);

/// One Jacobi sweep toward the backward-Euler system (advection coefficients
/// frozen at the current state), blended as
/// (1 - relaxation) * state + relaxation * sweep_result.
StateField burgers_step_implicit_single(const StateField& state, const BurgersModel& model,
                                        const InletForcing& inlet, double t, double relaxation);

/// Smoothing iteration of the same implicit step: the system is assembled from
/// `base` (the pre-step state) and one sweep is taken starting at `guess`.
StateField burgers_smoothing_iteration(const StateField& base, const StateField& guess,
                                       const BurgersModel& model, const InletForcing& inlet,
                                       double t, double relaxation);

TridiagonalOperator burgers_assemble_operator(const StateField& base, const BurgersModel& model,
                                              const InletForcing& inlet, double t);

/// 1D inviscid Euler model (conserved variables rho, rho_u, rho_E) with a
/// sixth-order filter pass per step. The state carries SI magnitudes: the
/// inlet follows from (gamma, rho0, T0, mach) with p0 = rho0 R_gas T0,
/// a = sqrt(gamma p0 / rho0) and E0 = p0 / ((gamma - 1) rho0) + u0^2 / 2.
/// Lengths are in forcing wavelengths (lambda = 1 m) and dt is supplied in
/// characteristic times t_c = lambda / (u0 + a).
struct EulerModel {
    Grid1D grid;
    double dt = 0.0; // in characteristic times
    double gamma = 1.4;
    double rho0 = 1.0;
    double T0 = 300.0;
    double mach = 0.0;
    double filter_strength = 1.0;

    double gas_constant = 287.06; // dry air, J/(kg K)
    double u0 = 0.0;
    double sound_speed = 0.0;
    double p0 = 0.0;
    double E0 = 0.0;
    double t_char = 0.0;     // seconds per characteristic time
    double dt_seconds = 0.0; // dt * t_char

    EulerModel(const Grid1D& grid, double dt, double gamma, double rho0, double T0,
               double mach, double filter_strength);

    double pressure(double rho, double rho_u, double rho_E) const;
};

StateField euler_step_explicit(const StateField& state, const EulerModel& model,
                               const InletForcing& inlet, double t);

StateField euler_step_implicit_single(const StateField& state, const EulerModel& model,
                                      const InletForcing& inlet, double t, double relaxation);

StateField euler_smoothing_iteration(const StateField& base, const StateField& guess,
                                     const EulerModel& model, const InletForcing& inlet,
                                     double t, double relaxation);

/// Spatial operator of the momentum equation at interior nodes (boundary
/// entries are zero); used by the conservation diagnostics. The Euler variant
/// is the flux part only; the per-step filter increment is not included.
std::vector<double> burgers_rhs(const StateField& state, const BurgersModel& model);
std::vector<double> euler_momentum_rhs(const StateField& state, const EulerModel& model);

/// Uniform interface over the two models, parameterized by the assimilated
/// theta vector. Used by the assimilation driver and the experiment harness.
class FlowModel {
public:
    virtual ~FlowModel() = default;

    virtual const Grid1D& grid() const = 0;
    virtual double dt() const = 0;
    virtual std::vector<std::string> variables() const = 0;
    virtual int n_params() const = 0;
    virtual int momentum_var() const = 0;

    /// Uniform reference state (the paper-style initial condition).
    virtual StateField initial_state() const = 0;

    virtual StateField step_explicit(const StateField& state, const std::vector<double>& theta,
                                     double t) const = 0;
    virtual StateField step_implicit_single(const StateField& state, const std::vector<double>& theta,
                                            double t, double relaxation) const = 0;
    virtual StateField smoothing_iteration(const StateField& base, const StateField& guess,
                                           const std::vector<double>& theta, double t,
                                           double relaxation) const = 0;
    virtual std::vector<double> momentum_rhs(const StateField& state) const = 0;
};

std::unique_ptr<FlowModel> make_burgers_flow(const BurgersModel& model, const InletForcing& forcing);
std::unique_ptr<FlowModel> make_euler_flow(const EulerModel& model, const InletForcing& forcing);

} // namespace menkf
