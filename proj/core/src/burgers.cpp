#include "menkf/errors.hpp"
#include "menkf/models.hpp"

#include <cmath>
#include <string>

namespace menkf {

BurgersModel::BurgersModel(const Grid1D& g, double reynolds_, double dt_, double u0_, double omega_)
    : grid(g), reynolds(reynolds_), dt(dt_), u0(u0_), omega(omega_)
{
    if (reynolds <= 0.0)
        throw ConfigError("BurgersModel: Reynolds number must be positive, got " + std::to_string(reynolds));
    if (dt <= 0.0)
        throw ConfigError("BurgersModel: dt must be positive, got " + std::to_string(dt));
    if (grid.n_nodes < 4)
        throw ConfigError("BurgersModel: grid too small (" + std::to_string(grid.n_nodes) + " nodes)");
    const double cfl = dt * std::abs(u0) / grid.spacing;
    if (cfl >= 1.0)
        throw ConfigError("BurgersModel: advective CFL " + std::to_string(cfl) +
                          " >= 1 for dt=" + std::to_string(dt) + ", dx=" + std::to_string(grid.spacing));
}

StateField burgers_step_explicit(const StateField& state, const BurgersModel& model,
                                 const InletForcing& inlet, double t)
{
    if (!(state.grid() == model.grid))
        throw ContractError("burgers_step_explicit: state grid does not match model grid");
    const std::vector<double>& u = state.var(0);
    const int n = model.grid.n_nodes;
    const double dx = model.grid.spacing;
    const double nu = 1.0 / model.reynolds;
    const double dt = model.dt;

    StateField out(model.grid, state.names());
    std::vector<double>& v = out.var(0);
    for (int i = 1; i < n - 1; ++i) {
        const double adv = u[i] * (u[i + 1] - u[i - 1]) / (2.0 * dx);
        const double diff = nu * (u[i + 1] - 2.0 * u[i] + u[i - 1]) / (dx * dx);
        v[i] = u[i] + dt * (diff - adv);
    }
    v[0] = inlet.velocity(t + dt);
    v[n - 1] = 2.0 * v[n - 2] - v[n - 3];
    out.check_finite("burgers_step_explicit at t=" + std::to_string(t));
    return out;
}

TridiagonalOperator burgers_assemble_operator(const StateField& base, const BurgersModel& model,
                                              const InletForcing& inlet, double t)
{
    if (!(base.grid() == model.grid))
        throw ContractError("burgers_assemble_operator: state grid does not match model grid");
    const std::vector<double>& u = base.var(0);
    const int n = model.grid.n_nodes;
    const double dx = model.grid.spacing;
    const double nu = 1.0 / model.reynolds;
    const double dt = model.dt;

    TridiagonalOperator op;
    op.lower.assign(n, 0.0);
    op.diag.assign(n, 1.0);
    op.upper.assign(n, 0.0);
    op.rhs.assign(n, 0.0);

    // Backward Euler with advection coefficients frozen at the base state.
    for (int i = 1; i < n - 1; ++i) {
        const double adv = dt * u[i] / (2.0 * dx);
        const double dif = dt * nu / (dx * dx);
        op.lower[i] = -adv - dif;
        op.diag[i] = 1.0 + 2.0 * dif;
        op.upper[i] = adv - dif;
        op.rhs[i] = u[i];
    }
    op.rhs[0] = inlet.velocity(t + dt);
    op.out_of_band = 1.0;
    op.lower[n - 1] = -2.0;
    op.rhs[n - 1] = 0.0;
    return op;
}

namespace {

StateField burgers_sweep(const StateField& base, const StateField& guess, const BurgersModel& model,
                         const InletForcing& inlet, double t, double relaxation, const char* where)
{
    if (relaxation <= 0.0 || relaxation > 1.0)
        throw ContractError(std::string(where) + ": relaxation must be in (0, 1], got " +
                            std::to_string(relaxation));
    if (!guess.same_layout(base))
        throw ContractError(std::string(where) + ": base and guess layouts differ");
    const TridiagonalOperator op = burgers_assemble_operator(base, model, inlet, t);
    const std::vector<double> swept = op.jacobi_sweep(guess.var(0));

    StateField out(model.grid, base.names());
    std::vector<double>& v = out.var(0);
    const std::vector<double>& g = guess.var(0);
    for (int i = 0; i < model.grid.n_nodes; ++i)
        v[i] = (1.0 - relaxation) * g[i] + relaxation * swept[i];
    out.check_finite(std::string(where) + " at t=" + std::to_string(t));
    return out;
}

} // namespace

StateField burgers_step_implicit_single(const StateField& state, const BurgersModel& model,
                                        const InletForcing& inlet, double t, double relaxation)
{
    return burgers_sweep(state, state, model, inlet, t, relaxation, "burgers_step_implicit_single");
}

StateField burgers_smoothing_iteration(const StateField& base, const StateField& guess,
                                       const BurgersModel& model, const InletForcing& inlet,
                                       double t, double relaxation)
{
    return burgers_sweep(base, guess, model, inlet, t, relaxation, "burgers_smoothing_iteration");
}

std::vector<double> burgers_rhs(const StateField& state, const BurgersModel& model)
{
    const std::vector<double>& u = state.var(0);
    const int n = model.grid.n_nodes;
    const double dx = model.grid.spacing;
    const double nu = 1.0 / model.reynolds;
    std::vector<double> f(n, 0.0);
    for (int i = 1; i < n - 1; ++i)
        f[i] = nu * (u[i + 1] - 2.0 * u[i] + u[i - 1]) / (dx * dx) -
               u[i] * (u[i + 1] - u[i - 1]) / (2.0 * dx);
    return f;
}

} // namespace menkf
