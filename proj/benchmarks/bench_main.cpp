// Microbenchmarks for the hot paths of an assimilation cycle: model steps,
// grid transfers and the ensemble analysis algebra at the production sizes
// (800-element fine grid, 100 members, 20-80 sensors).

#include "menkf/grid.hpp"
#include "menkf/kalman.hpp"
#include "menkf/models.hpp"
#include "menkf/stochastics.hpp"

#include <benchmark/benchmark.h>

#include <numbers>

using namespace menkf;

namespace {

constexpr double kOmega = 2.0 * std::numbers::pi;

InletForcing forcing()
{
    InletForcing f;
    f.kind = InletForcing::Kind::burgers_phase_amplitude;
    f.u_ref = 1.0;
    f.omega = kOmega;
    f.theta = {0.2, 0.0};
    return f;
}

StateField wave_state(const Grid1D& grid)
{
    StateField s(grid, {"u"});
    for (int i = 0; i < grid.n_nodes; ++i)
        s.var(0)[i] = 1.0 + 0.2 * std::sin(kOmega * grid.node(i));
    return s;
}

} // namespace

static void BM_BurgersExplicitStep(benchmark::State& state)
{
    const Grid1D grid = Grid1D::from_elements(static_cast<int>(state.range(0)), 10.0);
    const BurgersModel model(grid, 200.0, 2e-4, 1.0, kOmega);
    const InletForcing f = forcing();
    StateField u = wave_state(grid);
    double t = 0.0;
    for (auto _ : state) {
        u = burgers_step_explicit(u, model, f, t);
        t += model.dt;
    }
    state.SetItemsProcessed(state.iterations() * grid.n_nodes);
}
BENCHMARK(BM_BurgersExplicitStep)->Arg(200)->Arg(800);

static void BM_BurgersImplicitSweep(benchmark::State& state)
{
    const Grid1D grid = Grid1D::from_elements(800, 10.0);
    const BurgersModel model(grid, 200.0, 2e-4, 1.0, kOmega);
    const InletForcing f = forcing();
    const StateField u = wave_state(grid);
    for (auto _ : state)
        benchmark::DoNotOptimize(burgers_step_implicit_single(u, model, f, 0.0, 1.0));
}
BENCHMARK(BM_BurgersImplicitSweep);

static void BM_EulerExplicitStep(benchmark::State& state)
{
    const Grid1D grid = Grid1D::from_elements(800, 10.0);
    const EulerModel model(grid, 6e-4, 1.4, 1.17, 300.0, 0.4, 1.0);
    InletForcing f;
    f.kind = InletForcing::Kind::euler_modulated_amplitude;
    f.u_ref = model.u0;
    f.omega = kOmega;
    f.theta = {0.01};
    StateField s(grid, {"rho", "rho_u", "rho_E"});
    std::fill(s.var(0).begin(), s.var(0).end(), model.rho0);
    std::fill(s.var(1).begin(), s.var(1).end(), model.rho0 * model.u0);
    std::fill(s.var(2).begin(), s.var(2).end(), model.rho0 * model.E0);
    double t = 0.0;
    for (auto _ : state) {
        s = euler_step_explicit(s, model, f, t);
        t += model.dt;
    }
}
BENCHMARK(BM_EulerExplicitStep);

static void BM_ProjectToFine(benchmark::State& state)
{
    const GridPair pair = coarsen(Grid1D::from_elements(800, 10.0), 4);
    SeededStream rng(1, {0});
    std::vector<double> coarse(pair.coarse.n_nodes);
    for (double& v : coarse)
        v = rng.standard_normal();
    for (auto _ : state)
        benchmark::DoNotOptimize(project_to_fine(coarse, pair));
}
BENCHMARK(BM_ProjectToFine);

static void BM_EnkfGain(benchmark::State& state)
{
    const int m = static_cast<int>(state.range(0));
    const int ny = static_cast<int>(state.range(1));
    const int ne = 100;
    SeededStream rng(3, {1});
    Ensemble ens;
    ens.states.resize(m, ne);
    ens.params.resize(2, ne);
    for (int j = 0; j < ne; ++j) {
        for (int i = 0; i < m; ++i)
            ens.states(i, j) = rng.standard_normal();
        for (int i = 0; i < 2; ++i)
            ens.params(i, j) = rng.standard_normal();
    }
    std::vector<int> sensors(ny);
    for (int s = 0; s < ny; ++s)
        sensors[s] = s + 1;
    const ObservationSet obs(sensors, Eigen::VectorXd::Zero(ny), 0.0025, 30, m);
    Eigen::MatrixXd draws(ny, ne);
    for (int j = 0; j < ne; ++j)
        for (int i = 0; i < ny; ++i)
            draws(i, j) = rng.standard_normal();
    const AnomalySet anoms = build_anomalies(ens, obs, obs.observe_members(ens.states), draws);
    for (auto _ : state)
        benchmark::DoNotOptimize(enkf_gain(anoms));
}
BENCHMARK(BM_EnkfGain)->Args({201, 20})->Args({801, 80});

BENCHMARK_MAIN();
