#include "menkf/experiment.hpp"

#include "menkf/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace menkf {

namespace {

// Stream lineage roots under the master seed.
constexpr std::uint64_t kLineageAssimilation = 1;
constexpr std::uint64_t kLineageObservationNoise = 2;

constexpr double kOmega = 2.0 * std::numbers::pi; // f_c = 1 in characteristic units

long steps_of(double time, double dt)
{
    return std::llround(time / dt);
}

} // namespace

const StateField& TruthRecord::at_step(long k) const
{
    const auto it = std::lower_bound(steps.begin(), steps.end(), k);
    if (it == steps.end() || *it != k)
        throw ContractError("TruthRecord: no state recorded for step " + std::to_string(k));
    return states[static_cast<std::size_t>(it - steps.begin())];
}

void DiagnosticsSeries::validate() const
{
    const std::size_t n = times.size();
    for (const auto& series : theta_mean)
        if (series.size() != n)
            throw ContractError("DiagnosticsSeries: theta_mean length mismatch");
    for (const auto& series : theta_ci)
        if (series.size() != n)
            throw ContractError("DiagnosticsSeries: theta_ci length mismatch");
    if (rmse.size() != n || gamma_max.size() != n || hf_ratio.size() != n)
        throw ContractError("DiagnosticsSeries: series length mismatch");
    for (std::size_t i = 1; i < n; ++i)
        if (!(times[i] > times[i - 1]))
            throw ContractError("DiagnosticsSeries: times must be strictly increasing");
}

std::unique_ptr<FlowModel> make_flow_model(const AssimilationConfig& cfg, const Grid1D& grid,
                                           bool truth_mode)
{
    if (cfg.model == "burgers") {
        const BurgersModel model(grid, cfg.reynolds, cfg.dt, cfg.u0, kOmega);
        InletForcing forcing;
        forcing.kind = InletForcing::Kind::burgers_phase_amplitude;
        forcing.u_ref = cfg.u0;
        forcing.omega = kOmega;
        forcing.theta = truth_mode ? cfg.truth_theta : std::vector<double>{0.0, 0.0};
        return make_burgers_flow(model, forcing);
    }
    const EulerModel model(grid, cfg.dt, cfg.gamma, cfg.rho0, cfg.T0, cfg.mach, cfg.filter_strength);
    InletForcing forcing;
    forcing.kind = InletForcing::Kind::euler_modulated_amplitude;
    forcing.u_ref = model.u0;
    forcing.omega = kOmega;
    if (truth_mode) {
        forcing.truth_modulation = true;
        forcing.theta0 = cfg.truth_theta[0];
        forcing.omega_theta = kOmega / cfg.truth_theta[1];
    } else {
        forcing.theta = {0.0};
    }
    return make_euler_flow(model, forcing);
}

std::vector<int> sensor_coarse_nodes(const GridPair& pair, double lo, double hi)
{
    std::vector<int> nodes;
    const double tol = 1e-9 * std::max(pair.fine.length(), 1.0);
    for (int j = 1; j < pair.coarse.n_nodes; ++j) {
        const double x = pair.coarse.node(j);
        if (x > lo + tol && x <= hi + tol)
            nodes.push_back(j);
    }
    return nodes;
}

TruthRecord generate_truth(const AssimilationConfig& cfg)
{
    const Grid1D fine = Grid1D::from_elements(cfg.n_elements, cfg.domain_length);
    const std::unique_ptr<FlowModel> model = make_flow_model(cfg, fine, /*truth_mode=*/true);

    const long spinup_steps = steps_of(cfg.spinup_time, cfg.dt);
    const long window_steps = steps_of(cfg.da_window, cfg.dt);
    const long every = cfg.obs_every_n_steps;

    TruthRecord record;
    StateField state = model->initial_state();
    const std::vector<double> no_theta; // truth forcing carries its own parameters
    for (long step = 1; step <= spinup_steps + window_steps; ++step) {
        const double t = (step - 1) * cfg.dt;
        try {
            state = model->step_explicit(state, no_theta, t);
        } catch (const std::exception& e) {
            throw NumericsError("generate_truth: reference run failed at step " + std::to_string(step) +
                                ": " + e.what());
        }
        const long k = step - spinup_steps; // assimilation frame
        if (k >= every && k % every == 0) {
            record.steps.push_back(k);
            record.states.push_back(state);
        }
    }
    return record;
}

ObservationSet sample_observation_cycle(const StateField& truth_state, const std::vector<int>& sensors,
                                        int observed_var, const GridPair& pair, double noise_variance,
                                        int every_n_steps, const SeededStream& noise_stream)
{
    if (sensors.empty())
        throw ContractError("sample_observation_cycle: empty sensor set");
    const int n_coarse = pair.coarse.n_nodes;
    const std::vector<double>& truth_values = truth_state.var(observed_var);

    std::vector<int> stacked(sensors.size());
    Eigen::VectorXd values(static_cast<long>(sensors.size()));
    SeededStream stream = noise_stream;
    for (std::size_t s = 0; s < sensors.size(); ++s) {
        stacked[s] = observed_var * n_coarse + sensors[s];
        const double exact = truth_values[static_cast<std::size_t>(sensors[s]) * pair.ratio];
        values[static_cast<long>(s)] = exact + stream.gaussian(0.0, noise_variance);
    }
    const int state_dim = n_coarse * truth_state.n_vars();
    return ObservationSet(std::move(stacked), std::move(values), noise_variance, every_n_steps,
                          state_dim);
}

double rmse(const StateField& estimate, const StateField& truth, std::string_view variable)
{
    if (!estimate.same_layout(truth))
        throw ContractError("rmse: estimate and truth live on different grids");
    const std::vector<double>& e = estimate.var(variable);
    const std::vector<double>& g = truth.var(variable);
    const std::size_t n = g.size();

    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double d = e[i] - g[i];
        const double w = (i == 0 || i + 1 == n) ? 0.5 : 1.0; // trapezoidal weights
        num += w * d * d;
        den += w * g[i] * g[i];
    }
    if (den == 0.0)
        throw ContractError("rmse: truth has zero norm");
    return std::sqrt(num / den);
}

ConservativityResidual conservativity_residual(const StateField& prev, const StateField& curr,
                                               const FlowModel& model, double dt, StepScheme scheme)
{
    if (!prev.same_layout(curr))
        throw ContractError("conservativity_residual: states live on different grids");
    const int var = model.momentum_var();
    const std::vector<double> f =
        model.momentum_rhs(scheme == StepScheme::explicit_update ? prev : curr);
    const std::vector<double>& p = prev.var(var);
    const std::vector<double>& c = curr.var(var);
    const int n = static_cast<int>(p.size());

    ConservativityResidual out;
    out.gamma.assign(n, 0.0);
    out.gamma_star.assign(n, 0.0);
    double rate_max = 0.0;
    for (int i = 1; i < n - 1; ++i) {
        const double rate = (c[i] - p[i]) / dt;
        out.gamma[i] = rate - f[i];
        rate_max = std::max(rate_max, std::abs(rate));
    }
    if (rate_max > 0.0) {
        for (int i = 1; i < n - 1; ++i) {
            out.gamma_star[i] = out.gamma[i] / rate_max;
            out.max_abs_star = std::max(out.max_abs_star, std::abs(out.gamma_star[i]));
        }
    }
    return out;
}

ExperimentResult run_twin_experiment(const AssimilationConfig& cfg)
{
    validate_config(cfg);

    const Grid1D fine = Grid1D::from_elements(cfg.n_elements, cfg.domain_length);
    const GridPair pair = coarsen(fine, cfg.coarsening_ratio);

    std::shared_ptr<const FlowModel> fine_model = make_flow_model(cfg, pair.fine, false);
    std::shared_ptr<const FlowModel> coarse_model = make_flow_model(cfg, pair.coarse, false);
    const int observed_var = fine_model->momentum_var();
    const std::string observed_name = fine_model->variables()[static_cast<std::size_t>(observed_var)];

    const TruthRecord truth = generate_truth(cfg);
    const std::vector<int> sensors = sensor_coarse_nodes(pair, cfg.obs_window_lo, cfg.obs_window_hi);
    if (sensors.empty())
        throw ConfigError("run_twin_experiment: observation window contains no sensors");

    MenkfOptions opts;
    opts.obs_every_n_steps = cfg.obs_every_n_steps;
    opts.smoothing_relaxation = cfg.smoothing_relaxation;
    opts.enable_state_correction = cfg.enable_state_correction;
    opts.param_inflation = cfg.param_inflation;
    opts.threads = cfg.threads;

    const SeededStream root(cfg.seed, {});
    MenkfDriver driver(fine_model, coarse_model, pair, opts, root.child(kLineageAssimilation));
    const int np = cfg.n_params();
    driver.initialize(Eigen::Map<const Eigen::VectorXd>(cfg.param_prior_mean.data(), np),
                      Eigen::Map<const Eigen::VectorXd>(cfg.param_prior_variance.data(), np),
                      cfg.n_ensemble);
    const SeededStream obs_noise_root = root.child(kLineageObservationNoise);

    std::vector<double> snapshot_times = cfg.snapshot_times;
    std::sort(snapshot_times.begin(), snapshot_times.end());
    std::size_t next_snapshot = 0;

    ExperimentResult result;
    result.series.theta_mean.assign(static_cast<std::size_t>(np), {});
    result.series.theta_ci.assign(static_cast<std::size_t>(np), {});

    const long n_steps = steps_of(cfg.da_window, cfg.dt);
    const long every = cfg.obs_every_n_steps;
    for (long k = 1; k <= n_steps; ++k) {
        const bool has_obs = (k % every == 0);
        std::optional<AnalysisInfo> info;
        if (has_obs) {
            const ObservationSet obs = sample_observation_cycle(
                truth.at_step(k), sensors, observed_var, pair, cfg.obs_noise_variance,
                cfg.obs_every_n_steps, obs_noise_root.child(static_cast<std::uint64_t>(k)));
            const StateField fine_prev = driver.fine_state();
            try {
                info = driver.advance(&obs);
            } catch (const std::exception& e) {
                throw NumericsError("run_twin_experiment: cycle " + std::to_string(k / every) + " (step " +
                                    std::to_string(k) + "): " + e.what());
            }

            const double t = k * cfg.dt;
            const StepScheme scheme =
                cfg.enable_state_correction ? StepScheme::implicit_solve : StepScheme::explicit_update;
            const ConservativityResidual cons =
                conservativity_residual(fine_prev, driver.fine_state(), *fine_model, cfg.dt, scheme);

            result.series.times.push_back(t);
            const Eigen::VectorXd tm = driver.theta_mean();
            const Eigen::VectorXd ts = driver.theta_std();
            for (int p = 0; p < np; ++p) {
                result.series.theta_mean[static_cast<std::size_t>(p)].push_back(tm[p]);
                result.series.theta_ci[static_cast<std::size_t>(p)].push_back(1.96 * ts[p]);
            }
            result.series.rmse.push_back(rmse(driver.fine_state(), truth.at_step(k), observed_name));
            result.series.gamma_max.push_back(cons.max_abs_star);
            result.series.hf_ratio.push_back(info ? info->hf_ratio : 1.0);
        } else {
            try {
                driver.advance(nullptr);
            } catch (const std::exception& e) {
                throw NumericsError("run_twin_experiment: step " + std::to_string(k) + ": " + e.what());
            }
        }

        while (next_snapshot < snapshot_times.size() && k * cfg.dt >= snapshot_times[next_snapshot]) {
            result.snapshots.push_back(
                Snapshot{snapshot_times[next_snapshot], k * cfg.dt, driver.fine_state()});
            ++next_snapshot;
        }
    }

    result.series.validate();
    result.final_fine = driver.fine_state();
    result.final_theta_mean = driver.theta_mean();
    result.final_theta_std = driver.theta_std();
    return result;
}

} // namespace menkf
