#include "menkf/kalman.hpp"

#include "menkf/errors.hpp"
#include "menkf/parallel.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <string>

namespace menkf {

void DenseGaussianState::validate() const
{
    if (cov.rows() != cov.cols() || cov.rows() != mean.size())
        throw ContractError("DenseGaussianState: inconsistent dimensions");
    const double scale = cov.norm();
    if (scale > 0.0 && (cov - cov.transpose()).norm() > 1e-10 * scale)
        throw ContractError("DenseGaussianState: covariance is not symmetric");
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cov, Eigen::EigenvaluesOnly);
    const double floor = -1e-10 * std::max(cov.trace(), 0.0) - 1e-300;
    if (es.eigenvalues().minCoeff() < floor)
        throw ContractError("DenseGaussianState: covariance has a significantly negative eigenvalue");
}

ObservationSet::ObservationSet(std::vector<int> sensors, Eigen::VectorXd vals, double R,
                               int every, int state_dim)
    : sensor_indices(std::move(sensors)), values(std::move(vals)), noise_variance(R),
      every_n_steps(every)
{
    if (sensor_indices.empty())
        throw ContractError("ObservationSet: empty sensor list");
    if (static_cast<int>(sensor_indices.size()) != values.size())
        throw ContractError("ObservationSet: sensor/value size mismatch");
    if (noise_variance < 0.0)
        throw ContractError("ObservationSet: negative noise variance");
    if (every_n_steps <= 0)
        throw ContractError("ObservationSet: schedule must be positive");
    for (std::size_t i = 0; i < sensor_indices.size(); ++i) {
        if (sensor_indices[i] < 0 || sensor_indices[i] >= state_dim)
            throw ContractError("ObservationSet: sensor index " + std::to_string(sensor_indices[i]) +
                                " outside state dimension " + std::to_string(state_dim));
        if (i > 0 && sensor_indices[i] <= sensor_indices[i - 1])
            throw ContractError("ObservationSet: sensor indices must be strictly increasing");
    }
}

Eigen::VectorXd ObservationSet::observe(const Eigen::VectorXd& state) const
{
    Eigen::VectorXd y(n_sensors());
    for (int s = 0; s < n_sensors(); ++s)
        y[s] = state[sensor_indices[s]];
    return y;
}

Eigen::MatrixXd ObservationSet::observe_members(const Eigen::MatrixXd& members) const
{
    Eigen::MatrixXd y(n_sensors(), members.cols());
    for (int s = 0; s < n_sensors(); ++s)
        y.row(s) = members.row(sensor_indices[s]);
    return y;
}

Eigen::MatrixXd ObservationSet::selection_matrix(int state_dim) const
{
    Eigen::MatrixXd h = Eigen::MatrixXd::Zero(n_sensors(), state_dim);
    for (int s = 0; s < n_sensors(); ++s)
        h(s, sensor_indices[s]) = 1.0;
    return h;
}

namespace {

/// Solve S Z = B for symmetric S, with one jittered retry before failing.
Eigen::MatrixXd solve_spd(Eigen::MatrixXd s, const Eigen::MatrixXd& b, const char* where)
{
    const std::string fail_msg =
        std::string(where) + ": innovation matrix is singular; consider a larger observation "
                             "noise variance or more ensemble members";
    const double scale = s.trace();
    if (!(scale > 0.0))
        throw NumericsError(fail_msg);
    for (int attempt = 0; attempt < 2; ++attempt) {
        Eigen::LDLT<Eigen::MatrixXd> ldlt(s);
        if (ldlt.info() == Eigen::Success && ldlt.rcond() > 1e-14) {
            Eigen::MatrixXd z = ldlt.solve(b);
            if ((s * z - b).norm() <= 1e-8 * std::max(b.norm(), 1e-300) + 1e-300)
                return z;
        }
        s.diagonal().array() += 1e-12 * scale;
    }
    throw NumericsError(fail_msg);
}

} // namespace

DenseGaussianState kf_step(const DenseGaussianState& state, const Eigen::MatrixXd& transition,
                           const Eigen::MatrixXd& process_noise, const ObservationSet* obs)
{
    if (transition.rows() != state.mean.size() || transition.cols() != state.mean.size())
        throw ContractError("kf_step: transition dimension mismatch");
    if (process_noise.rows() != state.mean.size() || process_noise.cols() != state.mean.size())
        throw ContractError("kf_step: process-noise dimension mismatch");

    DenseGaussianState out;
    out.mean = transition * state.mean;
    out.cov = transition * state.cov * transition.transpose() + process_noise;
    out.cov = 0.5 * (out.cov + out.cov.transpose()).eval();

    if (obs == nullptr)
        return out;

    const int m = static_cast<int>(out.mean.size());
    const Eigen::MatrixXd h = obs->selection_matrix(m);
    const Eigen::MatrixXd pht = out.cov * h.transpose();
    Eigen::MatrixXd innov = h * pht;
    innov.diagonal().array() += obs->noise_variance;

    // K = P H^T S^{-1}
    const Eigen::MatrixXd gain = solve_spd(innov, pht.transpose(), "kf_step").transpose();
    out.mean += gain * (obs->values - h * out.mean);
    out.cov = ((Eigen::MatrixXd::Identity(m, m) - gain * h) * out.cov).eval();
    out.cov = 0.5 * (out.cov + out.cov.transpose()).eval();
    return out;
}

Eigen::VectorXd Ensemble::param_std() const
{
    const int ne = size();
    if (ne < 2)
        throw ContractError("Ensemble: need at least 2 members");
    const Eigen::VectorXd mean = param_mean();
    Eigen::VectorXd var = Eigen::VectorXd::Zero(params.rows());
    for (int i = 0; i < ne; ++i) {
        const Eigen::VectorXd d = params.col(i) - mean;
        var += d.cwiseProduct(d);
    }
    return (var / (ne - 1)).cwiseSqrt();
}

Eigen::MatrixXd Ensemble::state_covariance() const
{
    const int ne = size();
    if (ne < 2)
        throw ContractError("Ensemble: need at least 2 members");
    const Eigen::VectorXd mean = state_mean();
    const Eigen::MatrixXd centered = states.colwise() - mean;
    return centered * centered.transpose() / (ne - 1);
}

namespace {

Eigen::MatrixXd normalized_anomalies(const Eigen::MatrixXd& members)
{
    const int ne = static_cast<int>(members.cols());
    const Eigen::VectorXd mean = members.rowwise().mean();
    return (members.colwise() - mean) / std::sqrt(static_cast<double>(ne - 1));
}

} // namespace

AnomalySet build_anomalies(const Ensemble& ens, const ObservationSet& obs,
                           const Eigen::MatrixXd& predicted_obs,
                           const Eigen::MatrixXd& obs_noise_draws)
{
    const int ne = ens.size();
    if (ne < 2)
        throw ContractError("build_anomalies: need at least 2 members");
    if (predicted_obs.cols() != ne || obs_noise_draws.cols() != ne)
        throw ContractError("build_anomalies: column count mismatch with ensemble size");
    if (predicted_obs.rows() != obs.n_sensors() || obs_noise_draws.rows() != obs.n_sensors())
        throw ContractError("build_anomalies: sensor count mismatch");

    AnomalySet a;
    a.X = normalized_anomalies(ens.states);
    a.Y = normalized_anomalies(predicted_obs);
    a.Theta = normalized_anomalies(ens.params);
    a.Eo = normalized_anomalies(obs_noise_draws);
    return a;
}

PerturbedObservations perturb_observations(const ObservationSet& obs, int n_members,
                                           const SeededStream& stream)
{
    const int ny = obs.n_sensors();
    PerturbedObservations out;
    out.values.resize(ny, n_members);
    out.draws.resize(ny, n_members);
    for (int i = 0; i < n_members; ++i) {
        SeededStream member_stream = stream.child(static_cast<std::uint64_t>(i));
        for (int s = 0; s < ny; ++s) {
            const double eps = member_stream.gaussian(0.0, obs.noise_variance);
            out.draws(s, i) = eps;
            out.values(s, i) = obs.values[s] + eps;
        }
    }
    return out;
}

namespace {

Eigen::MatrixXd anomaly_gain(const Eigen::MatrixXd& A, const AnomalySet& anoms, const char* where)
{
    const Eigen::MatrixXd innov = anoms.Y * anoms.Y.transpose() + anoms.Eo * anoms.Eo.transpose();
    // K = A Y^T S^{-1}  =>  K^T = S^{-1} (Y A^T)
    return solve_spd(innov, anoms.Y * A.transpose(), where).transpose();
}

} // namespace

Eigen::MatrixXd enkf_gain(const AnomalySet& anoms)
{
    return anomaly_gain(anoms.X, anoms, "enkf_gain");
}

Eigen::MatrixXd parameter_gain(const AnomalySet& anoms)
{
    return anomaly_gain(anoms.Theta, anoms, "parameter_gain");
}

Ensemble enkf_analysis(const Ensemble& ens, const ObservationSet& obs,
                       const Eigen::MatrixXd& predicted_obs, const SeededStream& stream)
{
    const PerturbedObservations po =
        perturb_observations(obs, ens.size(), stream.child(kLabelObsPerturbation));
    const AnomalySet anoms = build_anomalies(ens, obs, predicted_obs, po.draws);
    const Eigen::MatrixXd gain = enkf_gain(anoms);

    Ensemble out = ens;
    out.states += gain * (po.values - predicted_obs);
    return out;
}

DualCycleResult dual_enkf_cycle(const Ensemble& ens, const MemberStep& model_step,
                                const ObservationSet& obs, const Eigen::VectorXd& param_inflation,
                                const SeededStream& stream, int threads)
{
    const int ne = ens.size();
    if (ne < 2)
        throw ContractError("dual_enkf_cycle: need at least 2 members");
    if (param_inflation.size() != ens.params.rows())
        throw ContractError("dual_enkf_cycle: inflation dimension mismatch");
    if ((param_inflation.array() < 0.0).any())
        throw ContractError("dual_enkf_cycle: negative parameter inflation");

    const int n_theta = static_cast<int>(ens.params.rows());
    const SeededStream tau_stream = stream.child(kLabelParamInflation);

    // Parameter forecast: theta^f = theta^a_{k-1} + tau, tau ~ N(0, Sigma_theta).
    Eigen::MatrixXd theta_f = ens.params;
    for (int i = 0; i < ne; ++i) {
        SeededStream s = tau_stream.child(static_cast<std::uint64_t>(i));
        for (int p = 0; p < n_theta; ++p)
            theta_f(p, i) += s.gaussian(0.0, param_inflation[p]);
    }

    const PerturbedObservations po =
        perturb_observations(obs, ne, stream.child(kLabelObsPerturbation));

    auto forecast = [&](const Eigen::MatrixXd& thetas) {
        Eigen::MatrixXd states(ens.states.rows(), ne);
        parallel_for(ne, threads, [&](int i) {
            try {
                states.col(i) = model_step(ens.states.col(i), thetas.col(i), i);
            } catch (const std::exception& e) {
                throw NumericsError("dual_enkf_cycle: member " + std::to_string(i) +
                                    " forecast failed: " + e.what());
            }
        });
        return states;
    };

    // First forecast, with the inflated prior parameters.
    const Eigen::MatrixXd states_f1 = forecast(theta_f);
    Eigen::MatrixXd y_f = obs.observe_members(states_f1);

    Ensemble work{states_f1, theta_f};
    AnomalySet anoms = build_anomalies(work, obs, y_f, po.draws);
    const Eigen::MatrixXd k_theta = parameter_gain(anoms);
    const Eigen::MatrixXd theta_a = theta_f + k_theta * (po.values - y_f);

    // Second forecast from the k-1 analysis states, now with updated parameters.
    const Eigen::MatrixXd states_f2 = forecast(theta_a);
    y_f = obs.observe_members(states_f2);

    work.states = states_f2;
    work.params = theta_a;
    anoms = build_anomalies(work, obs, y_f, po.draws);

    DualCycleResult result;
    result.state_gain = enkf_gain(anoms);
    result.ensemble.params = theta_a;
    result.ensemble.states = states_f2 + result.state_gain * (po.values - y_f);
    return result;
}

Eigen::VectorXd flatten(const StateField& field)
{
    const int n = field.grid().n_nodes;
    Eigen::VectorXd v(static_cast<long>(n) * field.n_vars());
    for (int k = 0; k < field.n_vars(); ++k)
        for (int i = 0; i < n; ++i)
            v[static_cast<long>(k) * n + i] = field.var(k)[i];
    return v;
}

StateField unflatten(const Eigen::VectorXd& vec, const Grid1D& grid,
                     const std::vector<std::string>& names)
{
    const int n = grid.n_nodes;
    if (vec.size() != static_cast<long>(n) * static_cast<long>(names.size()))
        throw ContractError("unflatten: vector length does not match grid/variable layout");
    StateField field(grid, names);
    for (std::size_t k = 0; k < names.size(); ++k)
        for (int i = 0; i < n; ++i)
            field.var(static_cast<int>(k))[i] = vec[static_cast<long>(k) * n + i];
    return field;
}

} // namespace menkf
