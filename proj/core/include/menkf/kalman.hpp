#pragma once

#include "menkf/grid.hpp"
#include "menkf/stochastics.hpp"

#include <Eigen/Dense>

#include <functional>
#include <vector>

namespace menkf {

/// Gaussian state for the classical Kalman filter recursion (small dense
/// systems; serves as the oracle the ensemble filters are checked against).
struct DenseGaussianState {
    Eigen::VectorXd mean;
    Eigen::MatrixXd cov;

    /// Symmetry within 1e-10 relative, eigenvalues >= -1e-10 * trace.
    void validate() const;
};

/// Sensor set with a linear node-selection observation operator, scalar
/// (diagonal) noise variance and a fixed sampling cadence.
struct ObservationSet {
    std::vector<int> sensor_indices; // strictly increasing indices into the state vector
    Eigen::VectorXd values;          // observed values y^o
    double noise_variance = 0.0;     // R
    int every_n_steps = 1;

    ObservationSet() = default;
    ObservationSet(std::vector<int> sensors, Eigen::VectorXd values, double noise_variance,
                   int every_n_steps, int state_dim);

    int n_sensors() const { return static_cast<int>(sensor_indices.size()); }
    Eigen::VectorXd observe(const Eigen::VectorXd& state) const;
    Eigen::MatrixXd observe_members(const Eigen::MatrixXd& members) const;
    Eigen::MatrixXd selection_matrix(int state_dim) const; // dense H, for oracles
};

/// One forecast(+analysis) step of the classical Kalman filter.
DenseGaussianState kf_step(const DenseGaussianState& state, const Eigen::MatrixXd& transition,
                           const Eigen::MatrixXd& process_noise, const ObservationSet* obs);

/// Monte-Carlo ensemble: one state column and one parameter column per member.
struct Ensemble {
    Eigen::MatrixXd states; // m x N_e
    Eigen::MatrixXd params; // N_theta x N_e

    int size() const { return static_cast<int>(states.cols()); }
    Eigen::VectorXd state_mean() const { return states.rowwise().mean(); }
    Eigen::VectorXd param_mean() const { return params.rowwise().mean(); }
    Eigen::VectorXd param_std() const;
    Eigen::MatrixXd state_covariance() const; // unbiased sample covariance
};

/// Normalized anomaly matrices (mean removed, scaled by 1/sqrt(N_e - 1)), so
/// X X^T is the unbiased sample covariance.
struct AnomalySet {
    Eigen::MatrixXd X;     // state anomalies, m x N_e
    Eigen::MatrixXd Y;     // observation-space anomalies, N_y x N_e
    Eigen::MatrixXd Theta; // parameter anomalies, N_theta x N_e
    Eigen::MatrixXd Eo;    // observation-noise anomalies, N_y x N_e
};

AnomalySet build_anomalies(const Ensemble& ens, const ObservationSet& obs,
                           const Eigen::MatrixXd& predicted_obs,
                           const Eigen::MatrixXd& obs_noise_draws);

struct PerturbedObservations {
    Eigen::MatrixXd values; // y^o + eps, N_y x N_e
    Eigen::MatrixXd draws;  // eps, N_y x N_e
};

/// Member i draws its noise from stream.child(i), so the perturbation of a
/// given member does not depend on the ensemble size or evaluation order.
PerturbedObservations perturb_observations(const ObservationSet& obs, int n_members,
                                           const SeededStream& stream);

/// Ensemble Kalman gain K = X Y^T (Y Y^T + Eo Eo^T)^{-1} (secant form: Y is
/// built by observing the members, no tangent linear operator required).
Eigen::MatrixXd enkf_gain(const AnomalySet& anoms);

/// Parameter gain K_theta = Theta Y^T (Y Y^T + Eo Eo^T)^{-1}.
Eigen::MatrixXd parameter_gain(const AnomalySet& anoms);

/// Stochastic EnKF analysis: every member assimilates its own perturbed copy
/// of the observation. Parameters are left untouched.
Ensemble enkf_analysis(const Ensemble& ens, const ObservationSet& obs,
                       const Eigen::MatrixXd& predicted_obs, const SeededStream& stream);

/// Forward-model callback advancing one member state over the cycle.
using MemberStep = std::function<Eigen::VectorXd(const Eigen::VectorXd& state,
                                                 const Eigen::VectorXd& params, int member)>;

struct DualCycleResult {
    Ensemble ensemble;
    Eigen::MatrixXd state_gain; // (K)^{x,e}, reused by the multigrid fine-state correction
};

/// One dual state-parameter estimation cycle: perturb observations, inflate
/// and forecast the parameters, update them, re-forecast the members from the
/// previous analysis states with the updated parameters, then update the
/// states. The double forecast is intrinsic to the dual form.
DualCycleResult dual_enkf_cycle(const Ensemble& ens, const MemberStep& model_step,
                                const ObservationSet& obs, const Eigen::VectorXd& param_inflation,
                                const SeededStream& stream, int threads = 1);

// Lineage labels under a per-cycle stream; shared between dual_enkf_cycle and
// the assimilation driver so the two paths draw identical noise.
inline constexpr std::uint64_t kLabelParamInflation = 1;
inline constexpr std::uint64_t kLabelObsPerturbation = 2;

/// Stack a field's variables into one column vector (and back).
Eigen::VectorXd flatten(const StateField& field);
StateField unflatten(const Eigen::VectorXd& vec, const Grid1D& grid,
                     const std::vector<std::string>& names);

} // namespace menkf
