#include "menkf/menkf.hpp"

#include "menkf/errors.hpp"
#include "menkf/parallel.hpp"

#include <cmath>
#include <limits>
#include <string>

namespace menkf {

double hf_energy(const StateField& field)
{
    double e = 0.0;
    for (int v = 0; v < field.n_vars(); ++v) {
        const std::vector<double>& x = field.var(v);
        for (std::size_t i = 1; i + 1 < x.size(); ++i) {
            const double d2 = x[i + 1] - 2.0 * x[i] + x[i - 1];
            e += d2 * d2;
        }
    }
    return e;
}

double regularization_metric(const StateField& before, const StateField& after)
{
    if (!after.same_layout(before))
        throw ContractError("regularization_metric: fields live on different grids");
    const double eb = hf_energy(before);
    const double ea = hf_energy(after);
    if (eb == 0.0)
        return ea == 0.0 ? 1.0 : std::numeric_limits<double>::infinity();
    return ea / eb;
}

double ram_ratio(int coarsening_ratio, int n_members, int dims)
{
    if (coarsening_ratio < 1)
        throw ContractError("ram_ratio: coarsening ratio must be >= 1");
    if (n_members < 1)
        throw ContractError("ram_ratio: member count must be >= 1");
    if (dims < 1 || dims > 3)
        throw ContractError("ram_ratio: dims must be 1, 2 or 3");
    double cells = 1.0;
    for (int d = 0; d < dims; ++d)
        cells *= coarsening_ratio;
    return 1.0 + n_members / cells;
}

namespace {

std::vector<double> to_std(const Eigen::VectorXd& v)
{
    return std::vector<double>(v.data(), v.data() + v.size());
}

} // namespace

MenkfDriver::MenkfDriver(std::shared_ptr<const FlowModel> fine_model,
                         std::shared_ptr<const FlowModel> coarse_model, const GridPair& pair,
                         const MenkfOptions& options, const SeededStream& stream)
    : fine_model_(std::move(fine_model)), coarse_model_(std::move(coarse_model)), pair_(pair),
      options_(options), stream_(stream)
{
    if (!(fine_model_->grid() == pair_.fine))
        throw ContractError("MenkfDriver: fine model grid does not match the grid pair");
    if (!(coarse_model_->grid() == pair_.coarse))
        throw ContractError("MenkfDriver: coarse model grid does not match the grid pair");
    if (fine_model_->n_params() != coarse_model_->n_params())
        throw ContractError("MenkfDriver: fine/coarse parameter count mismatch");
    if (options_.smoothing_relaxation < 0.0 || options_.smoothing_relaxation > 1.0)
        throw ContractError("MenkfDriver: smoothing relaxation must lie in [0, 1]");
    if (options_.param_inflation < 0.0)
        throw ContractError("MenkfDriver: negative parameter inflation");
    if (options_.obs_every_n_steps < 1)
        throw ContractError("MenkfDriver: observation cadence must be >= 1");
}

void MenkfDriver::initialize(const Eigen::VectorXd& param_prior_mean,
                             const Eigen::VectorXd& param_prior_variance, int n_members)
{
    const int n_theta = fine_model_->n_params();
    if (param_prior_mean.size() != n_theta || param_prior_variance.size() != n_theta)
        throw ContractError("MenkfDriver: prior dimension must equal the model parameter count");
    if (n_members < 2)
        throw ContractError("MenkfDriver: at least 2 members required");

    fine_ = fine_model_->initial_state();
    members_.assign(n_members, coarse_model_->initial_state());
    params_.resize(n_theta, n_members);
    const SeededStream init_stream = stream_.child(0);
    for (int i = 0; i < n_members; ++i) {
        SeededStream s = init_stream.child(static_cast<std::uint64_t>(i));
        for (int p = 0; p < n_theta; ++p)
            params_(p, i) = s.gaussian(param_prior_mean[p], param_prior_variance[p]);
    }
    // The fine simulation is forced by the prior mean until the first analysis.
    theta_mean_ = param_prior_mean;
    step_ = 0;
}

double MenkfDriver::time() const
{
    return static_cast<double>(step_) * fine_model_->dt();
}

Eigen::VectorXd MenkfDriver::theta_std() const
{
    Ensemble ens;
    ens.states.resize(0, params_.cols());
    ens.params = params_;
    return ens.param_std();
}

Ensemble MenkfDriver::ensemble_snapshot() const
{
    Ensemble ens;
    ens.params = params_;
    const long m = flatten(members_.front()).size();
    ens.states.resize(m, static_cast<long>(members_.size()));
    for (std::size_t i = 0; i < members_.size(); ++i)
        ens.states.col(static_cast<long>(i)) = flatten(members_[i]);
    return ens;
}

std::vector<double> MenkfDriver::theta_for_fine() const
{
    return to_std(theta_mean_);
}

std::optional<AnalysisInfo> MenkfDriver::advance(const ObservationSet* obs)
{
    if (members_.empty())
        throw ContractError("MenkfDriver: initialize() must be called before advance()");
    if (obs == nullptr) {
        forecast_step();
        return std::nullopt;
    }
    const SeededStream cycle_stream = stream_.child(static_cast<std::uint64_t>(step_ + 1));
    return analysis_step(*obs, cycle_stream);
}

void MenkfDriver::forecast_step()
{
    const double t = time();
    const std::vector<double> theta_fine = theta_for_fine();

    StateField fine_next;
    try {
        fine_next = fine_model_->step_explicit(fine_, theta_fine, t);
    } catch (const std::exception& e) {
        throw NumericsError("menkf forecast step " + std::to_string(step_ + 1) +
                            ": fine simulation failed: " + e.what());
    }

    std::vector<StateField> next(members_.size());
    parallel_for(static_cast<int>(members_.size()), options_.threads, [&](int i) {
        try {
            next[i] = coarse_model_->step_explicit(members_[i], to_std(params_.col(i)), t);
        } catch (const std::exception& e) {
            throw NumericsError("menkf forecast step " + std::to_string(step_ + 1) + ": member " +
                                std::to_string(i) + " failed: " + e.what());
        }
    });

    fine_ = std::move(fine_next);
    members_ = std::move(next);
    ++step_;
}

AnalysisInfo MenkfDriver::analysis_step(const ObservationSet& obs, const SeededStream& cycle_stream)
{
    const double t = time();
    const std::vector<double> theta_fine = theta_for_fine();
    const char* stage = "dual-enkf";
    try {
        // Dual EnKF cycle on the coarse ensemble; forecasts use the implicit
        // single-sweep scheme on analysis steps.
        const Ensemble ens = ensemble_snapshot();
        const std::vector<std::string> names = coarse_model_->variables();
        const MemberStep member_step = [&](const Eigen::VectorXd& x, const Eigen::VectorXd& th,
                                           int /*member*/) {
            const StateField s = unflatten(x, pair_.coarse, names);
            return flatten(coarse_model_->step_implicit_single(s, to_std(th), t, 1.0));
        };
        const Eigen::VectorXd inflation =
            Eigen::VectorXd::Constant(params_.rows(), options_.param_inflation);
        const DualCycleResult dual =
            dual_enkf_cycle(ens, member_step, obs, inflation, cycle_stream, options_.threads);

        AnalysisInfo info;
        StateField fine_next;
        if (options_.enable_state_correction) {
            // Implicit single-sweep fine forecast for this step.
            stage = "fine-forecast";
            const StateField fine_f = fine_model_->step_implicit_single(fine_, theta_fine, t, 1.0);

            // Projection of the fine forecast; no coarse iterations on it.
            stage = "projection";
            const StateField proj = project_to_coarse(fine_f, pair_);
            const Eigen::VectorXd xs = flatten(proj);

            // Coarse correction of the projected state, reusing the ensemble
            // state gain and the unperturbed observation vector.
            stage = "coarse-correction";
            const Eigen::VectorXd correction = dual.state_gain * (obs.values - obs.observe(xs));

            stage = "fine-update";
            const StateField corr_f =
                project_to_fine(unflatten(correction, pair_.coarse, names), pair_);
            StateField fine_prime = fine_f;
            double corr_sq = 0.0;
            for (int v = 0; v < fine_prime.n_vars(); ++v) {
                std::vector<double>& dst = fine_prime.var(v);
                const std::vector<double>& c = corr_f.var(v);
                for (std::size_t i = 0; i < dst.size(); ++i) {
                    dst[i] += c[i];
                    corr_sq += c[i] * c[i];
                }
            }
            info.correction_norm = std::sqrt(corr_sq);

            info.hf_before = hf_energy(fine_prime);
            auto increment = [&](const StateField& state) {
                StateField d = state;
                for (int v = 0; v < d.n_vars(); ++v) {
                    std::vector<double>& dv = d.var(v);
                    const std::vector<double>& fv = fine_f.var(v);
                    for (std::size_t i = 0; i < dv.size(); ++i)
                        dv[i] -= fv[i];
                }
                return d;
            };
            info.hf_increment_before = hf_energy(increment(fine_prime));
            if (options_.smoothing_relaxation > 0.0) {
                stage = "smoothing";
                fine_next = fine_model_->smoothing_iteration(fine_, fine_prime, theta_fine, t,
                                                             options_.smoothing_relaxation);
            } else {
                fine_next = std::move(fine_prime);
            }
            info.hf_after = hf_energy(fine_next);
            info.hf_increment_after = hf_energy(increment(fine_next));
            auto ratio_of = [](double before, double after) {
                if (before == 0.0)
                    return after == 0.0 ? 1.0 : std::numeric_limits<double>::infinity();
                return after / before;
            };
            info.hf_ratio = ratio_of(info.hf_before, info.hf_after);
            info.hf_increment_ratio = ratio_of(info.hf_increment_before, info.hf_increment_after);
        } else {
            // Parameter-estimation-only mode: the fine solution advances by
            // the plain explicit model and is never touched by the gain.
            stage = "fine-forecast";
            fine_next = fine_model_->step_explicit(fine_, theta_fine, t);
            info.hf_before = info.hf_after = hf_energy(fine_next);
        }

        stage = "commit";
        params_ = dual.ensemble.params;
        for (std::size_t i = 0; i < members_.size(); ++i)
            members_[i] = unflatten(dual.ensemble.states.col(static_cast<long>(i)), pair_.coarse, names);
        theta_mean_ = params_.rowwise().mean();
        fine_ = std::move(fine_next);
        ++step_;
        return info;
    } catch (const std::exception& e) {
        throw NumericsError("menkf analysis step " + std::to_string(step_ + 1) + " failed at stage '" +
                            stage + "': " + e.what());
    }
}

} // namespace menkf
