#include "menkf/models.hpp"

#include <algorithm>

namespace menkf {

namespace {

class BurgersFlow final : public FlowModel {
public:
    BurgersFlow(const BurgersModel& model, const InletForcing& forcing)
        : model_(model), forcing_(forcing)
    {
    }

    const Grid1D& grid() const override { return model_.grid; }
    double dt() const override { return model_.dt; }
    std::vector<std::string> variables() const override { return {"u"}; }
    int n_params() const override { return 2; }
    int momentum_var() const override { return 0; }

    StateField initial_state() const override
    {
        StateField s(model_.grid, variables());
        std::fill(s.var(0).begin(), s.var(0).end(), model_.u0);
        return s;
    }

    StateField step_explicit(const StateField& state, const std::vector<double>& theta,
                             double t) const override
    {
        return burgers_step_explicit(state, model_, materialize(theta), t);
    }

    StateField step_implicit_single(const StateField& state, const std::vector<double>& theta,
                                    double t, double relaxation) const override
    {
        return burgers_step_implicit_single(state, model_, materialize(theta), t, relaxation);
    }

    StateField smoothing_iteration(const StateField& base, const StateField& guess,
                                   const std::vector<double>& theta, double t,
                                   double relaxation) const override
    {
        return burgers_smoothing_iteration(base, guess, model_, materialize(theta), t, relaxation);
    }

    std::vector<double> momentum_rhs(const StateField& state) const override
    {
        return burgers_rhs(state, model_);
    }

private:
    InletForcing materialize(const std::vector<double>& theta) const
    {
        if (forcing_.truth_modulation || theta.empty())
            return forcing_;
        return forcing_.with_theta(theta);
    }

    BurgersModel model_;
    InletForcing forcing_;
};

class EulerFlow final : public FlowModel {
public:
    EulerFlow(const EulerModel& model, const InletForcing& forcing)
        : model_(model), forcing_(forcing)
    {
    }

    const Grid1D& grid() const override { return model_.grid; }
    double dt() const override { return model_.dt; }
    std::vector<std::string> variables() const override { return {"rho", "rho_u", "rho_E"}; }
    int n_params() const override { return 1; }
    int momentum_var() const override { return 1; }

    StateField initial_state() const override
    {
        StateField s(model_.grid, variables());
        std::fill(s.var(0).begin(), s.var(0).end(), model_.rho0);
        std::fill(s.var(1).begin(), s.var(1).end(), model_.rho0 * model_.u0);
        std::fill(s.var(2).begin(), s.var(2).end(), model_.rho0 * model_.E0);
        return s;
    }

    StateField step_explicit(const StateField& state, const std::vector<double>& theta,
                             double t) const override
    {
        return euler_step_explicit(state, model_, materialize(theta), t);
    }

    StateField step_implicit_single(const StateField& state, const std::vector<double>& theta,
                                    double t, double relaxation) const override
    {
        return euler_step_implicit_single(state, model_, materialize(theta), t, relaxation);
    }

    StateField smoothing_iteration(const StateField& base, const StateField& guess,
                                   const std::vector<double>& theta, double t,
                                   double relaxation) const override
    {
        return euler_smoothing_iteration(base, guess, model_, materialize(theta), t, relaxation);
    }

    std::vector<double> momentum_rhs(const StateField& state) const override
    {
        // Converted to per-characteristic-time units to match dt().
        std::vector<double> f = euler_momentum_rhs(state, model_);
        for (double& v : f)
            v *= model_.t_char;
        return f;
    }

private:
    InletForcing materialize(const std::vector<double>& theta) const
    {
        if (forcing_.truth_modulation || theta.empty())
            return forcing_;
        return forcing_.with_theta(theta);
    }

    EulerModel model_;
    InletForcing forcing_;
};

} // namespace

std::unique_ptr<FlowModel> make_burgers_flow(const BurgersModel& model, const InletForcing& forcing)
{
    return std::make_unique<BurgersFlow>(model, forcing);
}

std::unique_ptr<FlowModel> make_euler_flow(const EulerModel& model, const InletForcing& forcing)
{
    return std::make_unique<EulerFlow>(model, forcing);
}

} // namespace menkf
