#include "menkf/errors.hpp"
#include "menkf/kalman.hpp"

#include <doctest.h>

#include <cmath>

using namespace menkf;

namespace {

// Independent oracle for the Gaussian analysis: information-filter form
// P_a^{-1} = P_f^{-1} + H^T R^{-1} H, x_a = P_a (P_f^{-1} x_f + H^T R^{-1} y).
DenseGaussianState conditioning_oracle(const DenseGaussianState& forecast, const ObservationSet& obs)
{
    const int m = static_cast<int>(forecast.mean.size());
    const Eigen::MatrixXd h = obs.selection_matrix(m);
    const Eigen::MatrixXd pinv = forecast.cov.inverse();
    const Eigen::MatrixXd pa_inv = pinv + h.transpose() * h / obs.noise_variance;
    DenseGaussianState out;
    out.cov = pa_inv.inverse();
    out.mean = out.cov * (pinv * forecast.mean + h.transpose() * obs.values / obs.noise_variance);
    return out;
}

Eigen::MatrixXd random_matrix(int rows, int cols, SeededStream& s)
{
    Eigen::MatrixXd m(rows, cols);
    for (int j = 0; j < cols; ++j)
        for (int i = 0; i < rows; ++i)
            m(i, j) = s.standard_normal();
    return m;
}

} // namespace

TEST_CASE("scalar Kalman update by hand: K = 0.5")
{
    DenseGaussianState s;
    s.mean = Eigen::VectorXd::Zero(1);
    s.cov = Eigen::MatrixXd::Identity(1, 1);
    const Eigen::MatrixXd m = Eigen::MatrixXd::Identity(1, 1);
    const Eigen::MatrixXd q = Eigen::MatrixXd::Zero(1, 1);
    const ObservationSet obs({0}, Eigen::VectorXd::Constant(1, 1.0), 1.0, 1, 1);

    const DenseGaussianState out = kf_step(s, m, q, &obs);
    CHECK(out.mean[0] == doctest::Approx(0.5).epsilon(1e-14));
    CHECK(out.cov(0, 0) == doctest::Approx(0.5).epsilon(1e-14));
}

TEST_CASE("forecast without observation grows covariance by Q")
{
    DenseGaussianState s;
    s.mean = Eigen::VectorXd::Constant(2, 1.0);
    s.cov = Eigen::MatrixXd::Identity(2, 2);
    const Eigen::MatrixXd m = Eigen::MatrixXd::Identity(2, 2);
    const Eigen::MatrixXd q = 0.3 * Eigen::MatrixXd::Identity(2, 2);
    const DenseGaussianState out = kf_step(s, m, q, nullptr);
    CHECK((out.cov - 1.3 * Eigen::MatrixXd::Identity(2, 2)).norm() < 1e-14);
    CHECK((out.mean - s.mean).norm() < 1e-14);
    out.validate();
}

TEST_CASE("kf_step matches the Gaussian-conditioning oracle over 10 steps")
{
    SeededStream s(31, {0});
    Eigen::MatrixXd m = random_matrix(3, 3, s) * 0.4;
    Eigen::MatrixXd q = random_matrix(3, 3, s);
    q = (q * q.transpose() * 0.05).eval();

    DenseGaussianState kf;
    kf.mean = random_matrix(3, 1, s);
    kf.cov = Eigen::MatrixXd::Identity(3, 3);
    DenseGaussianState oracle = kf;

    for (int step = 0; step < 10; ++step) {
        Eigen::VectorXd y = random_matrix(2, 1, s);
        const ObservationSet obs({0, 2}, y, 0.5, 1, 3);
        kf = kf_step(kf, m, q, &obs);
        // Oracle: identical forecast algebra, analysis via precision form.
        DenseGaussianState fc;
        fc.mean = m * oracle.mean;
        fc.cov = m * oracle.cov * m.transpose() + q;
        oracle = conditioning_oracle(fc, obs);
        CHECK((kf.mean - oracle.mean).norm() < 1e-10 * (1.0 + oracle.mean.norm()));
        CHECK((kf.cov - oracle.cov).norm() < 1e-10 * (1.0 + oracle.cov.norm()));
    }
}

TEST_CASE("anomalies of identical members vanish")
{
    Ensemble ens;
    ens.states = Eigen::MatrixXd::Constant(4, 6, 2.5);
    ens.params = Eigen::MatrixXd::Constant(1, 6, 0.75);
    const ObservationSet obs({1}, Eigen::VectorXd::Zero(1), 1.0, 1, 4);
    const Eigen::MatrixXd pred = obs.observe_members(ens.states);
    const AnomalySet a = build_anomalies(ens, obs, pred, Eigen::MatrixXd::Zero(1, 6));
    CHECK(a.X.norm() == 0.0);
    CHECK(a.Theta.norm() == 0.0);
    CHECK(a.Y.norm() == 0.0);
}

TEST_CASE("two-member anomalies are the half-difference columns")
{
    Ensemble ens;
    ens.states.resize(2, 2);
    ens.states.col(0) << 1.0, 3.0;
    ens.states.col(1) << 2.0, -1.0;
    ens.params = Eigen::MatrixXd::Zero(1, 2);
    const ObservationSet obs({0}, Eigen::VectorXd::Zero(1), 1.0, 1, 2);
    const AnomalySet a =
        build_anomalies(ens, obs, obs.observe_members(ens.states), Eigen::MatrixXd::Zero(1, 2));
    // (a - b)/2 with sqrt(N_e - 1) = 1
    CHECK(a.X(0, 0) == doctest::Approx(-0.5).epsilon(1e-15));
    CHECK(a.X(1, 0) == doctest::Approx(2.0).epsilon(1e-15));
    CHECK(a.X(0, 1) == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(a.X(1, 1) == doctest::Approx(-2.0).epsilon(1e-15));
}

TEST_CASE("X X^T equals the brute-force sample covariance and rows sum to zero")
{
    SeededStream s(7, {4});
    Ensemble ens;
    ens.states = random_matrix(5, 100, s);
    ens.params = random_matrix(2, 100, s);
    const ObservationSet obs({0, 3}, Eigen::VectorXd::Zero(2), 1.0, 1, 5);
    const AnomalySet a = build_anomalies(ens, obs, obs.observe_members(ens.states),
                                         random_matrix(2, 100, s));

    // Brute-force unbiased covariance with explicit loops.
    Eigen::VectorXd mean = Eigen::VectorXd::Zero(5);
    for (int j = 0; j < 100; ++j)
        mean += ens.states.col(j);
    mean /= 100.0;
    Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(5, 5);
    for (int j = 0; j < 100; ++j) {
        const Eigen::VectorXd d = ens.states.col(j) - mean;
        cov += d * d.transpose();
    }
    cov /= 99.0;
    CHECK((a.X * a.X.transpose() - cov).norm() < 1e-12 * cov.norm());

    for (int i = 0; i < 5; ++i)
        CHECK(std::abs(a.X.row(i).sum()) < 1e-12 * (1.0 + ens.states.row(i).cwiseAbs().maxCoeff()));
}

TEST_CASE("perturbed observations")
{
    const ObservationSet obs({0, 1, 2}, Eigen::VectorXd::Constant(3, 2.0), 0.04, 1, 3);
    const SeededStream stream(11, {9});

    SUBCASE("zero variance leaves all columns at the observed values")
    {
        const ObservationSet exact({0, 1, 2}, Eigen::VectorXd::Constant(3, 2.0), 0.0, 1, 3);
        const PerturbedObservations po = perturb_observations(exact, 50, stream);
        CHECK((po.values.colwise() - exact.values).norm() == 0.0);
        CHECK(po.draws.norm() == 0.0);
    }

    SUBCASE("moments match at N_e = 1e5")
    {
        const int ne = 100000;
        const PerturbedObservations po = perturb_observations(obs, ne, stream);
        for (int sidx = 0; sidx < 3; ++sidx) {
            const double mean = po.values.row(sidx).mean();
            CHECK(std::abs(mean - 2.0) < 3.0 * std::sqrt(0.04 / ne));
            const double var =
                (po.draws.row(sidx).array() - po.draws.row(sidx).mean()).square().sum() / (ne - 1);
            CHECK(var > 0.95 * 0.04);
            CHECK(var < 1.05 * 0.04);
        }
    }

    SUBCASE("member draws do not depend on the ensemble size")
    {
        const PerturbedObservations small = perturb_observations(obs, 10, stream);
        const PerturbedObservations large = perturb_observations(obs, 100, stream);
        CHECK((small.draws - large.draws.leftCols(10)).norm() == 0.0);
    }
}

TEST_CASE("gain on an identity-covariance construction is 0.5 I")
{
    // Rows orthonormal and orthogonal to the ones vector, so X X^T = I and
    // row sums vanish (valid anomalies).
    Eigen::MatrixXd x(2, 3);
    x.row(0) << 1.0 / std::sqrt(2.0), -1.0 / std::sqrt(2.0), 0.0;
    x.row(1) << 1.0 / std::sqrt(6.0), 1.0 / std::sqrt(6.0), -2.0 / std::sqrt(6.0);
    Eigen::MatrixXd eo(2, 3);
    eo.row(0) << 0.0, 1.0 / std::sqrt(2.0), -1.0 / std::sqrt(2.0);
    eo.row(1) << -2.0 / std::sqrt(6.0), 1.0 / std::sqrt(6.0), 1.0 / std::sqrt(6.0);

    AnomalySet a;
    a.X = x;
    a.Y = x; // H = I
    a.Eo = eo;
    a.Theta = Eigen::MatrixXd::Zero(1, 3);
    const Eigen::MatrixXd k = enkf_gain(a);
    CHECK((k - 0.5 * Eigen::MatrixXd::Identity(2, 2)).norm() < 1e-12);
}

TEST_CASE("zero state anomalies give zero gain and an unchanged ensemble")
{
    SeededStream s(3, {0});
    Ensemble ens;
    ens.states = Eigen::MatrixXd::Constant(3, 20, 1.5);
    ens.params = Eigen::MatrixXd::Zero(1, 20);
    const ObservationSet obs({1}, Eigen::VectorXd::Constant(1, 9.0), 0.5, 1, 3);
    const Eigen::MatrixXd pred = obs.observe_members(ens.states);
    const AnomalySet a = build_anomalies(ens, obs, pred, random_matrix(1, 20, s));
    CHECK(enkf_gain(a).norm() == 0.0);

    const Ensemble out = enkf_analysis(ens, obs, pred, SeededStream(5, {1}));
    CHECK((out.states - ens.states).norm() == 0.0);
}

TEST_CASE("anomaly-form gain equals the covariance-form gain")
{
    // m = 4, N_y = 2, N_e = 500.
    SeededStream s(17, {2});
    Ensemble ens;
    ens.states = random_matrix(4, 500, s);
    ens.states.row(2) = 0.3 * ens.states.row(0) + 0.7 * ens.states.row(2); // correlations
    ens.params = random_matrix(1, 500, s);
    const ObservationSet obs({1, 3}, Eigen::VectorXd::Zero(2), 0.25, 1, 4);
    const Eigen::MatrixXd draws = random_matrix(2, 500, s) * 0.5;
    const AnomalySet a = build_anomalies(ens, obs, obs.observe_members(ens.states), draws);

    const Eigen::MatrixXd k_anom = enkf_gain(a);

    const Eigen::MatrixXd h = obs.selection_matrix(4);
    const Eigen::MatrixXd p = a.X * a.X.transpose();
    const Eigen::MatrixXd re = a.Eo * a.Eo.transpose();
    const Eigen::MatrixXd k_cov =
        p * h.transpose() * (h * p * h.transpose() + re).inverse();
    CHECK((k_anom - k_cov).norm() < 1e-10 * k_cov.norm());
}

TEST_CASE("stochastic analysis: mean identity and vanishing mean shift for centered observations")
{
    SeededStream s(23, {6});
    const int ne = 10000;
    Ensemble ens;
    ens.states = random_matrix(2, ne, s);
    ens.params = Eigen::MatrixXd::Zero(1, ne);
    const Eigen::MatrixXd pred = ens.states.topRows(1);
    const Eigen::VectorXd y = pred.rowwise().mean();
    const ObservationSet obs({0}, y, 0.09, 1, 2);

    const SeededStream analysis_stream(77, {3});
    const Ensemble out = enkf_analysis(ens, obs, pred, analysis_stream);

    // Ensemble-mean identity (by linearity of the update).
    const PerturbedObservations po =
        perturb_observations(obs, ne, analysis_stream.child(kLabelObsPerturbation));
    const AnomalySet a = build_anomalies(ens, obs, pred, po.draws);
    const Eigen::MatrixXd k = enkf_gain(a);
    const Eigen::VectorXd expected_mean =
        ens.state_mean() + k * (po.values.rowwise().mean() - pred.rowwise().mean());
    CHECK((out.state_mean() - expected_mean).norm() < 1e-12);

    // With y equal to the mean prediction, the mean shift is K * mean(eps) -> 0.
    const double spread = std::sqrt(ens.state_covariance()(0, 0));
    CHECK((out.state_mean() - ens.state_mean()).norm() < 5.0 * spread / std::sqrt(double(ne)));
}

TEST_CASE("analysis contracts ensemble variance in expectation (scalar case)")
{
    double total_change = 0.0;
    for (int seed = 0; seed < 100; ++seed) {
        SeededStream s(1000 + seed, {0});
        const int ne = 40;
        Ensemble ens;
        ens.states = random_matrix(1, ne, s);
        ens.params = Eigen::MatrixXd::Zero(1, ne);
        const Eigen::MatrixXd pred = ens.states;
        const ObservationSet obs({0}, Eigen::VectorXd::Constant(1, 0.3), 0.5, 1, 1);
        const Ensemble out = enkf_analysis(ens, obs, pred, s.child(99));
        total_change += out.state_covariance()(0, 0) - ens.state_covariance()(0, 0);
    }
    CHECK(total_change / 100.0 < 0.0);
}

TEST_CASE("ensemble filter tracks the classical filter on a 2-dim linear system")
{
    SeededStream master(5150, {0});
    const int ne = 2000;
    const double angle = 0.35;
    Eigen::MatrixXd m(2, 2);
    m << std::cos(angle), -std::sin(angle), std::sin(angle), std::cos(angle);
    const Eigen::MatrixXd q = Eigen::MatrixXd::Zero(2, 2);
    const double r = 0.09;

    // Truth trajectory and initial distribution.
    Eigen::VectorXd truth(2);
    truth << 1.5, -0.7;
    DenseGaussianState kf;
    kf.mean = Eigen::VectorXd::Constant(2, 0.5);
    kf.cov = 0.25 * Eigen::MatrixXd::Identity(2, 2);

    Ensemble ens;
    ens.params = Eigen::MatrixXd::Zero(1, ne);
    ens.states.resize(2, ne);
    SeededStream init = master.child(1);
    for (int i = 0; i < ne; ++i) {
        SeededStream si = init.child(i);
        for (int d = 0; d < 2; ++d)
            ens.states(d, i) = kf.mean[d] + si.gaussian(0.0, kf.cov(d, d));
    }

    SeededStream obs_master = master.child(2);
    for (int cycle = 1; cycle <= 20; ++cycle) {
        truth = m * truth;
        SeededStream oc = obs_master.child(cycle);
        Eigen::VectorXd y(1);
        y[0] = truth[0] + oc.gaussian(0.0, r);
        const ObservationSet obs({0}, y, r, 1, 2);

        kf = kf_step(kf, m, q, &obs);

        ens.states = (m * ens.states).eval();
        const Eigen::MatrixXd pred = obs.observe_members(ens.states);
        const Ensemble updated = enkf_analysis(ens, obs, pred, oc.child(7));
        ens = updated;
    }

    CHECK((ens.state_mean() - kf.mean).norm() < 0.05 * kf.mean.norm());
    CHECK((ens.state_covariance() - kf.cov).norm() < 0.10 * kf.cov.norm());
}

TEST_CASE("dual cycle with zero parameter anomalies reduces to the plain stochastic analysis")
{
    SeededStream s(41, {8});
    const int ne = 30;
    Ensemble ens;
    ens.states = random_matrix(3, ne, s);
    ens.params = Eigen::MatrixXd::Constant(2, ne, 0.4); // identical parameters
    const ObservationSet obs({0, 2}, Eigen::VectorXd::Constant(2, 0.2), 0.04, 1, 3);

    Eigen::MatrixXd a(3, 3);
    a << 0.9, 0.05, 0.0, 0.0, 0.8, 0.1, 0.05, 0.0, 0.85;
    const MemberStep step = [&](const Eigen::VectorXd& x, const Eigen::VectorXd&, int) {
        return Eigen::VectorXd(a * x);
    };

    const SeededStream cycle_stream(6007, {1});
    const DualCycleResult dual =
        dual_enkf_cycle(ens, step, obs, Eigen::VectorXd::Zero(2), cycle_stream);
    CHECK((dual.ensemble.params - ens.params).norm() == 0.0);

    Ensemble forecasted = ens;
    forecasted.states = (a * ens.states).eval();
    const Ensemble plain =
        enkf_analysis(forecasted, obs, obs.observe_members(forecasted.states), cycle_stream);
    CHECK((dual.ensemble.states - plain.states).norm() < 1e-13 * plain.states.norm());
}

TEST_CASE("dual cycle recovers a constant scalar parameter of a linear model")
{
    // x_k = 0.8 x_{k-1} + theta, observed directly; theta* = 1.5.
    const double theta_true = 1.5;
    const double r = 0.04;
    SeededStream master(271828, {0});

    const int ne = 512;
    Ensemble ens;
    ens.states = Eigen::MatrixXd::Zero(1, ne);
    ens.params.resize(1, ne);
    SeededStream init = master.child(1);
    for (int i = 0; i < ne; ++i)
        ens.params(0, i) = init.child(i).gaussian(0.0, 1.0);

    const MemberStep step = [](const Eigen::VectorXd& x, const Eigen::VectorXd& th, int) {
        Eigen::VectorXd out(1);
        out[0] = 0.8 * x[0] + th[0];
        return out;
    };

    // Joint-filter oracle on (x, theta): exact posterior of the same
    // linear-Gaussian problem, including the random-walk inflation.
    const double inflation = 1e-6;
    Eigen::MatrixXd mj(2, 2);
    mj << 0.8, 1.0, 0.0, 1.0;
    Eigen::MatrixXd qj = Eigen::MatrixXd::Zero(2, 2);
    qj(1, 1) = inflation;
    DenseGaussianState joint;
    joint.mean = Eigen::VectorXd::Zero(2);
    joint.cov = Eigen::MatrixXd::Zero(2, 2);
    joint.cov(1, 1) = 1.0;

    double x_truth = 0.0;
    SeededStream obs_master = master.child(2);
    for (int cycle = 1; cycle <= 50; ++cycle) {
        x_truth = 0.8 * x_truth + theta_true;
        SeededStream oc = obs_master.child(cycle);
        Eigen::VectorXd y(1);
        y[0] = x_truth + oc.gaussian(0.0, r);
        const ObservationSet obs({0}, y, r, 1, 1);

        const DualCycleResult res = dual_enkf_cycle(
            ens, step, obs, Eigen::VectorXd::Constant(1, inflation), oc.child(3));
        ens = res.ensemble;

        const ObservationSet joint_obs({0}, y, r, 1, 2);
        joint = kf_step(joint, mj, qj, &joint_obs);
    }

    const double theta_mean = ens.param_mean()[0];
    const double theta_std = ens.param_std()[0];
    CHECK(std::abs(theta_mean - theta_true) < 3.0 * theta_std);
    // And the ensemble posterior is consistent with the joint-KF oracle.
    const double oracle_std = std::sqrt(joint.cov(1, 1));
    CHECK(std::abs(theta_mean - joint.mean[1]) < 4.0 * (oracle_std + theta_std));
}

TEST_CASE("singular innovation reports a usable error")
{
    AnomalySet a;
    a.X = Eigen::MatrixXd::Zero(2, 4);
    a.Y = Eigen::MatrixXd::Zero(1, 4);
    a.Eo = Eigen::MatrixXd::Zero(1, 4);
    a.Theta = Eigen::MatrixXd::Zero(1, 4);
    bool thrown = false;
    try {
        enkf_gain(a);
    } catch (const NumericsError& e) {
        thrown = true;
        CHECK(std::string(e.what()).find("larger") != std::string::npos);
    }
    CHECK(thrown);
}

TEST_CASE("flatten and unflatten round-trip the stacked layout")
{
    const Grid1D grid = Grid1D::from_elements(8, 1.0);
    StateField s(grid, {"rho", "rho_u"});
    SeededStream rng(2, {2});
    for (int v = 0; v < 2; ++v)
        for (double& x : s.var(v))
            x = rng.standard_normal();
    const Eigen::VectorXd vec = flatten(s);
    CHECK(vec.size() == 18);
    CHECK(vec[0] == s.var(0)[0]);
    CHECK(vec[9] == s.var(1)[0]);
    const StateField back = unflatten(vec, grid, {"rho", "rho_u"});
    for (int v = 0; v < 2; ++v)
        for (int i = 0; i < grid.n_nodes; ++i)
            CHECK(back.var(v)[i] == s.var(v)[i]);
}
