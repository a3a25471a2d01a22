#include "menkf/errors.hpp"
#include "menkf/grid.hpp"
#include "menkf/stochastics.hpp"

#include <doctest.h>

#include <cmath>
#include <functional>
#include <limits>
#include <numbers>

using namespace menkf;

namespace {

std::vector<double> sample(const Grid1D& g, const std::function<double(double)>& f)
{
    std::vector<double> v(g.n_nodes);
    for (int i = 0; i < g.n_nodes; ++i)
        v[i] = f(g.node(i));
    return v;
}

double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b)
{
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i)
        m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

} // namespace

TEST_CASE("paper grid: 800 elements over length 10 with ratio 4")
{
    const Grid1D fine = Grid1D::from_elements(800, 10.0);
    CHECK(fine.n_nodes == 801);
    CHECK(fine.spacing == doctest::Approx(0.0125).epsilon(1e-14));
    const GridPair pair = coarsen(fine, 4);
    CHECK(pair.coarse.n_elements() == 200);
    CHECK(pair.coarse.spacing == doctest::Approx(0.05).epsilon(1e-14));
    CHECK(std::abs(fine.length() - (fine.n_nodes - 1) * fine.spacing) <= 1e-15 * fine.length());
}

TEST_CASE("ratio 1 coarsening is the identity")
{
    const Grid1D fine = Grid1D::from_elements(80, 1.0);
    const GridPair pair = coarsen(fine, 1);
    CHECK(pair.coarse == pair.fine);
}

TEST_CASE("ratio 16 of 800 elements gives 50 elements of spacing 0.2")
{
    const GridPair pair = coarsen(Grid1D::from_elements(800, 10.0), 16);
    CHECK(pair.coarse.n_elements() == 50);
    CHECK(pair.coarse.spacing == doctest::Approx(0.2).epsilon(1e-14));
}

TEST_CASE("non-divisible coarsening names both values")
{
    const Grid1D fine = Grid1D::from_elements(800, 10.0);
    bool thrown = false;
    try {
        coarsen(fine, 3);
    } catch (const ConfigError& e) {
        thrown = true;
        const std::string msg = e.what();
        CHECK(msg.find("800") != std::string::npos);
        CHECK(msg.find("3") != std::string::npos);
    }
    CHECK(thrown);
}

TEST_CASE("projections reproduce constants")
{
    const GridPair pair = coarsen(Grid1D::from_elements(64, 4.0), 4);
    StateField fine(pair.fine, {"u"});
    std::fill(fine.var(0).begin(), fine.var(0).end(), 3.25);
    const StateField coarse = project_to_coarse(fine, pair);
    for (double v : coarse.var(0))
        CHECK(v == 3.25);
    const StateField back = project_to_fine(coarse, pair);
    for (double v : back.var(0))
        CHECK(v == doctest::Approx(3.25).epsilon(1e-15));
}

TEST_CASE("both projections are exact on cubic polynomials")
{
    const GridPair pair = coarsen(Grid1D::from_elements(96, 6.0), 4);
    auto p = [](double x) { return x * x * x - 2.0 * x; };

    StateField fine(pair.fine, {"u"});
    fine.var(0) = sample(pair.fine, p);
    const StateField down = project_to_coarse(fine, pair);
    CHECK(max_abs_diff(down.var(0), sample(pair.coarse, p)) < 1e-12);

    StateField coarse(pair.coarse, {"u"});
    coarse.var(0) = sample(pair.coarse, p);
    const StateField up = project_to_fine(coarse, pair);
    CHECK(max_abs_diff(up.var(0), sample(pair.fine, p)) < 1e-12);
}

TEST_CASE("ratio 1 projections are identities")
{
    const GridPair pair = coarsen(Grid1D::from_elements(32, 2.0), 1);
    StateField f(pair.fine, {"u"});
    SeededStream s(3, {1});
    for (double& v : f.var(0))
        v = s.standard_normal();
    CHECK(max_abs_diff(project_to_coarse(f, pair).var(0), f.var(0)) == 0.0);
    CHECK(max_abs_diff(project_to_fine(f, pair).var(0), f.var(0)) == 0.0);
}

TEST_CASE("coarse-fine round trip is exact on coarse fields")
{
    const GridPair pair = coarsen(Grid1D::from_elements(80, 5.0), 5);
    StateField coarse(pair.coarse, {"u"});
    SeededStream s(17, {2});
    for (double& v : coarse.var(0))
        v = s.standard_normal();
    const StateField round = project_to_coarse(project_to_fine(coarse, pair), pair);
    CHECK(max_abs_diff(round.var(0), coarse.var(0)) == 0.0);
}

TEST_CASE("fine-coarse-fine round trip on a resolved sine is fourth-order accurate")
{
    auto wave = [](double x) { return std::sin(2.0 * std::numbers::pi * x); };
    auto round_trip_error = [&](int fine_elements) {
        const Grid1D fine = Grid1D::from_elements(fine_elements, 2.0);
        const GridPair pair = coarsen(fine, 4);
        StateField f(fine, {"u"});
        f.var(0) = sample(fine, wave);
        const StateField round = project_to_fine(project_to_coarse(f, pair), pair);
        return max_abs_diff(round.var(0), f.var(0));
    };

    // 80 fine points per wavelength (20 coarse): the cubic-interpolant error
    // bound is (2 pi h)^4 * 0.5625 / 24 ~ 2.3e-4 at the interval centers.
    const double e80 = round_trip_error(160);
    CHECK(e80 < 3e-4);
    // Doubling the resolution must shrink the error by ~2^4.
    const double e160 = round_trip_error(320);
    CHECK(e160 < 1e-4);
    CHECK(e80 / e160 > 12.0);
    CHECK(e80 / e160 < 20.0);
}

TEST_CASE("projections are linear to machine precision")
{
    const GridPair pair = coarsen(Grid1D::from_elements(48, 3.0), 4);
    SeededStream s(23, {5});
    std::vector<double> a(pair.coarse.n_nodes), b(pair.coarse.n_nodes);
    for (int i = 0; i < pair.coarse.n_nodes; ++i) {
        a[i] = s.standard_normal();
        b[i] = s.standard_normal();
    }
    const double alpha = 1.7, beta = -0.4;
    std::vector<double> combo(pair.coarse.n_nodes);
    for (int i = 0; i < pair.coarse.n_nodes; ++i)
        combo[i] = alpha * a[i] + beta * b[i];

    const std::vector<double> up_combo = project_to_fine(combo, pair);
    const std::vector<double> up_a = project_to_fine(a, pair);
    const std::vector<double> up_b = project_to_fine(b, pair);
    for (int i = 0; i < pair.fine.n_nodes; ++i)
        CHECK(up_combo[i] == doctest::Approx(alpha * up_a[i] + beta * up_b[i]).epsilon(1e-13));
}

TEST_CASE("grid mismatch is a contract error")
{
    const GridPair pair = coarsen(Grid1D::from_elements(40, 1.0), 4);
    StateField wrong(pair.coarse, {"u"});
    CHECK_THROWS_AS(project_to_coarse(wrong, pair), ContractError);
    StateField wrong2(pair.fine, {"u"});
    CHECK_THROWS_AS(project_to_fine(wrong2, pair), ContractError);
}

TEST_CASE("finite check reports variable and node")
{
    StateField f(Grid1D::from_elements(8, 1.0), {"u"});
    f.var(0)[3] = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(f.check_finite("test"), NumericsError);
}
