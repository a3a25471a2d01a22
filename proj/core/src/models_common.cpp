#include "menkf/models.hpp"

#include "menkf/errors.hpp"

#include <cmath>

namespace menkf {

double InletForcing::amplitude(double t) const
{
    if (kind == Kind::burgers_phase_amplitude)
        return theta.empty() ? 0.0 : theta[0];
    if (truth_modulation)
        return theta0 * (1.0 + std::sin(omega_theta * t));
    return theta.empty() ? 0.0 : theta[0];
}

double InletForcing::velocity(double t) const
{
    if (kind == Kind::burgers_phase_amplitude) {
        const double th1 = theta.size() > 0 ? theta[0] : 0.0;
        const double th2 = theta.size() > 1 ? theta[1] : 0.0;
        return u_ref * (1.0 + th1 * std::sin(omega * t + th2));
    }
    return u_ref * (1.0 + amplitude(t) * std::sin(omega * t));
}

InletForcing InletForcing::with_theta(std::vector<double> th) const
{
    InletForcing out = *this;
    out.theta = std::move(th);
    out.truth_modulation = false;
    return out;
}

double inlet_value(const InletForcing& inlet, double t)
{
    return inlet.velocity(t);
}

std::vector<double> sixth_order_filter(const std::vector<double>& values, double strength)
{
    static constexpr double d[7] = {-1.0 / 64.0, 6.0 / 64.0,  -15.0 / 64.0, 20.0 / 64.0,
                                    -15.0 / 64.0, 6.0 / 64.0, -1.0 / 64.0};
    const int n = static_cast<int>(values.size());
    if (n < 7)
        throw ContractError("sixth_order_filter: need at least 7 nodes, got " + std::to_string(n));
    std::vector<double> out = values;
    for (int i = 3; i < n - 3; ++i) {
        double damp = 0.0;
        for (int j = -3; j <= 3; ++j)
            damp += d[j + 3] * values[i + j];
        out[i] = values[i] - strength * damp;
    }
    return out;
}

std::vector<double> TridiagonalOperator::apply(const std::vector<double>& x) const
{
    const int n = size();
    std::vector<double> y(n);
    y[0] = diag[0] * x[0];
    for (int i = 1; i < n - 1; ++i)
        y[i] = lower[i] * x[i - 1] + diag[i] * x[i] + upper[i] * x[i + 1];
    y[n - 1] = out_of_band * x[n - 3] + lower[n - 1] * x[n - 2] + diag[n - 1] * x[n - 1];
    return y;
}

std::vector<double> TridiagonalOperator::residual(const std::vector<double>& x) const
{
    std::vector<double> r = apply(x);
    for (int i = 0; i < size(); ++i)
        r[i] = rhs[i] - r[i];
    return r;
}

std::vector<double> TridiagonalOperator::jacobi_sweep(const std::vector<double>& x) const
{
    const int n = size();
    std::vector<double> y(n);
    y[0] = rhs[0] / diag[0];
    for (int i = 1; i < n - 1; ++i)
        y[i] = (rhs[i] - lower[i] * x[i - 1] - upper[i] * x[i + 1]) / diag[i];
    y[n - 1] = (rhs[n - 1] - out_of_band * x[n - 3] - lower[n - 1] * x[n - 2]) / diag[n - 1];
    return y;
}

std::vector<double> TridiagonalOperator::solve() const
{
    const int n = size();
    if (n < 4)
        throw ContractError("TridiagonalOperator::solve: need at least 4 rows");

    // Thomas forward sweep over rows 0..n-2: x_i = d[i] - c[i] * x_{i+1}.
    std::vector<double> c(n, 0.0), d(n, 0.0);
    c[0] = 0.0; // row 0 is Dirichlet: diag[0] x_0 = rhs[0]
    d[0] = rhs[0] / diag[0];
    for (int i = 1; i < n - 1; ++i) {
        const double denom = diag[i] - lower[i] * c[i - 1];
        c[i] = upper[i] / denom;
        d[i] = (rhs[i] - lower[i] * d[i - 1]) / denom;
    }

    // Outlet row couples x_{n-3}, x_{n-2}, x_{n-1}; substitute the two
    // forward-sweep relations and solve the remaining scalar equation.
    const double cA = c[n - 3], dA = d[n - 3];
    const double cB = c[n - 2], dB = d[n - 2];
    // x_{n-2} = dB - cB x_{n-1}
    // x_{n-3} = dA - cA x_{n-2} = dA - cA dB + cA cB x_{n-1}
    const double coef = diag[n - 1] + out_of_band * cA * cB - lower[n - 1] * cB;
    const double rhs_last = rhs[n - 1] - out_of_band * (dA - cA * dB) - lower[n - 1] * dB;
    std::vector<double> x(n);
    x[n - 1] = rhs_last / coef;
    for (int i = n - 2; i >= 0; --i)
        x[i] = d[i] - c[i] * x[i + 1];
    return x;
}

} // namespace menkf
