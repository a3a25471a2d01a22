#include "menkf/csv.hpp"

#include <cstdio>
#include <sstream>

namespace menkf {

std::string format_sig17(double v)
{
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::string render_theta_csv(const DiagnosticsSeries& series)
{
    std::ostringstream o;
    o << "time";
    for (std::size_t p = 0; p < series.theta_mean.size(); ++p)
        o << ",theta" << p + 1 << "_mean,theta" << p + 1 << "_std";
    o << "\n";
    for (std::size_t i = 0; i < series.rows(); ++i) {
        o << format_sig17(series.times[i]);
        for (std::size_t p = 0; p < series.theta_mean.size(); ++p)
            o << "," << format_sig17(series.theta_mean[p][i]) << ","
              << format_sig17(series.theta_ci[p][i] / 1.96);
        o << "\n";
    }
    return o.str();
}

std::string render_rmse_csv(const DiagnosticsSeries& series)
{
    std::ostringstream o;
    o << "time,rmse\n";
    for (std::size_t i = 0; i < series.rows(); ++i)
        o << format_sig17(series.times[i]) << "," << format_sig17(series.rmse[i]) << "\n";
    return o.str();
}

std::string render_gamma_csv(const DiagnosticsSeries& series)
{
    std::ostringstream o;
    o << "time,gamma_star_max,hf_ratio\n";
    for (std::size_t i = 0; i < series.rows(); ++i)
        o << format_sig17(series.times[i]) << "," << format_sig17(series.gamma_max[i]) << ","
          << format_sig17(series.hf_ratio[i]) << "\n";
    return o.str();
}

std::string render_snapshot(const StateField& state)
{
    std::ostringstream o;
    o << "# x";
    for (const std::string& name : state.names())
        o << " " << name;
    o << "\n";
    for (int i = 0; i < state.grid().n_nodes; ++i) {
        o << format_sig17(state.grid().node(i));
        for (int v = 0; v < state.n_vars(); ++v)
            o << " " << format_sig17(state.var(v)[i]);
        o << "\n";
    }
    return o.str();
}

} // namespace menkf
