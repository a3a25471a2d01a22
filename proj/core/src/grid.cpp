#include "menkf/grid.hpp"

#include "menkf/errors.hpp"

#include <algorithm>
#include <cmath>

namespace menkf {

Grid1D Grid1D::from_elements(int n_elements, double domain_length, double origin)
{
    if (n_elements < 1)
        throw ConfigError("grid: n_elements must be positive, got " + std::to_string(n_elements));
    if (domain_length <= 0.0)
        throw ConfigError("grid: domain_length must be positive, got " + std::to_string(domain_length));
    Grid1D g;
    g.n_nodes = n_elements + 1;
    g.spacing = domain_length / n_elements;
    g.origin = origin;
    return g;
}

GridPair coarsen(const Grid1D& fine, int ratio)
{
    if (ratio < 1)
        throw ConfigError("coarsen: coarsening ratio must be >= 1, got " + std::to_string(ratio));
    const int n_elem = fine.n_nodes - 1;
    if (n_elem % ratio != 0)
        throw ConfigError("coarsen: fine element count " + std::to_string(n_elem) +
                          " is not divisible by coarsening ratio " + std::to_string(ratio));
    GridPair pair;
    pair.fine = fine;
    pair.ratio = ratio;
    pair.coarse.n_nodes = n_elem / ratio + 1;
    pair.coarse.spacing = fine.spacing * ratio;
    pair.coarse.origin = fine.origin;
    return pair;
}

StateField::StateField(const Grid1D& grid, std::vector<std::string> variables)
    : grid_(grid), names_(std::move(variables))
{
    if (names_.empty())
        throw ContractError("StateField: at least one variable required");
    data_.assign(names_.size(), std::vector<double>(grid_.n_nodes, 0.0));
}

int StateField::var_index(std::string_view name) const
{
    for (std::size_t i = 0; i < names_.size(); ++i)
        if (names_[i] == name)
            return static_cast<int>(i);
    throw ContractError("StateField: unknown variable '" + std::string(name) + "'");
}

std::vector<double>& StateField::var(std::string_view name)
{
    return data_[var_index(name)];
}

const std::vector<double>& StateField::var(std::string_view name) const
{
    return data_[var_index(name)];
}

void StateField::check_finite(const std::string& where) const
{
    for (std::size_t v = 0; v < data_.size(); ++v)
        for (std::size_t i = 0; i < data_[v].size(); ++i)
            if (!std::isfinite(data_[v][i]))
                throw NumericsError(where + ": non-finite value in '" + names_[v] +
                                    "' at node " + std::to_string(i));
}

bool StateField::same_layout(const StateField& other) const
{
    return grid_ == other.grid_ && names_ == other.names_;
}

namespace {

void require_fine(const std::vector<double>& values, const GridPair& pair, const char* op)
{
    if (static_cast<int>(values.size()) != pair.fine.n_nodes)
        throw ContractError(std::string(op) + ": field has " + std::to_string(values.size()) +
                            " nodes but the fine grid has " + std::to_string(pair.fine.n_nodes));
}

void require_coarse(const std::vector<double>& values, const GridPair& pair, const char* op)
{
    if (static_cast<int>(values.size()) != pair.coarse.n_nodes)
        throw ContractError(std::string(op) + ": field has " + std::to_string(values.size()) +
                            " nodes but the coarse grid has " + std::to_string(pair.coarse.n_nodes));
}

} // namespace

std::vector<double> project_to_coarse(const std::vector<double>& fine_values, const GridPair& pair)
{
    require_fine(fine_values, pair, "project_to_coarse");
    std::vector<double> out(pair.coarse.n_nodes);
    for (int j = 0; j < pair.coarse.n_nodes; ++j)
        out[j] = fine_values[j * pair.ratio];
    return out;
}

std::vector<double> project_to_fine(const std::vector<double>& coarse_values, const GridPair& pair)
{
    require_coarse(coarse_values, pair, "project_to_fine");
    const int n_fine = pair.fine.n_nodes;
    const int n_coarse = pair.coarse.n_nodes;
    const int r = pair.ratio;
    std::vector<double> out(n_fine);

    if (r == 1)
        return coarse_values;
    if (n_coarse < 4)
        throw ContractError("project_to_fine: 4-point Lagrange stencil needs at least 4 coarse nodes, got " +
                            std::to_string(n_coarse));

    for (int i = 0; i < n_fine; ++i) {
        const int j = i / r;
        const int rem = i % r;
        if (rem == 0) {
            out[i] = coarse_values[j];
            continue;
        }
        // 4-point stencil around interval [j, j+1], shifted near the ends.
        int s = std::clamp(j - 1, 0, n_coarse - 4);
        const double xi = static_cast<double>(i) / r - s; // target in stencil-local units
        double value = 0.0;
        for (int m = 0; m < 4; ++m) {
            double w = 1.0;
            for (int l = 0; l < 4; ++l) {
                if (l == m)
                    continue;
                w *= (xi - l) / (m - l);
            }
            value += w * coarse_values[s + m];
        }
        out[i] = value;
    }
    return out;
}

StateField project_to_coarse(const StateField& field, const GridPair& pair)
{
    if (!(field.grid() == pair.fine))
        throw ContractError("project_to_coarse: field does not live on the pair's fine grid");
    StateField out(pair.coarse, field.names());
    for (int v = 0; v < field.n_vars(); ++v)
        out.var(v) = project_to_coarse(field.var(v), pair);
    return out;
}

StateField project_to_fine(const StateField& field, const GridPair& pair)
{
    if (!(field.grid() == pair.coarse))
        throw ContractError("project_to_fine: field does not live on the pair's coarse grid");
    StateField out(pair.fine, field.names());
    for (int v = 0; v < field.n_vars(); ++v)
        out.var(v) = project_to_fine(field.var(v), pair);
    return out;
}

} // namespace menkf
