#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace menkf {

/// Uniform 1D node set.
///
/// Convention: user-facing sizes are element counts (an N-element grid has
/// N+1 nodes, both domain endpoints included).
struct Grid1D {
    int n_nodes = 0;
    double spacing = 0.0;
    double origin = 0.0;

    double node(int i) const { return origin + i * spacing; }
    double length() const { return (n_nodes - 1) * spacing; }
    int n_elements() const { return n_nodes - 1; }

    static Grid1D from_elements(int n_elements, double domain_length, double origin = 0.0);

    bool operator==(const Grid1D&) const = default;
};

/// Fine/coarse grid pair linked by an integer coarsening ratio. Coarse nodes
/// are a subset of fine nodes (suppression coarsening): coarse node j sits on
/// fine node j * ratio.
struct GridPair {
    Grid1D fine;
    Grid1D coarse;
    int ratio = 1;
};

/// Build the coarse companion of `fine` for coarsening ratio `ratio`.
/// The fine element count must be divisible by `ratio`.
GridPair coarsen(const Grid1D& fine, int ratio);

/// Per-node values of one or more named conserved variables on a grid.
class StateField {
public:
    StateField() = default;
    StateField(const Grid1D& grid, std::vector<std::string> variables);

    const Grid1D& grid() const { return grid_; }
    int n_vars() const { return static_cast<int>(names_.size()); }
    const std::vector<std::string>& names() const { return names_; }

    std::vector<double>& var(int i) { return data_[i]; }
    const std::vector<double>& var(int i) const { return data_[i]; }
    std::vector<double>& var(std::string_view name);
    const std::vector<double>& var(std::string_view name) const;
    int var_index(std::string_view name) const;

    /// Throws NumericsError when any value is NaN/Inf. `where` names the caller.
    void check_finite(const std::string& where) const;

    bool same_layout(const StateField& other) const;

private:
    Grid1D grid_;
    std::vector<std::string> names_;
    std::vector<std::vector<double>> data_;
};

/// Fine-to-coarse projection. Coarse nodes coincide with fine nodes under
/// suppression coarsening, so values are injected exactly (the limit of
/// Lagrange interpolation when the target is a source node).
std::vector<double> project_to_coarse(const std::vector<double>& fine_values, const GridPair& pair);
StateField project_to_coarse(const StateField& field, const GridPair& pair);

/// Coarse-to-fine projection via 4-point (4th-order) Lagrange interpolation.
/// Near the domain ends the stencil is shifted (one-sided), preserving both
/// linearity and exactness on cubics.
std::vector<double> project_to_fine(const std::vector<double>& coarse_values, const GridPair& pair);
StateField project_to_fine(const StateField& field, const GridPair& pair);

} // namespace menkf
