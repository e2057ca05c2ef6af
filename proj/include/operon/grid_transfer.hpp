#pragma once

#include <array>
#include <vector>

#include "operon/mesh.hpp"

namespace operon {

/// Cached resampling between the triangulation and the uniform n1 x n2 grid
/// over the closure of the domain. fem_to_grid is barycentric, grid_to_fem is
/// bilinear; both reproduce linear fields exactly. Caches are immutable after
/// construction.
class GridTransfer {
public:
    GridTransfer(const Mesh& mesh, int n1, int n2);

    int n1() const { return n1_; }
    int n2() const { return n2_; }
    // grid point (a, b) coordinates; a indexes x1, b indexes x2, row-major a*n2+b
    std::array<double, 2> grid_point(int a, int b) const;

    /// NodalField -> grid values, one component: length n1*n2, row-major.
    std::vector<double> fem_to_grid(const std::vector<double>& nodal) const;
    /// grid values -> nodal values, one component.
    std::vector<double> grid_to_fem(const std::vector<double>& grid) const;

    const Mesh& mesh() const { return mesh_; }

private:
    const Mesh& mesh_;
    int n1_, n2_;
    // per grid point: 3 node ids + barycentric weights
    std::vector<std::array<int, 3>> tri_nodes_;
    std::vector<std::array<double, 3>> tri_weights_;
    // per mesh node: 4 grid ids + bilinear weights
    std::vector<std::array<int, 4>> cell_ids_;
    std::vector<std::array<double, 4>> cell_weights_;
};

} // namespace operon
