#include "operon/grid_transfer.hpp"

#include <algorithm>
#include <stdexcept>

namespace operon {

GridTransfer::GridTransfer(const Mesh& mesh, int n1, int n2) : mesh_(mesh), n1_(n1), n2_(n2) {
    if (n1 < 2 || n2 < 2) throw std::invalid_argument("GridTransfer: need at least 2 points per axis");

    const int n_grid = n1 * n2;
    tri_nodes_.resize(n_grid);
    tri_weights_.resize(n_grid);
    for (int a = 0; a < n1; ++a)
        for (int b = 0; b < n2; ++b) {
            const auto pt = grid_point(a, b);
            const PointLocation loc = locate_point(mesh, pt[0], pt[1]);
            tri_nodes_[a * n2 + b] = loc.nodes;
            tri_weights_[a * n2 + b] = loc.weights;
        }

    const double g1 = mesh.L1 / (n1 - 1);
    const double g2 = mesh.L2 / (n2 - 1);
    cell_ids_.resize(mesh.node_count());
    cell_weights_.resize(mesh.node_count());
    for (int node = 0; node < mesh.node_count(); ++node) {
        const double x = mesh.nodes[node][0];
        const double y = mesh.nodes[node][1];
        const int a = std::min(static_cast<int>(x / g1), n1 - 2);
        const int b = std::min(static_cast<int>(y / g2), n2 - 2);
        const double s = x / g1 - a;
        const double t = y / g2 - b;
        cell_ids_[node] = {a * n2 + b, (a + 1) * n2 + b, a * n2 + b + 1, (a + 1) * n2 + b + 1};
        cell_weights_[node] = {(1.0 - s) * (1.0 - t), s * (1.0 - t), (1.0 - s) * t, s * t};
    }
}

std::array<double, 2> GridTransfer::grid_point(int a, int b) const {
    return {a * mesh_.L1 / (n1_ - 1), b * mesh_.L2 / (n2_ - 1)};
}

std::vector<double> GridTransfer::fem_to_grid(const std::vector<double>& nodal) const {
    if (static_cast<int>(nodal.size()) != mesh_.node_count())
        throw std::invalid_argument("fem_to_grid: nodal length mismatch");
    std::vector<double> out(tri_nodes_.size());
    for (std::size_t g = 0; g < tri_nodes_.size(); ++g) {
        const auto& ids = tri_nodes_[g];
        const auto& w = tri_weights_[g];
        out[g] = w[0] * nodal[ids[0]] + w[1] * nodal[ids[1]] + w[2] * nodal[ids[2]];
    }
    return out;
}

std::vector<double> GridTransfer::grid_to_fem(const std::vector<double>& grid) const {
    if (static_cast<int>(grid.size()) != n1_ * n2_)
        throw std::invalid_argument("grid_to_fem: grid length mismatch");
    std::vector<double> out(mesh_.node_count());
    for (int node = 0; node < mesh_.node_count(); ++node) {
        const auto& ids = cell_ids_[node];
        const auto& w = cell_weights_[node];
        out[node] = w[0] * grid[ids[0]] + w[1] * grid[ids[1]] + w[2] * grid[ids[2]] + w[3] * grid[ids[3]];
    }
    return out;
}

} // namespace operon
