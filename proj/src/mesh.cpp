#include "operon/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "operon/errors.hpp"

namespace operon {

namespace {
constexpr double kSnapTol = 1e-12;
}

double Mesh::triangle_area(int t) const {
    const auto& tri = triangles[t];
    const auto& a = nodes[tri[0]];
    const auto& b = nodes[tri[1]];
    const auto& c = nodes[tri[2]];
    return 0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]));
}

Mesh build_rect_mesh(int nx, int ny, double L1, double L2) {
    if (nx < 1 || ny < 1) throw std::invalid_argument("build_rect_mesh: nx and ny must be >= 1");
    if (!(L1 > 0.0) || !(L2 > 0.0)) throw std::invalid_argument("build_rect_mesh: L1 and L2 must be > 0");

    Mesh mesh;
    mesh.nx = nx;
    mesh.ny = ny;
    mesh.L1 = L1;
    mesh.L2 = L2;

    const int n_nodes = (nx + 1) * (ny + 1);
    mesh.nodes.resize(n_nodes);
    mesh.boundary_mask.assign(n_nodes, 0);
    for (int i = 0; i <= nx; ++i) {
        for (int j = 0; j <= ny; ++j) {
            const int id = mesh.node_index(i, j);
            mesh.nodes[id] = {i * L1 / nx, j * L2 / ny};
            std::uint8_t mask = 0;
            if (i == 0) mask |= kBoundaryLeft;
            if (i == nx) mask |= kBoundaryRight;
            if (j == 0) mask |= kBoundaryBottom;
            if (j == ny) mask |= kBoundaryTop;
            mesh.boundary_mask[id] = mask;
        }
    }

    // Fixed diagonal from (i,j) to (i+1,j+1); both triangles CCW.
    mesh.triangles.reserve(2 * nx * ny);
    for (int i = 0; i < nx; ++i) {
        for (int j = 0; j < ny; ++j) {
            const int n00 = mesh.node_index(i, j);
            const int n10 = mesh.node_index(i + 1, j);
            const int n01 = mesh.node_index(i, j + 1);
            const int n11 = mesh.node_index(i + 1, j + 1);
            mesh.triangles.push_back({n00, n10, n11});
            mesh.triangles.push_back({n00, n11, n01});
        }
    }
    return mesh;
}

PointLocation locate_point(const Mesh& mesh, double x1, double x2) {
    if (x1 < -kSnapTol || x1 > mesh.L1 + kSnapTol || x2 < -kSnapTol || x2 > mesh.L2 + kSnapTol)
        throw out_of_domain(x1, x2);
    const double cx = std::clamp(x1, 0.0, mesh.L1);
    const double cy = std::clamp(x2, 0.0, mesh.L2);

    const double hx = mesh.L1 / mesh.nx;
    const double hy = mesh.L2 / mesh.ny;
    int i = std::min(static_cast<int>(cx / hx), mesh.nx - 1);
    int j = std::min(static_cast<int>(cy / hy), mesh.ny - 1);
    const double xi = cx / hx - i;
    const double eta = cy / hy - j;

    const int n00 = mesh.node_index(i, j);
    const int n10 = mesh.node_index(i + 1, j);
    const int n01 = mesh.node_index(i, j + 1);
    const int n11 = mesh.node_index(i + 1, j + 1);

    PointLocation loc;
    if (eta <= xi) {
        // lower triangle (n00, n10, n11)
        loc.triangle = 2 * (i * mesh.ny + j);
        loc.nodes = {n00, n10, n11};
        loc.weights = {1.0 - xi, xi - eta, eta};
    } else {
        loc.triangle = 2 * (i * mesh.ny + j) + 1;
        loc.nodes = {n00, n11, n01};
        loc.weights = {1.0 - eta, xi, eta - xi};
    }
    return loc;
}

std::vector<double> interpolate_at_points(const Mesh& mesh, const NodalField& field,
                                          const std::vector<std::array<double, 2>>& points) {
    const int n_pts = static_cast<int>(points.size());
    std::vector<double> out(static_cast<std::size_t>(n_pts) * field.components);
    for (int p = 0; p < n_pts; ++p) {
        const PointLocation loc = locate_point(mesh, points[p][0], points[p][1]);
        for (int c = 0; c < field.components; ++c) {
            double v = 0.0;
            for (int k = 0; k < 3; ++k) v += loc.weights[k] * field.at(c, loc.nodes[k]);
            out[static_cast<std::size_t>(c) * n_pts + p] = v;
        }
    }
    return out;
}

} // namespace operon
