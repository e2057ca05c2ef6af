#include "operon/assembly.hpp"

#include <cmath>
#include <stdexcept>

namespace operon {

namespace {

struct TriGeometry {
    double area;
    double dphi_dx[3];
    double dphi_dy[3];
};

TriGeometry triangle_geometry(const Mesh& mesh, int t) {
    const auto& tri = mesh.triangles[t];
    const auto& a = mesh.nodes[tri[0]];
    const auto& b = mesh.nodes[tri[1]];
    const auto& c = mesh.nodes[tri[2]];
    TriGeometry g;
    const double det = (b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]);
    g.area = 0.5 * det;
    g.dphi_dx[0] = (b[1] - c[1]) / det;
    g.dphi_dx[1] = (c[1] - a[1]) / det;
    g.dphi_dx[2] = (a[1] - b[1]) / det;
    g.dphi_dy[0] = (c[0] - b[0]) / det;
    g.dphi_dy[1] = (a[0] - c[0]) / det;
    g.dphi_dy[2] = (b[0] - a[0]) / det;
    return g;
}

// Edges of the structured mesh that lie on the rectangle boundary, walked as
// consecutive node pairs along each side.
std::vector<std::array<int, 2>> boundary_edges(const Mesh& mesh) {
    std::vector<std::array<int, 2>> edges;
    for (int j = 0; j < mesh.ny; ++j) {
        edges.push_back({mesh.node_index(0, j), mesh.node_index(0, j + 1)});
        edges.push_back({mesh.node_index(mesh.nx, j), mesh.node_index(mesh.nx, j + 1)});
    }
    for (int i = 0; i < mesh.nx; ++i) {
        edges.push_back({mesh.node_index(i, 0), mesh.node_index(i + 1, 0)});
        edges.push_back({mesh.node_index(i, mesh.ny), mesh.node_index(i + 1, mesh.ny)});
    }
    return edges;
}

// 3-point Gauss-Legendre on [0,1]: exact to degree 5.
constexpr double kGauss3Pts[3] = {0.11270166537925831, 0.5, 0.8872983346207417};
constexpr double kGauss3Wts[3] = {5.0 / 18.0, 8.0 / 18.0, 5.0 / 18.0};

} // namespace

SparseOperator assemble_mass(const Mesh& mesh) {
    const int n = mesh.node_count();
    TripletAccumulator acc(n, n);
    for (int t = 0; t < mesh.triangle_count(); ++t) {
        const auto& tri = mesh.triangles[t];
        const double area = mesh.triangle_area(t);
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j)
                acc.add(tri[i], tri[j], (i == j) ? area / 6.0 : area / 12.0);
    }
    return acc.compress();
}

SparseOperator assemble_stiffness(const Mesh& mesh, const NodalField& coeff) {
    if (coeff.components != 1) throw std::invalid_argument("assemble_stiffness: coefficient must be scalar");
    if (coeff.node_count() != mesh.node_count())
        throw std::invalid_argument("assemble_stiffness: coefficient length does not match mesh");
    for (double v : coeff.values)
        if (!std::isfinite(v)) throw std::invalid_argument("assemble_stiffness: non-finite coefficient");

    const int n = mesh.node_count();
    TripletAccumulator acc(n, n);
    for (int t = 0; t < mesh.triangle_count(); ++t) {
        const auto& tri = mesh.triangles[t];
        const TriGeometry g = triangle_geometry(mesh, t);
        const double c =
            (coeff.values[tri[0]] + coeff.values[tri[1]] + coeff.values[tri[2]]) / 3.0;
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j)
                acc.add(tri[i], tri[j],
                        c * g.area * (g.dphi_dx[i] * g.dphi_dx[j] + g.dphi_dy[i] * g.dphi_dy[j]));
    }
    return acc.compress();
}

SparseOperator assemble_elasticity_stiffness(const Mesh& mesh, const NodalField& youngs, double nu) {
    if (youngs.components != 1) throw std::invalid_argument("assemble_elasticity_stiffness: E must be scalar");
    if (youngs.node_count() != mesh.node_count())
        throw std::invalid_argument("assemble_elasticity_stiffness: E length does not match mesh");
    if (!(nu > 0.0) || !(nu < 0.5)) throw std::invalid_argument("assemble_elasticity_stiffness: need 0 < nu < 0.5");
    for (double v : youngs.values)
        if (!(v > 0.0)) throw std::invalid_argument("assemble_elasticity_stiffness: E must be positive");

    const int n = mesh.node_count();
    TripletAccumulator acc(2 * n, 2 * n);
    const double lam_fact = nu / ((1.0 + nu) * (1.0 - 2.0 * nu));
    const double mu_fact = 1.0 / (2.0 * (1.0 + nu));

    for (int t = 0; t < mesh.triangle_count(); ++t) {
        const auto& tri = mesh.triangles[t];
        const TriGeometry g = triangle_geometry(mesh, t);
        const double E =
            (youngs.values[tri[0]] + youngs.values[tri[1]] + youngs.values[tri[2]]) / 3.0;
        const double lam = E * lam_fact;
        const double mu = E * mu_fact;

        // B-matrix rows: (e11, e22, 2 e12); D in the engineering convention.
        double B[3][6] = {};
        for (int i = 0; i < 3; ++i) {
            B[0][i] = g.dphi_dx[i];          // e11 from u1 dofs
            B[1][3 + i] = g.dphi_dy[i];      // e22 from u2 dofs
            B[2][i] = g.dphi_dy[i];          // shear
            B[2][3 + i] = g.dphi_dx[i];
        }
        const double D[3][3] = {{lam + 2.0 * mu, lam, 0.0}, {lam, lam + 2.0 * mu, 0.0}, {0.0, 0.0, mu}};

        double DB[3][6];
        for (int r = 0; r < 3; ++r)
            for (int c = 0; c < 6; ++c)
                DB[r][c] = D[r][0] * B[0][c] + D[r][1] * B[1][c] + D[r][2] * B[2][c];

        for (int a = 0; a < 6; ++a) {
            const int row = (a / 3) * n + tri[a % 3];
            for (int b = 0; b < 6; ++b) {
                const int col = (b / 3) * n + tri[b % 3];
                double k_ab = 0.0;
                for (int r = 0; r < 3; ++r) k_ab += B[r][a] * DB[r][b];
                acc.add(row, col, g.area * k_ab);
            }
        }
    }
    return acc.compress();
}

std::vector<double> assemble_volume_load(const Mesh& mesh, const ScalarFn& f) {
    const int n = mesh.node_count();
    std::vector<double> load(n, 0.0);
    for (int t = 0; t < mesh.triangle_count(); ++t) {
        const auto& tri = mesh.triangles[t];
        const double area = mesh.triangle_area(t);
        // edge midpoints; phi values there are (1/2, 1/2, 0) permutations
        for (int e = 0; e < 3; ++e) {
            const int a = tri[e];
            const int b = tri[(e + 1) % 3];
            const double mx = 0.5 * (mesh.nodes[a][0] + mesh.nodes[b][0]);
            const double my = 0.5 * (mesh.nodes[a][1] + mesh.nodes[b][1]);
            const double fv = f(mx, my) * area / 3.0;
            load[a] += 0.5 * fv;
            load[b] += 0.5 * fv;
        }
    }
    return load;
}

std::vector<double> assemble_volume_load_vec(const Mesh& mesh, const VectorFn& bfn) {
    const int n = mesh.node_count();
    std::vector<double> load(2 * n, 0.0);
    for (int t = 0; t < mesh.triangle_count(); ++t) {
        const auto& tri = mesh.triangles[t];
        const double area = mesh.triangle_area(t);
        for (int e = 0; e < 3; ++e) {
            const int a = tri[e];
            const int b = tri[(e + 1) % 3];
            const double mx = 0.5 * (mesh.nodes[a][0] + mesh.nodes[b][0]);
            const double my = 0.5 * (mesh.nodes[a][1] + mesh.nodes[b][1]);
            const auto bv = bfn(mx, my);
            for (int c = 0; c < 2; ++c) {
                const double fv = bv[c] * area / 3.0;
                load[c * n + a] += 0.5 * fv;
                load[c * n + b] += 0.5 * fv;
            }
        }
    }
    return load;
}

std::vector<double> assemble_boundary_load(const Mesh& mesh, const ScalarFn& q,
                                           const std::function<bool(double, double)>& on_edge) {
    const int n = mesh.node_count();
    std::vector<double> load(n, 0.0);
    for (const auto& edge : boundary_edges(mesh)) {
        const auto& pa = mesh.nodes[edge[0]];
        const auto& pb = mesh.nodes[edge[1]];
        if (!on_edge(pa[0], pa[1]) || !on_edge(pb[0], pb[1])) continue;
        const double len = std::hypot(pb[0] - pa[0], pb[1] - pa[1]);
        for (int k = 0; k < 3; ++k) {
            const double s = kGauss3Pts[k];
            const double w = kGauss3Wts[k] * len;
            const double qx = q(pa[0] + s * (pb[0] - pa[0]), pa[1] + s * (pb[1] - pa[1]));
            load[edge[0]] += w * qx * (1.0 - s);
            load[edge[1]] += w * qx * s;
        }
    }
    return load;
}

std::vector<double> assemble_boundary_load_vec(const Mesh& mesh, const VectorFn& t,
                                               const std::function<bool(double, double)>& on_edge) {
    const int n = mesh.node_count();
    std::vector<double> load(2 * n, 0.0);
    for (const auto& edge : boundary_edges(mesh)) {
        const auto& pa = mesh.nodes[edge[0]];
        const auto& pb = mesh.nodes[edge[1]];
        if (!on_edge(pa[0], pa[1]) || !on_edge(pb[0], pb[1])) continue;
        const double len = std::hypot(pb[0] - pa[0], pb[1] - pa[1]);
        for (int k = 0; k < 3; ++k) {
            const double s = kGauss3Pts[k];
            const double w = kGauss3Wts[k] * len;
            const auto tv = t(pa[0] + s * (pb[0] - pa[0]), pa[1] + s * (pb[1] - pa[1]));
            for (int c = 0; c < 2; ++c) {
                load[c * n + edge[0]] += w * tv[c] * (1.0 - s);
                load[c * n + edge[1]] += w * tv[c] * s;
            }
        }
    }
    return load;
}

} // namespace operon
