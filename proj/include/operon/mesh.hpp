#pragma once

#include <array>
#include <cstdint>
#include <vector>

namespace operon {

// Boundary edge tags; a corner node carries two bits.
enum BoundaryBit : std::uint8_t {
    kBoundaryLeft = 1,
    kBoundaryRight = 2,
    kBoundaryBottom = 4,
    kBoundaryTop = 8,
};

/// Structured triangulation of the rectangle (0,L1)x(0,L2).
///
/// Nodes sit on the (nx+1)x(ny+1) grid, row-major with the x index outermost:
/// node(i,j) = i*(ny+1)+j at (i*L1/nx, j*L2/ny). Each cell is split along the
/// lower-left to upper-right diagonal into two CCW triangles.
struct Mesh {
    int nx = 0, ny = 0;
    double L1 = 0.0, L2 = 0.0;
    std::vector<std::array<double, 2>> nodes;
    std::vector<std::array<int, 3>> triangles;
    std::vector<std::uint8_t> boundary_mask;

    int node_count() const { return static_cast<int>(nodes.size()); }
    int triangle_count() const { return static_cast<int>(triangles.size()); }
    int node_index(int i, int j) const { return i * (ny + 1) + j; }

    double triangle_area(int t) const;
};

/// Coefficient vector of a P1 finite-element function. Component-blocked for
/// vector fields: all node values of component 0, then component 1.
struct NodalField {
    std::vector<double> values;
    int components = 1;

    NodalField() = default;
    NodalField(std::vector<double> v, int comps) : values(std::move(v)), components(comps) {}
    static NodalField constant(double c, int node_count, int comps = 1) {
        return NodalField(std::vector<double>(static_cast<std::size_t>(node_count) * comps, c), comps);
    }

    int node_count() const { return static_cast<int>(values.size()) / components; }
    double& at(int component, int node) { return values[static_cast<std::size_t>(component) * node_count() + node]; }
    double at(int component, int node) const { return values[static_cast<std::size_t>(component) * node_count() + node]; }
};

Mesh build_rect_mesh(int nx, int ny, double L1, double L2);

// Location of a point in the structured mesh: owning triangle plus barycentric
// weights of its three vertices. Snap tolerance for boundary points is 1e-12.
struct PointLocation {
    int triangle;
    std::array<int, 3> nodes;
    std::array<double, 3> weights;
};

PointLocation locate_point(const Mesh& mesh, double x1, double x2);

/// Barycentric P1 interpolation; exact at nodes and for linear fields.
/// Output is component-blocked: all points of component 0, then component 1.
std::vector<double> interpolate_at_points(const Mesh& mesh, const NodalField& field,
                                          const std::vector<std::array<double, 2>>& points);

} // namespace operon
