#pragma once

#include <array>
#include <functional>
#include <vector>

#include "operon/mesh.hpp"
#include "operon/sparse.hpp"

namespace operon {

/// P1 mass matrix, exact element integration: per-element contribution
/// area/6 on the diagonal, area/12 off-diagonal.
SparseOperator assemble_mass(const Mesh& mesh);

/// Variable-coefficient stiffness: integral of c(x) grad(phi_i).grad(phi_j)
/// with c taken as the centroid value of the P1-interpolated coefficient
/// (exact for the piecewise-constant gradient product).
SparseOperator assemble_stiffness(const Mesh& mesh, const NodalField& coeff);

/// Plane-strain elasticity stiffness on component-blocked dofs (2*node_count
/// square) with lambda = E*nu/((1+nu)(1-2nu)), mu = E/(2(1+nu)) and E
/// evaluated at element centroids.
SparseOperator assemble_elasticity_stiffness(const Mesh& mesh, const NodalField& youngs, double nu);

using ScalarFn = std::function<double(double, double)>;
using VectorFn = std::function<std::array<double, 2>(double, double)>;

/// Volume load integral f*phi_i over all triangles (edge-midpoint rule, exact
/// to degree 2).
std::vector<double> assemble_volume_load(const Mesh& mesh, const ScalarFn& f);

/// Vector volume load for 2-component problems; component-blocked output.
std::vector<double> assemble_volume_load_vec(const Mesh& mesh, const VectorFn& b);

/// Line integral q*phi_i over boundary edges selected by `on_edge` applied to
/// both endpoints; 3-point Gauss per edge.
std::vector<double> assemble_boundary_load(const Mesh& mesh, const ScalarFn& q,
                                           const std::function<bool(double, double)>& on_edge);

/// Traction line integral t.phi_i for 2-component problems; component-blocked.
std::vector<double> assemble_boundary_load_vec(const Mesh& mesh, const VectorFn& t,
                                               const std::function<bool(double, double)>& on_edge);

} // namespace operon
