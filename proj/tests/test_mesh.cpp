#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "operon/errors.hpp"
#include "operon/mesh.hpp"

using namespace operon;

TEST_CASE("rect mesh node and triangle counts") {
    const Mesh paper = build_rect_mesh(50, 50, 1.0, 1.0);
    CHECK(paper.node_count() == 2601);
    CHECK(paper.triangle_count() == 5000);

    const Mesh single = build_rect_mesh(1, 1, 1.0, 1.0);
    CHECK(single.node_count() == 4);
    CHECK(single.triangle_count() == 2);

    const Mesh two = build_rect_mesh(2, 1, 1.0, 1.0);
    CHECK(two.node_count() == 6);
    CHECK(two.triangle_count() == 4);
}

TEST_CASE("rect mesh rejects bad dimensions") {
    CHECK_THROWS_AS(build_rect_mesh(0, 3, 1.0, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(build_rect_mesh(3, -1, 1.0, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(build_rect_mesh(3, 3, 0.0, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(build_rect_mesh(3, 3, 1.0, -2.0), std::invalid_argument);
}

TEST_CASE("node placement and boundary tags") {
    const Mesh mesh = build_rect_mesh(4, 3, 2.0, 1.5);
    for (int i = 0; i <= 4; ++i)
        for (int j = 0; j <= 3; ++j) {
            const auto& p = mesh.nodes[mesh.node_index(i, j)];
            CHECK(p[0] == doctest::Approx(i * 2.0 / 4).epsilon(1e-15));
            CHECK(p[1] == doctest::Approx(j * 1.5 / 3).epsilon(1e-15));
        }
    CHECK((mesh.boundary_mask[mesh.node_index(0, 0)] & kBoundaryLeft) != 0);
    CHECK((mesh.boundary_mask[mesh.node_index(0, 0)] & kBoundaryBottom) != 0);
    CHECK((mesh.boundary_mask[mesh.node_index(4, 3)] & kBoundaryRight) != 0);
    CHECK((mesh.boundary_mask[mesh.node_index(4, 3)] & kBoundaryTop) != 0);
    CHECK(mesh.boundary_mask[mesh.node_index(2, 2)] == 0);
}

TEST_CASE("triangles are positively oriented and tile the domain") {
    const Mesh mesh = build_rect_mesh(7, 5, 2.5, 0.75);
    double total = 0.0;
    for (int t = 0; t < mesh.triangle_count(); ++t) {
        const double area = mesh.triangle_area(t);
        CHECK(area > 0.0);
        total += area;
    }
    CHECK(total == doctest::Approx(2.5 * 0.75).epsilon(1e-12));
}

TEST_CASE("interpolation is exact at nodes and centroids") {
    const Mesh mesh = build_rect_mesh(5, 4, 1.0, 1.0);
    NodalField f(std::vector<double>(mesh.node_count()), 1);
    for (int n = 0; n < mesh.node_count(); ++n) f.values[n] = 0.3 * n - 2.0;

    // node coordinate reproduces the nodal value
    const auto at_node = interpolate_at_points(mesh, f, {mesh.nodes[7]});
    CHECK(at_node[0] == doctest::Approx(f.values[7]).epsilon(1e-15));

    // centroid value is the mean of the three vertex values
    const auto& tri = mesh.triangles[3];
    const std::array<double, 2> centroid = {
        (mesh.nodes[tri[0]][0] + mesh.nodes[tri[1]][0] + mesh.nodes[tri[2]][0]) / 3.0,
        (mesh.nodes[tri[0]][1] + mesh.nodes[tri[1]][1] + mesh.nodes[tri[2]][1]) / 3.0};
    const auto at_centroid = interpolate_at_points(mesh, f, {centroid});
    const double mean = (f.values[tri[0]] + f.values[tri[1]] + f.values[tri[2]]) / 3.0;
    CHECK(at_centroid[0] == doctest::Approx(mean).epsilon(1e-13));
}

TEST_CASE("interpolation reproduces linear fields") {
    const Mesh mesh = build_rect_mesh(6, 6, 1.0, 1.0);
    NodalField f(std::vector<double>(mesh.node_count()), 1);
    for (int n = 0; n < mesh.node_count(); ++n)
        f.values[n] = 2.0 * mesh.nodes[n][0] + 3.0 * mesh.nodes[n][1];

    const std::vector<std::array<double, 2>> pts = {{0.13, 0.57}, {0.99, 0.01}, {0.5, 0.5}};
    const auto vals = interpolate_at_points(mesh, f, pts);
    for (std::size_t k = 0; k < pts.size(); ++k)
        CHECK(vals[k] == doctest::Approx(2.0 * pts[k][0] + 3.0 * pts[k][1]).epsilon(1e-12));
}

TEST_CASE("points outside the domain are rejected by name") {
    const Mesh mesh = build_rect_mesh(3, 3, 1.0, 1.0);
    NodalField f = NodalField::constant(1.0, mesh.node_count());
    CHECK_THROWS_AS(interpolate_at_points(mesh, f, {{1.5, 0.5}}), out_of_domain);
    // snap tolerance admits boundary round-off
    const auto v = interpolate_at_points(mesh, f, {{1.0 + 5e-13, 0.5}});
    CHECK(v[0] == doctest::Approx(1.0));
}

TEST_CASE("component-blocked interpolation for vector fields") {
    const Mesh mesh = build_rect_mesh(4, 4, 1.0, 1.0);
    const int n = mesh.node_count();
    NodalField u(std::vector<double>(2 * n), 2);
    for (int i = 0; i < n; ++i) {
        u.values[i] = mesh.nodes[i][0];       // u1 = x1
        u.values[n + i] = -mesh.nodes[i][1];  // u2 = -x2
    }
    const std::vector<std::array<double, 2>> pts = {{0.21, 0.69}, {0.8, 0.05}};
    const auto vals = interpolate_at_points(mesh, u, pts);
    CHECK(vals[0] == doctest::Approx(0.21).epsilon(1e-12));
    CHECK(vals[1] == doctest::Approx(0.8).epsilon(1e-12));
    CHECK(vals[2] == doctest::Approx(-0.69).epsilon(1e-12));
    CHECK(vals[3] == doctest::Approx(-0.05).epsilon(1e-12));
}
