#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "operon/dimred.hpp"
#include "operon/rng.hpp"

using namespace operon;

namespace {

std::vector<double> random_matrix(Rng& rng, int rows, int cols) {
    std::vector<double> out(static_cast<std::size_t>(rows) * cols);
    for (double& v : out) v = rng.normal();
    return out;
}

double frobenius_sq(const std::vector<double>& a) {
    double s = 0.0;
    for (double v : a) s += v * v;
    return s;
}

} // namespace

TEST_CASE("normalizer: constant columns map to zero") {
    const std::vector<double> X = {3.0, -1.0, 3.0, -1.0, 3.0, -1.0};
    const Normalizer norm = fit_normalizer(X, 3, 2);
    const std::vector<double> z = norm.apply({3.0, -1.0});
    CHECK(z[0] == 0.0);
    CHECK(z[1] == 0.0);
}

TEST_CASE("normalizer: population std on a two-sample column") {
    // samples {0, 2}: mean 1, population std 1, normalized value 1/(1 + tol)
    const std::vector<double> X = {0.0, 2.0};
    const Normalizer norm = fit_normalizer(X, 2, 1);
    CHECK(norm.mean[0] == 1.0);
    CHECK(norm.std_dev[0] == 1.0);
    const double expected = 1.0 / (1.0 + 1e-8);
    CHECK(norm.apply({2.0})[0] == doctest::Approx(expected).epsilon(1e-15));
    CHECK(norm.apply({0.0})[0] == doctest::Approx(-expected).epsilon(1e-15));
}

TEST_CASE("normalizer: apply then invert is the identity") {
    Rng rng(4);
    const int n = 20, p = 7;
    const std::vector<double> X = random_matrix(rng, n, p);
    const Normalizer norm = fit_normalizer(X, n, p);
    for (int i = 0; i < n; ++i) {
        std::vector<double> row(X.begin() + i * p, X.begin() + (i + 1) * p);
        const std::vector<double> back = norm.invert(norm.apply(row));
        for (int j = 0; j < p; ++j)
            CHECK(std::abs(back[j] - row[j]) < 1e-12 * std::max(1.0, std::abs(row[j])));
    }
}

TEST_CASE("normalizer rejects single-sample fits") {
    CHECK_THROWS_AS(fit_normalizer({1.0, 2.0}, 1, 2), std::invalid_argument);
}

TEST_CASE("projector: exact-rank data reconstructs exactly") {
    Rng rng(17);
    const int n = 30, p = 12, r = 3;
    // rank-3 data: random combinations of 3 fixed directions
    const std::vector<double> basis = random_matrix(rng, r, p);
    std::vector<double> X(static_cast<std::size_t>(n) * p, 0.0);
    for (int i = 0; i < n; ++i)
        for (int k = 0; k < r; ++k) {
            const double c = rng.normal();
            for (int j = 0; j < p; ++j) X[i * p + j] += c * basis[k * p + j];
        }
    const Projector proj = fit_projector(X, n, p, r);
    for (int i = 0; i < n; ++i) {
        std::vector<double> row(X.begin() + i * p, X.begin() + (i + 1) * p);
        const std::vector<double> rec = proj.lift(proj.project(row));
        for (int j = 0; j < p; ++j) CHECK(std::abs(rec[j] - row[j]) < 1e-10);
    }
}

TEST_CASE("projector: Eckart-Young tail energy identity") {
    Rng rng(23);
    const int n = 25, p = 10, r = 4;
    const std::vector<double> X = random_matrix(rng, n, p);
    const Projector proj = fit_projector(X, n, p, r);

    double rec_err = 0.0;
    for (int i = 0; i < n; ++i) {
        std::vector<double> row(X.begin() + i * p, X.begin() + (i + 1) * p);
        const std::vector<double> rec = proj.lift(proj.project(row));
        for (int j = 0; j < p; ++j) rec_err += (rec[j] - row[j]) * (rec[j] - row[j]);
    }
    double tail = 0.0;
    for (std::size_t k = r; k < proj.singular_values.size(); ++k)
        tail += proj.singular_values[k] * proj.singular_values[k];
    CHECK(rec_err == doctest::Approx(tail).epsilon(1e-10));
}

TEST_CASE("projector: energy identity over the full spectrum") {
    Rng rng(29);
    const int n = 18, p = 9;
    const std::vector<double> X = random_matrix(rng, n, p);
    const Projector proj = fit_projector(X, n, p, 5);
    double energy = 0.0;
    for (double s : proj.singular_values) energy += s * s;
    CHECK(energy == doctest::Approx(frobenius_sq(X)).epsilon(1e-10));
}

TEST_CASE("projector: orthonormal rows ordered by singular value") {
    Rng rng(31);
    const int n = 40, p = 15, r = 6;
    const std::vector<double> X = random_matrix(rng, n, p);
    const Projector proj = fit_projector(X, n, p, r);

    for (int a = 0; a < r; ++a)
        for (int b = 0; b < r; ++b) {
            double dot = 0.0;
            for (int j = 0; j < p; ++j) dot += proj.basis[a * p + j] * proj.basis[b * p + j];
            CHECK(std::abs(dot - (a == b ? 1.0 : 0.0)) < 1e-10);
        }
    for (std::size_t k = 1; k < proj.singular_values.size(); ++k)
        CHECK(proj.singular_values[k] <= proj.singular_values[k - 1] + 1e-14);
}

TEST_CASE("projector: deterministic sign canonicalization") {
    Rng rng(37);
    const int n = 22, p = 8, r = 4;
    const std::vector<double> X = random_matrix(rng, n, p);
    const Projector a = fit_projector(X, n, p, r);
    const Projector b = fit_projector(X, n, p, r);
    CHECK(a.basis == b.basis);
    for (int i = 0; i < r; ++i) {
        double best = 0.0;
        int arg = 0;
        for (int j = 0; j < p; ++j)
            if (std::abs(a.basis[i * p + j]) > best) {
                best = std::abs(a.basis[i * p + j]);
                arg = j;
            }
        CHECK(a.basis[i * p + arg] > 0.0);
    }
}

TEST_CASE("project/lift identities") {
    Rng rng(41);
    const int n = 16, p = 11, r = 5;
    const std::vector<double> X = random_matrix(rng, n, p);
    const Projector proj = fit_projector(X, n, p, r);

    SUBCASE("project after lift is the identity on the reduced space") {
        std::vector<double> z(r);
        for (double& v : z) v = rng.normal();
        const std::vector<double> back = proj.project(proj.lift(z));
        for (int k = 0; k < r; ++k) CHECK(std::abs(back[k] - z[k]) < 1e-12);
    }

    SUBCASE("vectors orthogonal to the span project to zero") {
        // Gram-Schmidt a random vector against the basis rows
        std::vector<double> v(p);
        for (double& x : v) x = rng.normal();
        for (int i = 0; i < r; ++i) {
            double dot = 0.0;
            for (int j = 0; j < p; ++j) dot += v[j] * proj.basis[i * p + j];
            for (int j = 0; j < p; ++j) v[j] -= dot * proj.basis[i * p + j];
        }
        const std::vector<double> rec = proj.lift(proj.project(v));
        for (int j = 0; j < p; ++j) CHECK(std::abs(rec[j]) < 1e-10);
    }

    SUBCASE("dimension mismatches are rejected") {
        CHECK_THROWS_AS(proj.project(std::vector<double>(p + 1, 0.0)), std::invalid_argument);
        CHECK_THROWS_AS(proj.lift(std::vector<double>(r + 1, 0.0)), std::invalid_argument);
    }
}

TEST_CASE("projector rejects out-of-range r") {
    Rng rng(43);
    const std::vector<double> X = random_matrix(rng, 6, 4);
    CHECK_THROWS_AS(fit_projector(X, 6, 4, 0), std::invalid_argument);
    CHECK_THROWS_AS(fit_projector(X, 6, 4, 5), std::invalid_argument);
}
