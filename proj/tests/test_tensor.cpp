#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <functional>

#include "operon/rng.hpp"
#include "operon/tensor.hpp"

using namespace operon;

namespace {

void zero_grads(std::vector<Tensor>& params) {
    for (Tensor& p : params) std::fill(p.grad().begin(), p.grad().end(), 0.0);
}

// central-difference check of every parameter entry, step 1e-6
double max_rel_grad_err(const std::function<Tensor()>& loss_fn, std::vector<Tensor> params,
                        double h = 1e-6) {
    zero_grads(params);
    backward(loss_fn());
    std::vector<std::vector<double>> analytic;
    for (Tensor& p : params) analytic.push_back(p.grad());

    double worst = 0.0;
    for (std::size_t pi = 0; pi < params.size(); ++pi) {
        auto& vals = params[pi].values();
        for (std::size_t k = 0; k < vals.size(); ++k) {
            const double keep = vals[k];
            vals[k] = keep + h;
            const double f_plus = loss_fn().item();
            vals[k] = keep - h;
            const double f_minus = loss_fn().item();
            vals[k] = keep;
            const double fd = (f_plus - f_minus) / (2.0 * h);
            const double g = analytic[pi][k];
            const double scale = std::max(std::abs(fd), std::abs(g));
            if (scale < 1e-10) continue;
            worst = std::max(worst, std::abs(fd - g) / scale);
        }
    }
    return worst;
}

std::vector<double> randn(Rng& rng, std::size_t n, double scale = 1.0) {
    std::vector<double> v(n);
    for (double& x : v) x = scale * rng.normal();
    return v;
}

} // namespace

TEST_CASE("sum gradient is one everywhere") {
    Tensor x = Tensor::vector({1.0, -2.0, 3.0}, true);
    backward(sum(x));
    for (double g : x.grad()) CHECK(g == 1.0);
}

TEST_CASE("mse basics") {
    Tensor pred = Tensor::vector({1.0, 2.0, 3.0}, true);

    SUBCASE("zero at the target") {
        const Tensor loss = mse(pred, {1.0, 2.0, 3.0});
        CHECK(loss.item() == 0.0);
        backward(loss);
        for (double g : pred.grad()) CHECK(g == 0.0);
    }

    SUBCASE("constant offset of two gives four") {
        CHECK(mse(pred, {-1.0, 0.0, 1.0}).item() == doctest::Approx(4.0).epsilon(1e-15));
    }

    SUBCASE("matches a direct summation oracle") {
        Rng rng(2);
        const std::vector<double> p = randn(rng, 64);
        const std::vector<double> t = randn(rng, 64);
        Tensor pt = Tensor::vector(std::vector<double>(p));
        double oracle = 0.0;
        for (int i = 0; i < 64; ++i) oracle += (p[i] - t[i]) * (p[i] - t[i]);
        oracle /= 64.0;
        CHECK(mse(pt, t).item() == doctest::Approx(oracle).epsilon(1e-14));
    }

    SUBCASE("shape mismatch throws") {
        CHECK_THROWS_AS(mse(pred, {1.0}), std::invalid_argument);
    }
}

TEST_CASE("backward requires a scalar loss") {
    Tensor x = Tensor::vector({1.0, 2.0}, true);
    CHECK_THROWS_AS(backward(add(x, x)), std::invalid_argument);
}

TEST_CASE("elementwise op values") {
    Tensor x = Tensor::vector({-1.0, 0.0, 2.0});
    const Tensor r = relu(x);
    CHECK(r.values() == std::vector<double>{0.0, 0.0, 2.0});
    const Tensor s = scale(x, -2.0);
    CHECK(s.values() == std::vector<double>{2.0, -0.0, -4.0});
    const Tensor g = gelu(Tensor::vector({0.0}));
    CHECK(g.values()[0] == 0.0);
    // gelu(1) = 0.5 * (1 + erf(1/sqrt 2)) = Phi(1)
    const Tensor g1 = gelu(Tensor::vector({1.0}));
    CHECK(g1.values()[0] == doctest::Approx(0.8413447460685429).epsilon(1e-12));
}

TEST_CASE("gradients match finite differences: dense ops") {
    Rng rng(11);

    SUBCASE("linear + relu chain") {
        Tensor W = Tensor::matrix(randn(rng, 12, 0.7), 4, 3, true);
        Tensor b = Tensor::vector(randn(rng, 4, 0.3), true);
        const std::vector<double> x = randn(rng, 6, 1.1);
        const std::vector<double> t = randn(rng, 8);
        auto loss = [&]() {
            return mse(relu(linear(Tensor::matrix(std::vector<double>(x), 2, 3), W, b)), t);
        };
        CHECK(max_rel_grad_err(loss, {W, b}) < 1e-5);
    }

    SUBCASE("gelu chain") {
        Tensor W = Tensor::matrix(randn(rng, 10, 0.8), 5, 2, true);
        Tensor b = Tensor::vector(randn(rng, 5, 0.2), true);
        const std::vector<double> x = randn(rng, 4);
        const std::vector<double> t = randn(rng, 10);
        auto loss = [&]() {
            return mse(gelu(linear(Tensor::matrix(std::vector<double>(x), 2, 2), W, b)), t);
        };
        CHECK(max_rel_grad_err(loss, {W, b}) < 1e-5);
    }

    SUBCASE("matmul_nt") {
        Tensor A = Tensor::matrix(randn(rng, 6, 0.9), 2, 3, true);
        Tensor B = Tensor::matrix(randn(rng, 12, 0.9), 4, 3, true);
        const std::vector<double> t = randn(rng, 8);
        auto loss = [&]() { return mse(matmul_nt(A, B), t); };
        CHECK(max_rel_grad_err(loss, {A, B}) < 1e-5);
    }

    SUBCASE("add and scale") {
        Tensor a = Tensor::vector(randn(rng, 5), true);
        Tensor b = Tensor::vector(randn(rng, 5), true);
        const std::vector<double> t = randn(rng, 5);
        auto loss = [&]() { return mse(scale(add(a, b), 1.7), t); };
        CHECK(max_rel_grad_err(loss, {a, b}) < 1e-5);
    }
}

TEST_CASE("dot_combine: hand value and gradients") {
    SUBCASE("N_tr = 1 arithmetic: 2*3 + 1 = 7") {
        Tensor branch = Tensor::matrix({2.0}, 1, 1, true);
        Tensor trunk = Tensor::matrix({3.0}, 1, 1, true);
        Tensor bias = Tensor::vector({1.0}, true);
        const Tensor out = dot_combine(branch, trunk, bias, 1);
        CHECK(out.values()[0] == 7.0);
    }

    SUBCASE("two components use branch blocks with shared trunk") {
        // branch = [a1 a2 | b1 b2], trunk rows phi(x); component blocks ordered
        Tensor branch = Tensor::matrix({1.0, 2.0, 3.0, 4.0}, 1, 4, true);
        Tensor trunk = Tensor::matrix({10.0, 20.0, 30.0, 40.0}, 2, 2, true);  // 2 points
        Tensor bias = Tensor::vector({0.5, -0.5}, true);
        const Tensor out = dot_combine(branch, trunk, bias, 2);
        // component 0 at point 0: 1*10 + 2*20 + 0.5
        CHECK(out.values()[0] == doctest::Approx(50.5));
        // component 0 at point 1: 1*30 + 2*40 + 0.5
        CHECK(out.values()[1] == doctest::Approx(110.5));
        // component 1 at point 0: 3*10 + 4*20 - 0.5
        CHECK(out.values()[2] == doctest::Approx(109.5));
        CHECK(out.values()[3] == doctest::Approx(249.5));
    }

    SUBCASE("gradients") {
        Rng rng(13);
        Tensor branch = Tensor::matrix(randn(rng, 3 * 4, 0.8), 3, 4, true);
        Tensor trunk = Tensor::matrix(randn(rng, 5 * 2, 0.8), 5, 2, true);
        Tensor bias = Tensor::vector(randn(rng, 2, 0.5), true);
        const std::vector<double> t = randn(rng, 3 * 10);
        auto loss = [&]() { return mse(dot_combine(branch, trunk, bias, 2), t); };
        CHECK(max_rel_grad_err(loss, {branch, trunk, bias}) < 1e-5);
    }
}

TEST_CASE("gradients match finite differences: grid channel ops") {
    Rng rng(19);
    const int B = 2, n1 = 3, n2 = 4;

    SUBCASE("lift_channels") {
        Tensor x = Tensor::from_values(randn(rng, B * n1 * n2 * 3), {B, n1, n2, 3}, 4, true);
        Tensor W = Tensor::matrix(randn(rng, 5 * 3, 0.6), 5, 3, true);
        Tensor b = Tensor::vector(randn(rng, 5, 0.2), true);
        const std::vector<double> t = randn(rng, B * 5 * n1 * n2);
        auto loss = [&]() { return mse(lift_channels(x, W, b), t); };
        CHECK(max_rel_grad_err(loss, {x, W, b}) < 1e-5);
    }

    SUBCASE("pointwise_conv") {
        Tensor z = Tensor::from_values(randn(rng, B * 3 * n1 * n2), {B, 3, n1, n2}, 4, true);
        Tensor W = Tensor::matrix(randn(rng, 2 * 3, 0.6), 2, 3, true);
        Tensor b = Tensor::vector(randn(rng, 2, 0.2), true);
        const std::vector<double> t = randn(rng, B * 2 * n1 * n2);
        auto loss = [&]() { return mse(pointwise_conv(z, W, b), t); };
        CHECK(max_rel_grad_err(loss, {z, W, b}) < 1e-5);
    }

    SUBCASE("project_channels") {
        Tensor z = Tensor::from_values(randn(rng, B * 4 * n1 * n2), {B, 4, n1, n2}, 4, true);
        Tensor W = Tensor::matrix(randn(rng, 2 * 4, 0.6), 2, 4, true);
        Tensor b = Tensor::vector(randn(rng, 2, 0.2), true);
        const std::vector<double> t = randn(rng, B * n1 * n2 * 2);
        auto loss = [&]() { return mse(project_channels(z, W, b), t); };
        CHECK(max_rel_grad_err(loss, {z, W, b}) < 1e-5);
    }
}

TEST_CASE("diamond graphs accumulate gradients") {
    Tensor x = Tensor::vector({2.0}, true);
    // loss = x + x -> dx = 2
    backward(sum(add(x, x)));
    CHECK(x.grad()[0] == 2.0);
}

TEST_CASE("no NaN from finite inputs through every op") {
    Rng rng(23);
    Tensor x = Tensor::from_values(randn(rng, 2 * 2 * 3 * 3, 50.0), {2, 2, 3, 3}, 4, true);
    for (double v : gelu(x).values()) CHECK(std::isfinite(v));
    for (double v : relu(x).values()) CHECK(std::isfinite(v));
    for (double v : scale(x, 1e30).values()) CHECK(std::isfinite(v));
}
