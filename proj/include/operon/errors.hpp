#pragma once

#include <stdexcept>
#include <string>

namespace operon {

// Iterative solver did not reach the requested residual within the cap.
class solver_failure : public std::runtime_error {
public:
    solver_failure(const std::string& what, double residual)
        : std::runtime_error(what), residual_(residual) {}
    double residual() const { return residual_; }

private:
    double residual_;
};

// Query point lies outside the mesh beyond the snap tolerance.
class out_of_domain : public std::runtime_error {
public:
    out_of_domain(double x1, double x2)
        : std::runtime_error("point (" + std::to_string(x1) + ", " + std::to_string(x2) +
                             ") is outside the mesh domain"),
          x1_(x1), x2_(x2) {}
    double x1() const { return x1_; }
    double x2() const { return x2_; }

private:
    double x1_, x2_;
};

// Configuration is structurally valid but numerically unusable (e.g. indefinite prior operator).
class invalid_configuration : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace operon
