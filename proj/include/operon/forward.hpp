#pragma once

#include <memory>

#include "operon/assembly.hpp"
#include "operon/grf.hpp"
#include "operon/mesh.hpp"

namespace operon {

/// Poisson problem data: heat source f, flux q on the right edge, homogeneous
/// Dirichlet on the rest of the boundary (x1 < L1).
struct PoissonConfig {
    ScalarFn f;
    ScalarFn q;
    // Overridable for manufactured-solution tests; defaults to x1 < L1 - tol.
    std::function<bool(double, double)> dirichlet;

    static PoissonConfig defaults(const Mesh& mesh);
};

/// Elasticity problem data: clamped left edge, traction t on the right edge,
/// remaining edges traction-free.
struct ElasticityConfig {
    double nu = 0.25;
    VectorFn body_force;
    VectorFn traction;
    std::function<bool(double, double)> clamped;
    std::function<bool(double, double)> traction_edge;

    static ElasticityConfig defaults(const Mesh& mesh);
};

NodalField poisson_solve(const Mesh& mesh, const PoissonConfig& cfg, const NodalField& m);
NodalField elasticity_solve(const Mesh& mesh, const ElasticityConfig& cfg, const NodalField& youngs);

/// Parametric forward solver F: m -> u with the lognormal transform folded in
/// behind a flag. Deterministic given inputs; reassembles only the
/// parameter-dependent operator on each call.
class ForwardModel {
public:
    virtual ~ForwardModel() = default;

    // When `transform` is set the input is the Gaussian field w and the
    // lognormal map is applied first; otherwise it is already the physical m.
    NodalField solve_fwd(const NodalField& w_or_m, bool transform) const;

    NodalField sample_prior(Rng& rng, bool transform) const;

    virtual NodalField solve(const NodalField& m) const = 0;
    virtual int output_components() const = 0;
    virtual const char* problem_tag() const = 0;

    const Mesh& mesh() const { return *mesh_; }
    const GaussianPrior& prior() const { return *prior_; }
    std::shared_ptr<GaussianPrior> prior_ptr() const { return prior_; }
    const TransformParams& transform_params() const { return transform_; }

protected:
    ForwardModel(std::shared_ptr<const Mesh> mesh, std::shared_ptr<GaussianPrior> prior,
                 TransformParams transform)
        : mesh_(std::move(mesh)), prior_(std::move(prior)), transform_(transform) {}

    std::shared_ptr<const Mesh> mesh_;
    std::shared_ptr<GaussianPrior> prior_;
    TransformParams transform_;
};

class PoissonModel final : public ForwardModel {
public:
    PoissonModel(std::shared_ptr<const Mesh> mesh, std::shared_ptr<GaussianPrior> prior,
                 TransformParams transform, PoissonConfig cfg);
    NodalField solve(const NodalField& m) const override;
    int output_components() const override { return 1; }
    const char* problem_tag() const override { return "poisson"; }

private:
    PoissonConfig cfg_;
};

class ElasticityModel final : public ForwardModel {
public:
    ElasticityModel(std::shared_ptr<const Mesh> mesh, std::shared_ptr<GaussianPrior> prior,
                    TransformParams transform, ElasticityConfig cfg);
    NodalField solve(const NodalField& m) const override;
    int output_components() const override { return 2; }
    const char* problem_tag() const override { return "linear_elasticity"; }

private:
    ElasticityConfig cfg_;
};

/// Factory keyed by the problem selector string "poisson" | "linear_elasticity".
std::shared_ptr<ForwardModel> make_forward_model(const std::string& problem,
                                                 std::shared_ptr<const Mesh> mesh,
                                                 std::shared_ptr<GaussianPrior> prior,
                                                 TransformParams transform);

} // namespace operon
