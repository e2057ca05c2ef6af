#include "operon/forward.hpp"

#include <cmath>
#include <stdexcept>

#include "operon/errors.hpp"
#include "operon/sparse.hpp"

namespace operon {

namespace {

constexpr double kBoundaryTol = 1e-10;

std::vector<int> boundary_nodes_where(const Mesh& mesh,
                                      const std::function<bool(double, double)>& pred) {
    std::vector<int> out;
    for (int n = 0; n < mesh.node_count(); ++n) {
        if (mesh.boundary_mask[n] == 0) continue;
        if (pred(mesh.nodes[n][0], mesh.nodes[n][1])) out.push_back(n);
    }
    return out;
}

} // namespace

PoissonConfig PoissonConfig::defaults(const Mesh& mesh) {
    PoissonConfig cfg;
    cfg.f = [](double x1, double x2) { return 1000.0 * (1.0 - x2) * x2 * (1.0 - x1) * (1.0 - x1); };
    cfg.q = [](double, double x2) { return 50.0 * std::sin(5.0 * M_PI * x2); };
    const double L1 = mesh.L1;
    cfg.dirichlet = [L1](double x1, double) { return x1 < L1 - kBoundaryTol; };
    return cfg;
}

ElasticityConfig ElasticityConfig::defaults(const Mesh& mesh) {
    ElasticityConfig cfg;
    cfg.nu = 0.25;
    cfg.body_force = [](double, double) { return std::array<double, 2>{0.0, 0.0}; };
    cfg.traction = [](double, double) { return std::array<double, 2>{0.0, 10.0}; };
    const double L1 = mesh.L1;
    cfg.clamped = [](double x1, double) { return x1 < kBoundaryTol; };
    cfg.traction_edge = [L1](double x1, double) { return x1 > L1 - kBoundaryTol; };
    return cfg;
}

NodalField poisson_solve(const Mesh& mesh, const PoissonConfig& cfg, const NodalField& m) {
    if (m.components != 1) throw std::invalid_argument("poisson_solve: m must be scalar");
    for (double v : m.values)
        if (!(v > 0.0)) throw std::invalid_argument("poisson_solve: diffusivity must be positive");

    SparseOperator K = assemble_stiffness(mesh, m);
    std::vector<double> rhs = assemble_volume_load(mesh, cfg.f);
    // flux enters on the complement of the Dirichlet set (the right edge)
    const auto neumann = [&cfg](double x1, double x2) { return !cfg.dirichlet(x1, x2); };
    const std::vector<double> qload = assemble_boundary_load(mesh, cfg.q, neumann);
    for (std::size_t i = 0; i < rhs.size(); ++i) rhs[i] += qload[i];

    const std::vector<int> fixed = boundary_nodes_where(mesh, cfg.dirichlet);
    apply_dirichlet(K, rhs, fixed, std::vector<double>(fixed.size(), 0.0));
    return NodalField(solve_spd(K, rhs), 1);
}

NodalField elasticity_solve(const Mesh& mesh, const ElasticityConfig& cfg, const NodalField& youngs) {
    SparseOperator K = assemble_elasticity_stiffness(mesh, youngs, cfg.nu);
    std::vector<double> rhs = assemble_volume_load_vec(mesh, cfg.body_force);
    const std::vector<double> tload = assemble_boundary_load_vec(mesh, cfg.traction, cfg.traction_edge);
    for (std::size_t i = 0; i < rhs.size(); ++i) rhs[i] += tload[i];

    const std::vector<int> clamped_nodes = boundary_nodes_where(mesh, cfg.clamped);
    std::vector<int> fixed;
    fixed.reserve(2 * clamped_nodes.size());
    const int n = mesh.node_count();
    for (int node : clamped_nodes) fixed.push_back(node);
    for (int node : clamped_nodes) fixed.push_back(n + node);
    apply_dirichlet(K, rhs, fixed, std::vector<double>(fixed.size(), 0.0));
    return NodalField(solve_spd(K, rhs), 2);
}

NodalField ForwardModel::solve_fwd(const NodalField& w_or_m, bool transform) const {
    if (transform) return solve(transform_lognormal(w_or_m, transform_));
    return solve(w_or_m);
}

NodalField ForwardModel::sample_prior(Rng& rng, bool transform) const {
    const NodalField w = prior_->sample(rng).w;
    if (transform) return transform_lognormal(w, transform_);
    return w;
}

PoissonModel::PoissonModel(std::shared_ptr<const Mesh> mesh, std::shared_ptr<GaussianPrior> prior,
                           TransformParams transform, PoissonConfig cfg)
    : ForwardModel(std::move(mesh), std::move(prior), transform), cfg_(std::move(cfg)) {}

NodalField PoissonModel::solve(const NodalField& m) const { return poisson_solve(*mesh_, cfg_, m); }

ElasticityModel::ElasticityModel(std::shared_ptr<const Mesh> mesh,
                                 std::shared_ptr<GaussianPrior> prior, TransformParams transform,
                                 ElasticityConfig cfg)
    : ForwardModel(std::move(mesh), std::move(prior), transform), cfg_(std::move(cfg)) {}

NodalField ElasticityModel::solve(const NodalField& m) const {
    return elasticity_solve(*mesh_, cfg_, m);
}

std::shared_ptr<ForwardModel> make_forward_model(const std::string& problem,
                                                 std::shared_ptr<const Mesh> mesh,
                                                 std::shared_ptr<GaussianPrior> prior,
                                                 TransformParams transform) {
    if (problem == "poisson")
        return std::make_shared<PoissonModel>(mesh, std::move(prior), transform,
                                              PoissonConfig::defaults(*mesh));
    if (problem == "linear_elasticity")
        return std::make_shared<ElasticityModel>(mesh, std::move(prior), transform,
                                                 ElasticityConfig::defaults(*mesh));
    throw std::invalid_argument("make_forward_model: unknown problem '" + problem + "'");
}

} // namespace operon
