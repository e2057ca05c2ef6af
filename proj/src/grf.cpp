#include "operon/grf.hpp"

#include <cmath>
#include <stdexcept>

#include "operon/assembly.hpp"
#include "operon/errors.hpp"

namespace operon {

NodalField transform_lognormal(const NodalField& w, const TransformParams& p) {
    if (w.components != 1) throw std::invalid_argument("transform_lognormal: field must be scalar");
    if (!(p.alpha_m > 0.0)) throw std::invalid_argument("transform_lognormal: alpha_m must be > 0");
    if (p.beta_m < 0.0) throw std::invalid_argument("transform_lognormal: beta_m must be >= 0");
    NodalField m;
    m.components = 1;
    m.values.resize(w.values.size());
    for (std::size_t i = 0; i < w.values.size(); ++i) {
        if (w.values[i] > 700.0) throw std::range_error("transform_lognormal: exp overflow (w > 700)");
        m.values[i] = p.alpha_m * std::exp(w.values[i]) + p.beta_m;
    }
    return m;
}

GaussianPrior::GaussianPrior(const Mesh& mesh, double a_c, const NodalField& b_c, double c_c,
                             NodalField mean, std::uint64_t seed)
    : mesh_(mesh), a_c_(a_c), c_c_(c_c), b_c_(b_c), mean_(std::move(mean)), seed_(seed) {
    if (mean_.components != 1) throw std::invalid_argument("GaussianPrior: mean must be scalar");
    if (mean_.node_count() != mesh.node_count())
        throw std::invalid_argument("GaussianPrior: mean length does not match mesh");
    if (a_c < 0.0 || c_c < 0.0 || (a_c == 0.0 && c_c == 0.0))
        throw invalid_configuration("GaussianPrior: need a_c > 0 or c_c > 0");
    if (a_c > 0.0)
        for (double v : b_c_.values)
            if (v < 0.0) throw invalid_configuration("GaussianPrior: b_c must be >= 0");

    M_ = assemble_mass(mesh);
    if (a_c > 0.0) {
        A_ = assemble_stiffness(mesh, b_c_);
        for (double& v : A_.values) v *= a_c;
        // both matrices are assembled on the identical element stencil
        for (int k = 0; k < A_.nnz(); ++k) A_.values[k] += c_c * M_.values[k];
    } else {
        A_ = M_;
        for (double& v : A_.values) v *= c_c;
    }
}

GaussianPrior::Sample GaussianPrior::sample(Rng& rng) const {
    const int n = mesh_.node_count();
    Sample out;
    out.noise.resize(n);
    for (int i = 0; i < n; ++i) out.noise[i] = rng.normal();
    out.w = from_noise(out.noise);
    return out;
}

NodalField GaussianPrior::from_noise(const std::vector<double>& s) const {
    const int n = mesh_.node_count();
    if (static_cast<int>(s.size()) != n) throw std::invalid_argument("GaussianPrior: noise length mismatch");
    const std::vector<double> rhs = M_.multiply(s);
    std::vector<double> v = solve_spd(A_, rhs);
    for (int i = 0; i < n; ++i) v[i] += mean_.values[i];
    return NodalField(std::move(v), 1);
}

double GaussianPrior::log_prior(const std::vector<double>& s) const {
    const std::vector<double> Ms = M_.multiply(s);
    double q = 0.0;
    for (std::size_t i = 0; i < s.size(); ++i) q += s[i] * Ms[i];
    return -0.5 * q;
}

std::shared_ptr<GaussianPrior> build_prior(const Mesh& mesh, double a_c, double b_c, double c_c,
                                           NodalField mean, std::uint64_t seed) {
    return std::make_shared<GaussianPrior>(mesh, a_c, NodalField::constant(b_c, mesh.node_count()),
                                           c_c, std::move(mean), seed);
}

std::shared_ptr<GaussianPrior> build_prior(const Mesh& mesh, double a_c, const NodalField& b_c,
                                           double c_c, NodalField mean, std::uint64_t seed) {
    return std::make_shared<GaussianPrior>(mesh, a_c, b_c, c_c, std::move(mean), seed);
}

} // namespace operon
