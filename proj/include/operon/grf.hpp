#pragma once

#include <cstdint>
#include <memory>

#include "operon/mesh.hpp"
#include "operon/rng.hpp"
#include "operon/sparse.hpp"

namespace operon {

/// Pointwise lognormal map m = alpha_m * exp(w) + beta_m shared by both model
/// problems; keeps the physical parameter strictly positive.
struct TransformParams {
    double alpha_m = 1.0;
    double beta_m = 0.0;
};

NodalField transform_lognormal(const NodalField& w, const TransformParams& p);

/// Gaussian random field prior with covariance the squared inverse of the
/// elliptic operator a_c*K(b_c) + c_c*M (natural boundary condition). Sampling
/// solves A v = M s against i.i.d. standard-normal nodal noise s.
class GaussianPrior {
public:
    GaussianPrior(const Mesh& mesh, double a_c, const NodalField& b_c, double c_c,
                  NodalField mean, std::uint64_t seed);

    struct Sample {
        NodalField w;
        std::vector<double> noise;  // the s vector; needed for log_prior
    };

    Sample sample(Rng& rng) const;
    // w = mean + A^-1 (M s) for a given noise vector; sample() draws s and
    // delegates here.
    NodalField from_noise(const std::vector<double>& s) const;
    // Gaussian log-density of the noise vector up to a constant: -(1/2) s.M.s.
    // Diagnostic only; never enters pCN acceptance.
    double log_prior(const std::vector<double>& s) const;

    const Mesh& mesh() const { return mesh_; }
    const NodalField& mean() const { return mean_; }
    const SparseOperator& op() const { return A_; }
    const SparseOperator& mass() const { return M_; }
    double a_c() const { return a_c_; }
    double c_c() const { return c_c_; }
    const NodalField& b_c() const { return b_c_; }
    std::uint64_t seed() const { return seed_; }

private:
    const Mesh& mesh_;
    double a_c_, c_c_;
    NodalField b_c_;
    NodalField mean_;
    std::uint64_t seed_;
    SparseOperator A_;
    SparseOperator M_;
};

std::shared_ptr<GaussianPrior> build_prior(const Mesh& mesh, double a_c, double b_c, double c_c,
                                           NodalField mean, std::uint64_t seed);
std::shared_ptr<GaussianPrior> build_prior(const Mesh& mesh, double a_c, const NodalField& b_c,
                                           double c_c, NodalField mean, std::uint64_t seed);

} // namespace operon
