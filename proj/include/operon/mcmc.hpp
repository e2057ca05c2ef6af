#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "operon/forward.hpp"
#include "operon/grf.hpp"
#include "operon/mesh.hpp"
#include "operon/rng.hpp"

namespace operon {

/// Gridded observation of the state: a uniform grid of points over the
/// domain, the data vector o (component-blocked for vector states), and the
/// noise standard deviation.
struct Observation {
    std::vector<std::array<double, 2>> grid_points;
    std::vector<double> o;
    double sigma_o = 0.0;
    int components = 1;

    int size() const { return static_cast<int>(o.size()); }
};

/// Interpolates the state at the observation grid; block layout (all points
/// of component 0, then component 1).
std::vector<double> observe(const NodalField& u, const Observation& obs, const Mesh& mesh);

/// Solves the forward problem at the synthetic truth, interpolates onto a
/// uniform grid_n x grid_n grid (endpoints included), and sets
/// sigma_o = noise_fraction * mean(o). Data stored noiseless.
Observation make_observation(const ForwardModel& model, const NodalField& true_w,
                             double noise_fraction, int grid_n = 16);

/// Likelihood potential 0.5 * ||u_obs - o||^2 / sigma_o^2 at the state u.
double potential_of_state(const std::vector<double>& u_obs, const Observation& obs);

/// pCN proposal v = beta*xi + sqrt(1-beta^2)*w with xi a fresh (mean-zero)
/// prior sample.
NodalField pcn_propose(const NodalField& current_w, const NodalField& xi, double beta);

/// Accept iff phi_current - phi_proposed > log(U), U ~ Uniform(0,1].
bool pcn_accept(double phi_current, double phi_proposed, Rng& rng);

struct ChainConfig {
    int k_max = 10500;
    int k_burn = 500;
    double beta = 0.2;
    std::uint64_t seed = 0;
    std::string forward = "fem";  // metadata tag only
    int checkpoint_every = 100;
};

struct ChainResult {
    NodalField posterior_mean_w;
    std::vector<double> costs;          // per iteration
    std::vector<std::uint8_t> accepted; // per iteration
    std::vector<double> log_priors;     // diagnostic: log-prior of each fresh draw
    double acceptance_rate = 0.0;
    int retained = 0;
};

/// Forward map w -> u used inside the chain. The FEM path applies the
/// lognormal transform internally; surrogate callers wrap transform+predict.
using ChainForward = std::function<NodalField(const NodalField& w)>;

/// pCN chain: initial state from the prior, k_max iterations, first k_burn
/// discarded, posterior mean = average of retained samples. When `trace_dir`
/// is nonempty the trace is persisted incrementally (meta.json, samples.bin,
/// chain.csv); on repeated forward failure the partial trace is flushed
/// before the error propagates.
ChainResult run_chain(const ChainConfig& cfg, const ChainForward& fwd, const GaussianPrior& prior,
                      const Observation& obs, const Mesh& mesh, const std::string& trace_dir = "");

/// FEM-truth forward for run_chain (transform applied inside).
ChainForward fem_forward(const ForwardModel& model);

} // namespace operon
