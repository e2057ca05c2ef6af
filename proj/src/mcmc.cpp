#include "operon/mcmc.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "operon/errors.hpp"
#include "operon/io.hpp"

namespace operon {

std::vector<double> observe(const NodalField& u, const Observation& obs, const Mesh& mesh) {
    return interpolate_at_points(mesh, u, obs.grid_points);
}

Observation make_observation(const ForwardModel& model, const NodalField& true_w,
                             double noise_fraction, int grid_n) {
    const Mesh& mesh = model.mesh();
    Observation obs;
    obs.components = model.output_components();
    obs.grid_points.reserve(static_cast<std::size_t>(grid_n) * grid_n);
    for (int i = 0; i < grid_n; ++i)
        for (int j = 0; j < grid_n; ++j)
            obs.grid_points.push_back({i * mesh.L1 / (grid_n - 1), j * mesh.L2 / (grid_n - 1)});

    const NodalField u_true = model.solve_fwd(true_w, /*transform=*/true);
    obs.o = observe(u_true, obs, mesh);
    double mean = 0.0;
    for (double v : obs.o) mean += v;
    mean /= static_cast<double>(obs.o.size());
    obs.sigma_o = noise_fraction * mean;
    if (!(obs.sigma_o > 0.0))
        throw invalid_configuration("make_observation: sigma_o = noise_fraction * mean(o) is not positive");
    return obs;
}

double potential_of_state(const std::vector<double>& u_obs, const Observation& obs) {
    if (u_obs.size() != obs.o.size()) throw std::invalid_argument("potential: observation size mismatch");
    double sq = 0.0;
    for (std::size_t i = 0; i < u_obs.size(); ++i) {
        const double d = u_obs[i] - obs.o[i];
        sq += d * d;
    }
    return 0.5 * sq / (obs.sigma_o * obs.sigma_o);
}

NodalField pcn_propose(const NodalField& current_w, const NodalField& xi, double beta) {
    // beta = 0 (proposal = current) is admitted here; chains require beta > 0
    if (beta < 0.0 || beta > 1.0) throw std::invalid_argument("pcn_propose: need 0 <= beta <= 1");
    NodalField v;
    v.components = current_w.components;
    v.values.resize(current_w.values.size());
    const double keep = std::sqrt(1.0 - beta * beta);
    for (std::size_t i = 0; i < v.values.size(); ++i)
        v.values[i] = beta * xi.values[i] + keep * current_w.values[i];
    return v;
}

bool pcn_accept(double phi_current, double phi_proposed, Rng& rng) {
    const double a = phi_current - phi_proposed;
    return a > std::log(rng.uniform_open());
}

ChainForward fem_forward(const ForwardModel& model) {
    return [&model](const NodalField& w) { return model.solve_fwd(w, /*transform=*/true); };
}

namespace {

class TraceWriter {
public:
    TraceWriter(const std::string& dir, const ChainConfig& cfg, const Mesh& mesh,
                const Observation& obs)
        : enabled_(!dir.empty()), dir_(dir) {
        if (!enabled_) return;
        std::filesystem::create_directories(dir);
        nlohmann::json meta;
        meta["format_version"] = "1";
        meta["k_max"] = cfg.k_max;
        meta["k_burn"] = cfg.k_burn;
        meta["beta"] = cfg.beta;
        meta["seed"] = cfg.seed;
        meta["forward"] = cfg.forward;
        meta["sigma_o"] = obs.sigma_o;
        meta["d_o"] = obs.size();
        meta["mesh"] = {{"nx", mesh.nx}, {"ny", mesh.ny}, {"L1", mesh.L1}, {"L2", mesh.L2}};
        meta["sample_dim"] = mesh.node_count();
        write_text(dir_ + "/meta.json", meta.dump(2) + "\n");
        samples_.open(dir_ + "/samples.bin", std::ios::binary | std::ios::trunc);
        csv_.open(dir_ + "/chain.csv", std::ios::trunc);
        csv_ << "iteration,cost,accepted,running_acceptance_rate\n";
        csv_.precision(17);
    }

    void row(int iteration, double cost, bool accepted, double rate) {
        if (!enabled_) return;
        csv_ << iteration << "," << cost << "," << (accepted ? 1 : 0) << "," << rate << "\n";
    }

    void retained_sample(const std::vector<double>& w) {
        if (!enabled_) return;
        pending_.insert(pending_.end(), w.begin(), w.end());
    }

    void flush() {
        if (!enabled_) return;
        if (!pending_.empty()) {
            samples_.write(reinterpret_cast<const char*>(pending_.data()),
                           static_cast<std::streamsize>(pending_.size() * sizeof(double)));
            pending_.clear();
        }
        samples_.flush();
        csv_.flush();
    }

private:
    bool enabled_;
    std::string dir_;
    std::ofstream samples_;
    std::ofstream csv_;
    std::vector<double> pending_;
};

} // namespace

ChainResult run_chain(const ChainConfig& cfg, const ChainForward& fwd, const GaussianPrior& prior,
                      const Observation& obs, const Mesh& mesh, const std::string& trace_dir) {
    if (cfg.k_burn < 0 || cfg.k_burn >= cfg.k_max)
        throw std::invalid_argument("run_chain: need 0 <= k_burn < k_max");
    if (!(cfg.beta > 0.0) || cfg.beta > 1.0) throw std::invalid_argument("run_chain: need 0 < beta <= 1");

    Rng rng(cfg.seed);
    TraceWriter trace(trace_dir, cfg, mesh, obs);

    ChainResult result;
    result.costs.reserve(cfg.k_max);
    result.accepted.reserve(cfg.k_max);
    std::vector<double> mean_acc(mesh.node_count(), 0.0);

    auto evaluate = [&](const NodalField& w) {
        const NodalField u = fwd(w);
        const std::vector<double> u_obs = observe(u, obs, mesh);
        return potential_of_state(u_obs, obs);
    };

    int consecutive_failures = 0;
    auto guarded_evaluate = [&](const NodalField& w, bool& ok) -> double {
        try {
            const double phi = evaluate(w);
            consecutive_failures = 0;
            ok = true;
            return phi;
        } catch (const std::exception&) {
            ok = false;
            if (++consecutive_failures >= 3) {
                trace.flush();
                throw;
            }
            return std::numeric_limits<double>::infinity();
        }
    };

    // initial state from the prior
    GaussianPrior::Sample init = prior.sample(rng);
    NodalField w = std::move(init.w);
    bool ok = false;
    double phi = guarded_evaluate(w, ok);

    long accept_count = 0;
    for (int k = 0; k < cfg.k_max; ++k) {
        GaussianPrior::Sample draw = prior.sample(rng);
        const double draw_log_prior = prior.log_prior(draw.noise);
        const NodalField v = pcn_propose(w, draw.w, cfg.beta);

        bool proposal_ok = false;
        const double phi_v = guarded_evaluate(v, proposal_ok);

        bool accepted = false;
        if (proposal_ok && std::isfinite(phi_v)) {
            accepted = pcn_accept(phi, phi_v, rng);
        } else {
            // non-finite potential: treated as a rejection, logged
            rng.uniform_open();  // keep the draw sequence aligned
        }
        if (accepted) {
            w = v;
            phi = phi_v;
            ++accept_count;
        }

        result.costs.push_back(phi);
        result.accepted.push_back(accepted ? 1 : 0);
        result.log_priors.push_back(draw_log_prior);
        const double rate = static_cast<double>(accept_count) / (k + 1);
        trace.row(k, phi, accepted, rate);

        if (k >= cfg.k_burn) {
            for (int i = 0; i < mesh.node_count(); ++i) mean_acc[i] += w.values[i];
            trace.retained_sample(w.values);
            ++result.retained;
        }
        if ((k + 1) % cfg.checkpoint_every == 0) trace.flush();
    }
    trace.flush();

    const double inv = 1.0 / result.retained;
    for (double& v : mean_acc) v *= inv;
    result.posterior_mean_w = NodalField(std::move(mean_acc), 1);
    result.acceptance_rate = static_cast<double>(accept_count) / cfg.k_max;
    return result;
}

} // namespace operon
