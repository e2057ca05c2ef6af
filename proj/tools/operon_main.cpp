// operon command-line driver: gen / train / eval / mcmc / truth / spectrum.
//
// Configuration is a flat JSON object with dotted keys; every flag maps 1:1
// to a key and flags override the --config file. Each command echoes the
// fully resolved configuration into its output directory so any run can be
// reproduced from the echo alone.
//
// Exit codes: 0 success, 2 usage error, 3 numeric/runtime failure.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "operon.h"

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

constexpr int kExitUsage = 2;
constexpr int kExitFailure = 3;

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct RunError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

void check(operon_status status, const std::string& what) {
    if (status != OPERON_OK) throw RunError(what + ": " + operon_last_error());
}

// ---- flat dotted-key configuration ----

class Config {
public:
    void set_default(const std::string& key, json value) { values_[key] = std::move(value); }

    void merge_file(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw UsageError("cannot open config file: " + path);
        json file = json::parse(in, nullptr, /*allow_exceptions=*/false);
        if (file.is_discarded() || !file.is_object())
            throw UsageError("config file is not a JSON object: " + path);
        for (auto& [key, value] : file.items()) {
            if (!values_.count(key)) throw UsageError("unknown config key in file: " + key);
            values_[key] = value;
        }
    }

    void merge_flag(const std::string& key, const std::string& raw) {
        auto it = values_.find(key);
        if (it == values_.end()) throw UsageError("unknown config key: " + key);
        // interpret the flag text with the type of the default
        if (it->second.is_string()) {
            it->second = raw;
            return;
        }
        json parsed = json::parse(raw, nullptr, false);
        if (parsed.is_discarded()) throw UsageError("cannot parse value for --" + key + ": " + raw);
        it->second = parsed;
    }

    double num(const std::string& key) const { return at(key).get<double>(); }
    int integer(const std::string& key) const {
        const double v = at(key).get<double>();
        return static_cast<int>(v);
    }
    std::uint64_t uint(const std::string& key) const { return at(key).get<std::uint64_t>(); }
    std::string str(const std::string& key) const { return at(key).get<std::string>(); }
    bool flag(const std::string& key) const { return at(key).get<bool>(); }
    bool is_set(const std::string& key) const { return values_.count(key) > 0; }

    const json& at(const std::string& key) const {
        auto it = values_.find(key);
        if (it == values_.end()) throw UsageError("missing config key: " + key);
        return it->second;
    }

    json echo() const {
        json out = json::object();
        for (const auto& [key, value] : values_) out[key] = value;
        return out;
    }

private:
    std::map<std::string, json> values_;
};

// Binds every config key as a --key flag on the subcommand.
void bind_flags(CLI::App* cmd, Config& cfg, const std::vector<std::string>& keys,
                std::map<std::string, std::string>& captured) {
    for (const std::string& key : keys) {
        cmd->add_option_function<std::string>(
            "--" + key, [&captured, key](const std::string& raw) { captured[key] = raw; });
    }
}

void add_alias(CLI::App* cmd, const std::string& flag, const std::string& key,
               std::map<std::string, std::string>& captured) {
    cmd->add_option_function<std::string>(
        flag, [&captured, key](const std::string& raw) { captured[key] = raw; });
}

struct ModelHandle {
    operon_model* ptr = nullptr;
    ~ModelHandle() { operon_model_destroy(ptr); }
};
struct DatasetHandle {
    operon_dataset* ptr = nullptr;
    ~DatasetHandle() { operon_dataset_destroy(ptr); }
};
struct SurrogateHandle {
    operon_surrogate* ptr = nullptr;
    ~SurrogateHandle() { operon_surrogate_destroy(ptr); }
};
struct ObservationHandle {
    operon_observation* ptr = nullptr;
    ~ObservationHandle() { operon_observation_destroy(ptr); }
};

// ---- defaults ----

void problem_defaults(Config& cfg) {
    cfg.set_default("problem", "poisson");
    cfg.set_default("mesh.nx", 50);
    cfg.set_default("mesh.ny", 50);
    cfg.set_default("mesh.L1", 1.0);
    cfg.set_default("mesh.L2", 1.0);
    cfg.set_default("prior.a_c", 0.005);
    cfg.set_default("prior.b_c", 1.0);
    cfg.set_default("prior.c_c", 0.2);
    cfg.set_default("prior.seed", 0);
    // negative = resolve from the problem tag after parsing
    cfg.set_default("transform.alpha_m", -1.0);
    cfg.set_default("transform.beta_m", -1.0);
    cfg.set_default("seed", 0);
    cfg.set_default("threads", 1);
    cfg.set_default("determinism", true);
}

void resolve_problem_defaults(Config& cfg) {
    const std::string problem = cfg.str("problem");
    if (problem != "poisson" && problem != "linear_elasticity")
        throw UsageError("unknown problem '" + problem + "' (expected poisson or linear_elasticity)");
    const bool elasticity = problem == "linear_elasticity";
    if (cfg.num("transform.alpha_m") < 0.0)
        cfg.set_default("transform.alpha_m", elasticity ? 100.0 : 1.0);
    if (cfg.num("transform.beta_m") < 0.0)
        cfg.set_default("transform.beta_m", elasticity ? 1000.0 : 0.0);
}

ModelHandle open_model(const Config& cfg) {
    ModelHandle model;
    check(operon_model_create(cfg.str("problem").c_str(), cfg.integer("mesh.nx"),
                              cfg.integer("mesh.ny"), cfg.num("mesh.L1"), cfg.num("mesh.L2"),
                              cfg.num("prior.a_c"), cfg.num("prior.b_c"), cfg.num("prior.c_c"),
                              cfg.num("transform.alpha_m"), cfg.num("transform.beta_m"),
                              cfg.uint("prior.seed"), &model.ptr),
          "model");
    return model;
}

fs::path prepare_out_dir(const Config& cfg) {
    const std::string out = cfg.str("out");
    if (out.empty()) throw UsageError("missing --out");
    fs::create_directories(out);
    return fs::path(out);
}

void echo_config(const Config& cfg, const fs::path& out_dir) {
    std::ofstream out(out_dir / "config.json");
    out << cfg.echo().dump(2) << "\n";
}

double rel_l2_percent(const std::vector<double>& a, const std::vector<double>& b) {
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        num += d * d;
        den += b[i] * b[i];
    }
    return 100.0 * std::sqrt(num / den);
}

std::vector<double> read_bin(const fs::path& path, std::size_t count) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw RunError("cannot open " + path.string());
    std::vector<double> data(count);
    in.read(reinterpret_cast<char*>(data.data()), static_cast<std::streamsize>(count * sizeof(double)));
    if (!in) throw RunError("short read from " + path.string());
    return data;
}

void write_bin(const fs::path& path, const std::vector<double>& data) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out.write(reinterpret_cast<const char*>(data.data()),
              static_cast<std::streamsize>(data.size() * sizeof(double)));
    if (!out) throw RunError("cannot write " + path.string());
}

// ---- commands ----

int cmd_gen(Config& cfg) {
    resolve_problem_defaults(cfg);
    const int n = cfg.integer("dataset.n");
    if (n < 1) throw UsageError("dataset.n must be >= 1");
    const fs::path out_dir = prepare_out_dir(cfg);

    ModelHandle model = open_model(cfg);
    DatasetHandle ds;
    check(operon_dataset_generate(model.ptr, n, cfg.uint("seed"), cfg.integer("threads"), &ds.ptr),
          "generate");

    int n_train = cfg.integer("dataset.n_train");
    int n_test = cfg.integer("dataset.n_test");
    if (n_train + n_test > n) {
        // scale the paper split down to small datasets
        n_train = std::max(1, (n * 7) / 9);
        n_test = n - n_train;
    }
    check(operon_dataset_split(ds.ptr, n_train, n_test, cfg.uint("seed")), "split");
    if (cfg.flag("dataset.grid"))
        check(operon_dataset_add_grid(ds.ptr, cfg.integer("grid.n1"), cfg.integer("grid.n2")),
              "grid resample");
    check(operon_dataset_save(ds.ptr, out_dir.string().c_str()), "save");
    echo_config(cfg, out_dir);
    std::cout << "dataset: " << out_dir.string() << " (N=" << n << ", train=" << n_train
              << ", test=" << n_test << ")\n";
    return 0;
}

int cmd_train(Config& cfg) {
    const std::string arch = cfg.str("arch");
    if (arch != "deeponet" && arch != "pcanet" && arch != "fno")
        throw UsageError("unknown arch '" + arch + "' (expected deeponet, pcanet, or fno)");
    const fs::path out_dir = prepare_out_dir(cfg);

    DatasetHandle ds;
    check(operon_dataset_load(cfg.str("dataset").c_str(), &ds.ptr), "load dataset");

    operon_train_opts opts;
    operon_train_opts_defaults(&opts);
    opts.epochs = cfg.is_set("train.epochs") && cfg.integer("train.epochs") > 0
                      ? cfg.integer("train.epochs")
                      : (arch == "fno" ? 500 : 1000);
    opts.batch_size = cfg.integer("train.batch");
    opts.lr = cfg.num("train.lr");
    opts.weight_decay = cfg.num("train.weight_decay");
    opts.seed = cfg.uint("seed");
    opts.depth = cfg.integer("train.depth");
    opts.width = cfg.integer("train.width");
    opts.n_tr = cfg.integer("train.n_tr");
    opts.r_m = cfg.integer("train.r_m");
    opts.r_u = cfg.integer("train.r_u");
    opts.d_h = cfg.integer("train.d_h");
    opts.fno_layers = cfg.integer("train.layers");
    opts.k_max = cfg.integer("train.k_max");

    const std::string resume = cfg.str("resume");
    SurrogateHandle trained;
    check(operon_train(arch.c_str(), ds.ptr, &opts, resume.empty() ? nullptr : resume.c_str(),
                       out_dir.string().c_str(), &trained.ptr),
          "train");
    echo_config(cfg, out_dir);
    std::cout << "checkpoint: " << out_dir.string() << " (arch=" << arch
              << ", epochs=" << opts.epochs << ")\n";
    return 0;
}

int cmd_eval(Config& cfg) {
    const fs::path out_dir = prepare_out_dir(cfg);
    DatasetHandle ds;
    check(operon_dataset_load(cfg.str("dataset").c_str(), &ds.ptr), "load dataset");
    SurrogateHandle model;
    check(operon_surrogate_load(cfg.str("checkpoint").c_str(), &model.ptr), "load checkpoint");

    const std::string which = cfg.str("eval.split");
    double median = 0.0, mean = 0.0;
    const fs::path csv = out_dir / "eval.csv";
    check(operon_surrogate_eval(model.ptr, ds.ptr, which.c_str(), csv.string().c_str(), &median,
                                &mean),
          "eval");

    json summary;
    summary["arch"] = operon_surrogate_arch(model.ptr);
    summary["split"] = which;
    summary["median_rel_l2_percent"] = median;
    summary["mean_rel_l2_percent"] = mean;
    std::ofstream(out_dir / "summary.json") << summary.dump(2) << "\n";
    echo_config(cfg, out_dir);
    std::cout << "eval: median " << median << "%, mean " << mean << "% -> " << csv.string() << "\n";
    return 0;
}

int cmd_truth(Config& cfg) {
    resolve_problem_defaults(cfg);
    const fs::path out_dir = prepare_out_dir(cfg);
    ModelHandle model = open_model(cfg);
    const int n = operon_model_node_count(model.ptr);
    std::vector<double> w(n);
    check(operon_truth_field(model.ptr, cfg.uint("seed"), w.data()), "truth");
    write_bin(out_dir / "w_true.bin", w);

    std::vector<double> m(n);
    check(operon_transform_lognormal(w.data(), n, cfg.num("transform.alpha_m"),
                                     cfg.num("transform.beta_m"), m.data()),
          "transform");
    write_bin(out_dir / "m_true.bin", m);

    json meta;
    meta["generator"] = "truth-v1";
    meta["seed"] = cfg.uint("seed");
    meta["mesh"] = {{"nx", cfg.integer("mesh.nx")},
                    {"ny", cfg.integer("mesh.ny")},
                    {"L1", cfg.num("mesh.L1")},
                    {"L2", cfg.num("mesh.L2")}};
    meta["node_count"] = n;
    std::ofstream(out_dir / "meta.json") << meta.dump(2) << "\n";
    echo_config(cfg, out_dir);
    std::cout << "truth field: " << (out_dir / "w_true.bin").string() << "\n";
    return 0;
}

int cmd_mcmc(Config& cfg) {
    resolve_problem_defaults(cfg);
    const double beta = cfg.num("mcmc.beta");
    if (!(beta > 0.0) || beta > 1.0) throw UsageError("mcmc.beta must be in (0, 1]");
    const int k_max = cfg.integer("mcmc.k_max");
    const int k_burn = cfg.integer("mcmc.k_burn");
    if (k_burn < 0 || k_burn >= k_max) throw UsageError("need 0 <= mcmc.k_burn < mcmc.k_max");
    const std::string forward = cfg.str("mcmc.forward");
    if (forward != "fem" && forward != "deeponet" && forward != "pcanet" && forward != "fno")
        throw UsageError("mcmc.forward must be one of fem, deeponet, pcanet, fno");
    const fs::path out_dir = prepare_out_dir(cfg);

    ModelHandle model = open_model(cfg);
    const int n = operon_model_node_count(model.ptr);
    const int comps = operon_model_output_components(model.ptr);
    const int grid_n = cfg.integer("mcmc.obs_grid");

    // observation: either reuse a stored file or synthesize from the truth
    ObservationHandle obs;
    std::vector<double> w_true;
    if (!cfg.str("obs").empty()) {
        std::ifstream in(cfg.str("obs"));
        if (!in) throw RunError("cannot open observation file: " + cfg.str("obs"));
        json stored = json::parse(in);
        const auto o = stored.at("o").get<std::vector<double>>();
        check(operon_observation_create_raw(model.ptr, o.data(), static_cast<int>(o.size()),
                                            stored.at("sigma_o").get<double>(),
                                            stored.at("grid_n").get<int>(), &obs.ptr),
              "observation");
    } else {
        const std::string truth_dir = cfg.str("truth");
        if (truth_dir.empty()) throw UsageError("mcmc needs --truth <dir> or --obs <file>");
        w_true = read_bin(fs::path(truth_dir) / "w_true.bin", static_cast<std::size_t>(n));
        check(operon_observation_create(model.ptr, w_true.data(), cfg.num("mcmc.noise_fraction"),
                                        grid_n, &obs.ptr),
              "observation");
    }

    // persist the observation for reuse across forward models
    {
        std::vector<double> o(operon_observation_size(obs.ptr));
        check(operon_observation_data(obs.ptr, o.data()), "observation data");
        json stored;
        stored["grid_n"] = grid_n;
        stored["d_o"] = o.size();
        stored["components"] = comps;
        stored["sigma_o"] = operon_observation_sigma(obs.ptr);
        stored["o"] = o;
        std::ofstream(out_dir / "observation.json") << stored.dump() << "\n";
    }

    SurrogateHandle surrogate;
    if (forward != "fem") {
        const std::string checkpoint = cfg.str("checkpoint");
        if (checkpoint.empty()) throw UsageError("surrogate forward needs --checkpoint <dir>");
        check(operon_surrogate_load(checkpoint.c_str(), &surrogate.ptr), "load checkpoint");
        if (std::string(operon_surrogate_arch(surrogate.ptr)) != forward)
            throw UsageError("checkpoint architecture does not match --forward " + forward);
    }

    std::vector<double> mean_w(n);
    double acceptance = 0.0;
    const fs::path trace_dir = out_dir / "trace";
    check(operon_mcmc_run(model.ptr, surrogate.ptr, obs.ptr, k_max, k_burn, beta, cfg.uint("seed"),
                          trace_dir.string().c_str(), mean_w.data(), &acceptance),
          "mcmc");

    write_bin(out_dir / "posterior_mean_w.bin", mean_w);
    std::vector<double> mean_m(n);
    check(operon_transform_lognormal(mean_w.data(), n, cfg.num("transform.alpha_m"),
                                     cfg.num("transform.beta_m"), mean_m.data()),
          "transform");
    write_bin(out_dir / "posterior_mean_m.bin", mean_m);

    json report;
    report["forward"] = forward;
    report["k_max"] = k_max;
    report["k_burn"] = k_burn;
    report["beta"] = beta;
    report["acceptance_rate"] = acceptance;
    report["sigma_o"] = operon_observation_sigma(obs.ptr);
    if (!w_true.empty()) {
        std::vector<double> m_true(n);
        check(operon_transform_lognormal(w_true.data(), n, cfg.num("transform.alpha_m"),
                                         cfg.num("transform.beta_m"), m_true.data()),
              "transform");
        report["posterior_mean_error_w_percent"] = rel_l2_percent(mean_w, w_true);
        report["posterior_mean_error_m_percent"] = rel_l2_percent(mean_m, m_true);
    }
    std::ofstream(out_dir / "report.json") << report.dump(2) << "\n";
    echo_config(cfg, out_dir);
    std::cout << "mcmc (" << forward << "): acceptance " << acceptance;
    if (report.contains("posterior_mean_error_m_percent"))
        std::cout << ", posterior-mean m error "
                  << report["posterior_mean_error_m_percent"].get<double>() << "%";
    std::cout << " -> " << out_dir.string() << "\n";
    return 0;
}

int cmd_spectrum(Config& cfg) {
    const fs::path out_dir = prepare_out_dir(cfg);
    DatasetHandle ds;
    check(operon_dataset_load(cfg.str("dataset").c_str(), &ds.ptr), "load dataset");
    const std::string target = cfg.str("spectrum.target");
    if (target != "input" && target != "output" && target != "both")
        throw UsageError("spectrum.target must be input, output, or both");
    if (target == "input" || target == "both")
        check(operon_dataset_spectrum_csv(ds.ptr, "input",
                                          (out_dir / "spectrum_input.csv").string().c_str()),
              "spectrum");
    if (target == "output" || target == "both")
        check(operon_dataset_spectrum_csv(ds.ptr, "output",
                                          (out_dir / "spectrum_output.csv").string().c_str()),
              "spectrum");
    echo_config(cfg, out_dir);
    std::cout << "spectrum CSVs in " << out_dir.string() << "\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"operon: parametric PDE surrogate learning and pCN Bayesian inversion"};
    app.require_subcommand(1);

    std::map<std::string, std::string> flags;
    std::string config_path;

    Config cfg;
    problem_defaults(cfg);

    auto* gen = app.add_subcommand("gen", "sample the prior, solve the PDE, write a dataset");
    cfg.set_default("dataset.n", 4500);
    cfg.set_default("dataset.n_train", 3500);
    cfg.set_default("dataset.n_test", 1000);
    cfg.set_default("dataset.grid", true);
    cfg.set_default("grid.n1", 51);
    cfg.set_default("grid.n2", 51);

    auto* train = app.add_subcommand("train", "train a surrogate on a dataset");
    cfg.set_default("arch", "");
    cfg.set_default("dataset", "");
    cfg.set_default("resume", "");
    cfg.set_default("train.epochs", 0);  // 0 = architecture default
    cfg.set_default("train.batch", 20);
    cfg.set_default("train.lr", 1e-3);
    cfg.set_default("train.weight_decay", 1e-4);
    cfg.set_default("train.depth", 4);
    cfg.set_default("train.width", 128);
    cfg.set_default("train.n_tr", 100);
    cfg.set_default("train.r_m", 100);
    cfg.set_default("train.r_u", 100);
    cfg.set_default("train.d_h", 20);
    cfg.set_default("train.layers", 3);
    cfg.set_default("train.k_max", 8);

    auto* eval = app.add_subcommand("eval", "per-sample surrogate errors against stored solutions");
    cfg.set_default("checkpoint", "");
    cfg.set_default("eval.split", "test");

    auto* mcmc = app.add_subcommand("mcmc", "pCN posterior sampling with FEM or surrogate forward");
    cfg.set_default("mcmc.k_max", 10500);
    cfg.set_default("mcmc.k_burn", 500);
    cfg.set_default("mcmc.beta", 0.2);
    cfg.set_default("mcmc.noise_fraction", 0.05);
    cfg.set_default("mcmc.forward", "fem");
    cfg.set_default("mcmc.obs_grid", 16);
    cfg.set_default("truth", "");
    cfg.set_default("obs", "");

    auto* truth = app.add_subcommand("truth", "generate the synthetic ground-truth field");
    auto* spectrum = app.add_subcommand("spectrum", "singular-value CSV export of a dataset");
    cfg.set_default("spectrum.target", "both");
    cfg.set_default("out", "");

    const std::vector<std::string> common_keys = {
        "problem",  "mesh.nx",  "mesh.ny",  "mesh.L1", "mesh.L2",
        "prior.a_c", "prior.b_c", "prior.c_c", "prior.seed",
        "transform.alpha_m", "transform.beta_m", "seed", "threads", "determinism", "out"};
    const std::vector<std::string> gen_keys = {"dataset.n", "dataset.n_train", "dataset.n_test",
                                               "dataset.grid", "grid.n1", "grid.n2"};
    const std::vector<std::string> train_keys = {
        "arch", "dataset", "resume", "train.epochs", "train.batch", "train.lr",
        "train.weight_decay", "train.depth", "train.width", "train.n_tr", "train.r_m",
        "train.r_u", "train.d_h", "train.layers", "train.k_max"};
    const std::vector<std::string> eval_keys = {"dataset", "checkpoint", "eval.split"};
    const std::vector<std::string> mcmc_keys = {
        "mcmc.k_max", "mcmc.k_burn", "mcmc.beta", "mcmc.noise_fraction", "mcmc.forward",
        "mcmc.obs_grid", "truth", "obs", "checkpoint"};
    const std::vector<std::string> spectrum_keys = {"dataset", "spectrum.target"};

    for (CLI::App* cmd : {gen, train, eval, mcmc, truth, spectrum}) {
        cmd->add_option("--config", config_path, "JSON config file (flat dotted keys)");
        bind_flags(cmd, cfg, common_keys, flags);
    }
    bind_flags(gen, cfg, gen_keys, flags);
    bind_flags(train, cfg, train_keys, flags);
    bind_flags(eval, cfg, eval_keys, flags);
    bind_flags(mcmc, cfg, mcmc_keys, flags);
    bind_flags(spectrum, cfg, spectrum_keys, flags);

    // short aliases used throughout the docs
    add_alias(gen, "--n", "dataset.n", flags);
    add_alias(train, "--epochs", "train.epochs", flags);
    add_alias(train, "--rm", "train.r_m", flags);
    add_alias(train, "--ru", "train.r_u", flags);
    add_alias(mcmc, "--beta", "mcmc.beta", flags);
    add_alias(mcmc, "--forward", "mcmc.forward", flags);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitUsage;
    }

    try {
        if (!config_path.empty()) cfg.merge_file(config_path);
        for (const auto& [key, raw] : flags) cfg.merge_flag(key, raw);
        if (cfg.str("out").empty()) throw UsageError("missing --out");

        if (gen->parsed()) return cmd_gen(cfg);
        if (train->parsed()) return cmd_train(cfg);
        if (eval->parsed()) return cmd_eval(cfg);
        if (mcmc->parsed()) return cmd_mcmc(cfg);
        if (truth->parsed()) return cmd_truth(cfg);
        if (spectrum->parsed()) return cmd_spectrum(cfg);
        throw UsageError("no subcommand");
    } catch (const UsageError& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitFailure;
    }
}
