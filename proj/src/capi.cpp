#include "operon.h"

#include <cstring>
#include <exception>
#include <fstream>
#include <sstream>
#include <string>

#include "operon/dataset.hpp"
#include "operon/deeponet.hpp"
#include "operon/errors.hpp"
#include "operon/fno.hpp"
#include "operon/forward.hpp"
#include "operon/grf.hpp"
#include "operon/io.hpp"
#include "operon/mcmc.hpp"
#include "operon/pcanet.hpp"
#include "operon/surrogate.hpp"
#include "operon/truth.hpp"

namespace {

thread_local std::string g_last_error;

operon_status fail(operon_status code, const std::string& message) {
    g_last_error = message;
    return code;
}

template <typename Fn>
operon_status guard(Fn&& fn) {
    try {
        fn();
        return OPERON_OK;
    } catch (const std::invalid_argument& e) {
        return fail(OPERON_ERR_INVALID_ARGUMENT, e.what());
    } catch (const operon::invalid_configuration& e) {
        return fail(OPERON_ERR_INVALID_CONFIG, e.what());
    } catch (const operon::solver_failure& e) {
        return fail(OPERON_ERR_SOLVER_FAILURE,
                    std::string(e.what()) + " (residual " + std::to_string(e.residual()) + ")");
    } catch (const operon::out_of_domain& e) {
        return fail(OPERON_ERR_OUT_OF_DOMAIN, e.what());
    } catch (const std::range_error& e) {
        return fail(OPERON_ERR_RANGE, e.what());
    } catch (const std::runtime_error& e) {
        return fail(OPERON_ERR_IO, e.what());
    } catch (const std::exception& e) {
        return fail(OPERON_ERR_INTERNAL, e.what());
    }
}

} // namespace

struct operon_model {
    std::shared_ptr<operon::ForwardModel> model;
};

struct operon_dataset {
    operon::Dataset ds;
};

struct operon_surrogate {
    std::shared_ptr<operon::Surrogate> model;
    std::string arch;
};

struct operon_observation {
    operon::Observation obs;
};

extern "C" {

const char* operon_last_error(void) { return g_last_error.c_str(); }

operon_status operon_model_create(const char* problem, int nx, int ny, double L1, double L2,
                                  double a_c, double b_c, double c_c, double alpha_m,
                                  double beta_m, uint64_t prior_seed, operon_model** out) {
    return guard([&] {
        if (!problem || !out) throw std::invalid_argument("operon_model_create: null argument");
        auto mesh = std::make_shared<const operon::Mesh>(operon::build_rect_mesh(nx, ny, L1, L2));
        auto prior = operon::build_prior(*mesh, a_c, b_c, c_c,
                                         operon::NodalField::constant(0.0, mesh->node_count()),
                                         prior_seed);
        auto model = operon::make_forward_model(problem, mesh, std::move(prior),
                                                operon::TransformParams{alpha_m, beta_m});
        *out = new operon_model{std::move(model)};
    });
}

void operon_model_destroy(operon_model* model) { delete model; }

int operon_model_node_count(const operon_model* model) {
    return model ? model->model->mesh().node_count() : 0;
}

int operon_model_output_components(const operon_model* model) {
    return model ? model->model->output_components() : 0;
}

operon_status operon_model_solve(const operon_model* model, const double* w_or_m, int transform,
                                 double* u_out) {
    return guard([&] {
        if (!model || !w_or_m || !u_out) throw std::invalid_argument("operon_model_solve: null argument");
        const int n = model->model->mesh().node_count();
        operon::NodalField input(std::vector<double>(w_or_m, w_or_m + n), 1);
        const operon::NodalField u = model->model->solve_fwd(input, transform != 0);
        std::copy(u.values.begin(), u.values.end(), u_out);
    });
}

operon_status operon_model_sample_prior(const operon_model* model, uint64_t stream_index,
                                        int transform, double* out) {
    return guard([&] {
        if (!model || !out) throw std::invalid_argument("operon_model_sample_prior: null argument");
        operon::Rng rng = operon::Rng(model->model->prior().seed()).substream(stream_index);
        const operon::NodalField f = model->model->sample_prior(rng, transform != 0);
        std::copy(f.values.begin(), f.values.end(), out);
    });
}

operon_status operon_transform_lognormal(const double* w, int n, double alpha_m, double beta_m,
                                         double* m_out) {
    return guard([&] {
        if (!w || !m_out || n < 0) throw std::invalid_argument("operon_transform_lognormal: bad argument");
        operon::NodalField field(std::vector<double>(w, w + n), 1);
        const operon::NodalField m =
            operon::transform_lognormal(field, operon::TransformParams{alpha_m, beta_m});
        std::copy(m.values.begin(), m.values.end(), m_out);
    });
}

operon_status operon_truth_field(const operon_model* model, uint64_t seed, double* w_out) {
    return guard([&] {
        if (!model || !w_out) throw std::invalid_argument("operon_truth_field: null argument");
        const operon::NodalField w = operon::make_truth_field(model->model->mesh(), seed);
        std::copy(w.values.begin(), w.values.end(), w_out);
    });
}

operon_status operon_dataset_generate(const operon_model* model, int n, uint64_t seed, int threads,
                                      operon_dataset** out) {
    return guard([&] {
        if (!model || !out) throw std::invalid_argument("operon_dataset_generate: null argument");
        auto* handle = new operon_dataset{operon::generate(*model->model, n, seed, threads)};
        *out = handle;
    });
}

operon_status operon_dataset_split(operon_dataset* ds, int n_train, int n_test, uint64_t seed) {
    return guard([&] {
        if (!ds) throw std::invalid_argument("operon_dataset_split: null dataset");
        operon::split(ds->ds, n_train, n_test, seed);
    });
}

operon_status operon_dataset_add_grid(operon_dataset* ds, int n1, int n2) {
    return guard([&] {
        if (!ds) throw std::invalid_argument("operon_dataset_add_grid: null dataset");
        const auto mesh = ds->ds.make_mesh();
        const operon::GridTransfer transfer(*mesh, n1, n2);
        operon::to_grid_dataset(ds->ds, transfer);
    });
}

operon_status operon_dataset_save(const operon_dataset* ds, const char* dir) {
    return guard([&] {
        if (!ds || !dir) throw std::invalid_argument("operon_dataset_save: null argument");
        operon::save_dataset(ds->ds, dir);
    });
}

operon_status operon_dataset_load(const char* dir, operon_dataset** out) {
    return guard([&] {
        if (!dir || !out) throw std::invalid_argument("operon_dataset_load: null argument");
        *out = new operon_dataset{operon::load_dataset(dir)};
    });
}

void operon_dataset_destroy(operon_dataset* ds) { delete ds; }

int operon_dataset_rows(const operon_dataset* ds) { return ds ? ds->ds.meta.N : 0; }
int operon_dataset_pm(const operon_dataset* ds) { return ds ? ds->ds.meta.p_m : 0; }
int operon_dataset_pu(const operon_dataset* ds) { return ds ? ds->ds.meta.p_u : 0; }

operon_status operon_dataset_x_row(const operon_dataset* ds, int row, double* out) {
    return guard([&] {
        if (!ds || !out) throw std::invalid_argument("operon_dataset_x_row: null argument");
        if (row < 0 || row >= ds->ds.meta.N) throw std::invalid_argument("operon_dataset_x_row: row out of range");
        std::copy(ds->ds.x_row(row), ds->ds.x_row(row) + ds->ds.meta.p_m, out);
    });
}

operon_status operon_dataset_y_row(const operon_dataset* ds, int row, double* out) {
    return guard([&] {
        if (!ds || !out) throw std::invalid_argument("operon_dataset_y_row: null argument");
        if (row < 0 || row >= ds->ds.meta.N) throw std::invalid_argument("operon_dataset_y_row: row out of range");
        std::copy(ds->ds.y_row(row), ds->ds.y_row(row) + ds->ds.meta.p_u, out);
    });
}

operon_status operon_dataset_spectrum_csv(const operon_dataset* ds, const char* target,
                                          const char* csv_path) {
    return guard([&] {
        if (!ds || !target || !csv_path)
            throw std::invalid_argument("operon_dataset_spectrum_csv: null argument");
        const operon::Dataset& d = ds->ds;
        if (!d.has_split()) throw std::invalid_argument("spectrum: dataset has no split");
        const bool input = std::strcmp(target, "input") == 0;
        if (!input && std::strcmp(target, "output") != 0)
            throw std::invalid_argument("spectrum: target must be 'input' or 'output'");

        const operon::DatasetView train = operon::train_view(d);
        const int p = input ? d.meta.p_m : d.meta.p_u;
        std::vector<double> rows(static_cast<std::size_t>(train.size()) * p);
        for (int k = 0; k < train.size(); ++k) {
            const double* src = input ? train.x_row(k) : train.y_row(k);
            std::copy(src, src + p, rows.begin() + static_cast<std::size_t>(k) * p);
        }
        const operon::Normalizer norm = operon::fit_normalizer(rows, train.size(), p);
        for (int k = 0; k < train.size(); ++k)
            norm.apply_inplace(rows.data() + static_cast<std::size_t>(k) * p);
        const operon::Projector proj =
            operon::fit_projector(rows, train.size(), p, std::min(train.size(), p));

        double energy = 0.0;
        for (double s : proj.singular_values) energy += s * s;
        const double sig_max = proj.singular_values.empty() ? 1.0 : proj.singular_values.front();
        std::ostringstream out;
        out << "mode,sigma,sigma_rel_max,energy_fraction\n";
        out.precision(17);
        for (std::size_t i = 0; i < proj.singular_values.size(); ++i) {
            const double s = proj.singular_values[i];
            out << i << "," << s << "," << s / sig_max << "," << (s * s) / energy << "\n";
        }
        operon::write_text(csv_path, out.str());
    });
}

void operon_train_opts_defaults(operon_train_opts* opts) {
    if (!opts) return;
    opts->epochs = 1000;
    opts->batch_size = 20;
    opts->lr = 1e-3;
    opts->weight_decay = 1e-4;
    opts->seed = 0;
    opts->depth = 4;
    opts->width = 128;
    opts->n_tr = 100;
    opts->r_m = 100;
    opts->r_u = 100;
    opts->d_h = 20;
    opts->fno_layers = 3;
    opts->k_max = 8;
}

operon_status operon_train(const char* arch, const operon_dataset* ds,
                           const operon_train_opts* opts, const char* resume_dir,
                           const char* out_dir, operon_surrogate** out_or_null) {
    return guard([&] {
        if (!arch || !ds || !opts || !out_dir) throw std::invalid_argument("operon_train: null argument");
        operon::TrainOptions topts;
        topts.epochs = opts->epochs;
        topts.batch_size = opts->batch_size;
        topts.lr = opts->lr;
        topts.weight_decay = opts->weight_decay;
        topts.seed = opts->seed;
        topts.depth = opts->depth;
        topts.width = opts->width;
        topts.n_tr = opts->n_tr;
        topts.r_m = opts->r_m;
        topts.r_u = opts->r_u;
        topts.d_h = opts->d_h;
        topts.fno_layers = opts->fno_layers;
        topts.k_max = opts->k_max;

        auto model = operon::train_surrogate(arch, ds->ds, topts,
                                             resume_dir ? std::string(resume_dir) : std::string());
        model->save(out_dir);
        operon::write_loss_csv(std::string(out_dir) + "/loss.csv", model->loss_log());
        if (out_or_null) *out_or_null = new operon_surrogate{std::move(model), arch};
    });
}

operon_status operon_surrogate_load(const char* dir, operon_surrogate** out) {
    return guard([&] {
        if (!dir || !out) throw std::invalid_argument("operon_surrogate_load: null argument");
        auto model = operon::load_surrogate(dir);
        const std::string arch = model->arch();
        *out = new operon_surrogate{std::move(model), arch};
    });
}

void operon_surrogate_destroy(operon_surrogate* s) { delete s; }

int operon_surrogate_node_count(const operon_surrogate* s) {
    return s ? s->model->mesh().node_count() : 0;
}

int operon_surrogate_output_components(const operon_surrogate* s) {
    return s ? s->model->output_components() : 0;
}

const char* operon_surrogate_arch(const operon_surrogate* s) { return s ? s->arch.c_str() : ""; }

operon_status operon_surrogate_predict(const operon_surrogate* s, const double* m, double* u_out) {
    return guard([&] {
        if (!s || !m || !u_out) throw std::invalid_argument("operon_surrogate_predict: null argument");
        const int n = s->model->mesh().node_count();
        operon::NodalField input(std::vector<double>(m, m + n), 1);
        const operon::NodalField u = s->model->predict(input);
        std::copy(u.values.begin(), u.values.end(), u_out);
    });
}

operon_status operon_surrogate_eval(const operon_surrogate* s, const operon_dataset* ds,
                                    const char* which, const char* csv_path_or_null,
                                    double* median_out, double* mean_out) {
    return guard([&] {
        if (!s || !ds || !which) throw std::invalid_argument("operon_surrogate_eval: null argument");
        operon::DatasetView view;
        if (std::strcmp(which, "train") == 0)
            view = operon::train_view(ds->ds);
        else if (std::strcmp(which, "test") == 0)
            view = operon::test_view(ds->ds);
        else
            throw std::invalid_argument("operon_surrogate_eval: which must be 'train' or 'test'");
        const operon::EvalReport report = operon::evaluate_surrogate(*s->model, view);
        if (csv_path_or_null) operon::write_eval_csv(csv_path_or_null, report);
        if (median_out) *median_out = report.median;
        if (mean_out) *mean_out = report.mean;
    });
}

operon_status operon_observation_create(const operon_model* model, const double* true_w,
                                        double noise_fraction, int grid_n,
                                        operon_observation** out) {
    return guard([&] {
        if (!model || !true_w || !out) throw std::invalid_argument("operon_observation_create: null argument");
        const int n = model->model->mesh().node_count();
        operon::NodalField w(std::vector<double>(true_w, true_w + n), 1);
        *out = new operon_observation{
            operon::make_observation(*model->model, w, noise_fraction, grid_n)};
    });
}

operon_status operon_observation_create_raw(const operon_model* model, const double* o, int d_o,
                                            double sigma_o, int grid_n, operon_observation** out) {
    return guard([&] {
        if (!model || !o || !out) throw std::invalid_argument("operon_observation_create_raw: null argument");
        if (!(sigma_o > 0.0)) throw std::invalid_argument("operon_observation_create_raw: sigma_o must be > 0");
        const int comps = model->model->output_components();
        if (d_o != grid_n * grid_n * comps)
            throw std::invalid_argument("operon_observation_create_raw: d_o does not match grid and components");
        operon::Observation obs;
        obs.components = comps;
        const operon::Mesh& mesh = model->model->mesh();
        for (int i = 0; i < grid_n; ++i)
            for (int j = 0; j < grid_n; ++j)
                obs.grid_points.push_back({i * mesh.L1 / (grid_n - 1), j * mesh.L2 / (grid_n - 1)});
        obs.o.assign(o, o + d_o);
        obs.sigma_o = sigma_o;
        *out = new operon_observation{std::move(obs)};
    });
}

void operon_observation_destroy(operon_observation* obs) { delete obs; }

int operon_observation_size(const operon_observation* obs) { return obs ? obs->obs.size() : 0; }

double operon_observation_sigma(const operon_observation* obs) {
    return obs ? obs->obs.sigma_o : 0.0;
}

operon_status operon_observation_data(const operon_observation* obs, double* o_out) {
    return guard([&] {
        if (!obs || !o_out) throw std::invalid_argument("operon_observation_data: null argument");
        std::copy(obs->obs.o.begin(), obs->obs.o.end(), o_out);
    });
}

operon_status operon_mcmc_run(const operon_model* model, const operon_surrogate* surrogate_or_null,
                              const operon_observation* obs, int k_max, int k_burn, double beta,
                              uint64_t seed, const char* trace_dir_or_null,
                              double* posterior_mean_w_out, double* acceptance_rate_out) {
    return guard([&] {
        if (!model || !obs) throw std::invalid_argument("operon_mcmc_run: null argument");
        operon::ChainConfig cfg;
        cfg.k_max = k_max;
        cfg.k_burn = k_burn;
        cfg.beta = beta;
        cfg.seed = seed;
        cfg.forward = surrogate_or_null ? surrogate_or_null->arch : "fem";

        operon::ChainForward fwd;
        const operon::TransformParams transform = model->model->transform_params();
        if (surrogate_or_null) {
            const operon::Surrogate* s = surrogate_or_null->model.get();
            // surrogates are trained on the transformed parameter
            fwd = [s, transform](const operon::NodalField& w) {
                return s->predict(operon::transform_lognormal(w, transform));
            };
        } else {
            fwd = operon::fem_forward(*model->model);
        }

        const operon::ChainResult result = operon::run_chain(
            cfg, fwd, model->model->prior(), obs->obs, model->model->mesh(),
            trace_dir_or_null ? std::string(trace_dir_or_null) : std::string());
        if (posterior_mean_w_out)
            std::copy(result.posterior_mean_w.values.begin(), result.posterior_mean_w.values.end(),
                      posterior_mean_w_out);
        if (acceptance_rate_out) *acceptance_rate_out = result.acceptance_rate;
    });
}

} // extern "C"
