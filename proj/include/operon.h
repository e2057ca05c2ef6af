/*
 * operon C API: parametric PDE surrogate learning and Bayesian inversion.
 *
 * The library is consumed through opaque handles and status codes; every
 * function returning operon_status sets a thread-local message retrievable
 * via operon_last_error() on failure. All arrays are double (little-endian,
 * row-major); sizes follow from the accessors.
 */

#ifndef OPERON_H
#define OPERON_H

#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum operon_status {
    OPERON_OK = 0,
    OPERON_ERR_INVALID_ARGUMENT = 1,
    OPERON_ERR_INVALID_CONFIG = 2,
    OPERON_ERR_SOLVER_FAILURE = 3,
    OPERON_ERR_OUT_OF_DOMAIN = 4,
    OPERON_ERR_RANGE = 5,
    OPERON_ERR_IO = 6,
    OPERON_ERR_INTERNAL = 7
} operon_status;

/* Message for the most recent failure on this thread. */
const char* operon_last_error(void);

typedef struct operon_model operon_model;           /* forward problem + prior + transform */
typedef struct operon_dataset operon_dataset;
typedef struct operon_surrogate operon_surrogate;
typedef struct operon_observation operon_observation;

/* ---- forward model ----
 * problem: "poisson" | "linear_elasticity". The Gaussian prior has covariance
 * (a_c*K(b_c) + c_c*M)^-2 on the nx x ny structured mesh of (0,L1)x(0,L2);
 * the physical parameter is alpha_m*exp(w) + beta_m.
 */
operon_status operon_model_create(const char* problem, int nx, int ny, double L1, double L2,
                                  double a_c, double b_c, double c_c, double alpha_m,
                                  double beta_m, uint64_t prior_seed, operon_model** out);
void operon_model_destroy(operon_model* model);

int operon_model_node_count(const operon_model* model);
int operon_model_output_components(const operon_model* model);

/* u_out has node_count * output_components entries, component-blocked.
 * transform != 0 treats the input as the Gaussian field w. */
operon_status operon_model_solve(const operon_model* model, const double* w_or_m, int transform,
                                 double* u_out);

/* Draw from the prior substream (prior_seed, stream_index); out has node_count
 * entries. transform != 0 returns the physical parameter. */
operon_status operon_model_sample_prior(const operon_model* model, uint64_t stream_index,
                                        int transform, double* out);

operon_status operon_transform_lognormal(const double* w, int n, double alpha_m, double beta_m,
                                         double* m_out);

/* Seeded synthetic ground-truth field (bump generator, versioned). */
operon_status operon_truth_field(const operon_model* model, uint64_t seed, double* w_out);

/* ---- datasets ---- */
operon_status operon_dataset_generate(const operon_model* model, int n, uint64_t seed, int threads,
                                      operon_dataset** out);
operon_status operon_dataset_split(operon_dataset* ds, int n_train, int n_test, uint64_t seed);
/* Resamples all rows onto the n1 x n2 grid and fits normalization statistics
 * over the training rows (requires a split). */
operon_status operon_dataset_add_grid(operon_dataset* ds, int n1, int n2);
operon_status operon_dataset_save(const operon_dataset* ds, const char* dir);
operon_status operon_dataset_load(const char* dir, operon_dataset** out);
void operon_dataset_destroy(operon_dataset* ds);

int operon_dataset_rows(const operon_dataset* ds);
int operon_dataset_pm(const operon_dataset* ds);
int operon_dataset_pu(const operon_dataset* ds);
operon_status operon_dataset_x_row(const operon_dataset* ds, int row, double* out);
operon_status operon_dataset_y_row(const operon_dataset* ds, int row, double* out);

/* Singular-value spectrum of the centered/scaled train rows; CSV columns
 * mode,sigma,sigma_rel_max,energy_fraction. target: "input" | "output". */
operon_status operon_dataset_spectrum_csv(const operon_dataset* ds, const char* target,
                                          const char* csv_path);

/* ---- surrogate training ---- */
typedef struct operon_train_opts {
    int epochs;
    int batch_size;
    double lr;
    double weight_decay;
    uint64_t seed;
    int depth;      /* MLP layers (DeepONet branch/trunk, PCANet core) */
    int width;      /* hidden width */
    int n_tr;       /* DeepONet trunk outputs */
    int r_m, r_u;   /* PCANet reduced dimensions */
    int d_h;        /* FNO channel width */
    int fno_layers; /* FNO spectral layers */
    int k_max;      /* FNO retained modes per axis */
} operon_train_opts;

void operon_train_opts_defaults(operon_train_opts* opts);

/* arch: "deeponet" | "pcanet" | "fno". Writes checkpoint plus loss.csv into
 * out_dir; pass resume_dir to continue a saved run up to opts->epochs.
 * out_or_null receives the trained handle when non-null. */
operon_status operon_train(const char* arch, const operon_dataset* ds,
                           const operon_train_opts* opts, const char* resume_dir,
                           const char* out_dir, operon_surrogate** out_or_null);

operon_status operon_surrogate_load(const char* dir, operon_surrogate** out);
void operon_surrogate_destroy(operon_surrogate* s);

int operon_surrogate_node_count(const operon_surrogate* s);
int operon_surrogate_output_components(const operon_surrogate* s);
const char* operon_surrogate_arch(const operon_surrogate* s);

operon_status operon_surrogate_predict(const operon_surrogate* s, const double* m, double* u_out);

/* Per-sample relative l2 errors (percent) against the stored solutions of the
 * chosen rows ("train" | "test"); optionally written as CSV. */
operon_status operon_surrogate_eval(const operon_surrogate* s, const operon_dataset* ds,
                                    const char* which, const char* csv_path_or_null,
                                    double* median_out, double* mean_out);

/* ---- observations and pCN inversion ---- */
operon_status operon_observation_create(const operon_model* model, const double* true_w,
                                        double noise_fraction, int grid_n,
                                        operon_observation** out);
/* Rebuild an observation from stored data (grid_n x grid_n points over the
 * model's domain, component-blocked o of length d_o). */
operon_status operon_observation_create_raw(const operon_model* model, const double* o, int d_o,
                                            double sigma_o, int grid_n, operon_observation** out);
void operon_observation_destroy(operon_observation* obs);
int operon_observation_size(const operon_observation* obs);
double operon_observation_sigma(const operon_observation* obs);
operon_status operon_observation_data(const operon_observation* obs, double* o_out);

/* pCN chain with the FEM forward (surrogate NULL) or a surrogate forward.
 * Writes an incremental trace (meta.json, samples.bin, chain.csv) when
 * trace_dir is non-null. posterior_mean_w_out has node_count entries. */
operon_status operon_mcmc_run(const operon_model* model, const operon_surrogate* surrogate_or_null,
                              const operon_observation* obs, int k_max, int k_burn, double beta,
                              uint64_t seed, const char* trace_dir_or_null,
                              double* posterior_mean_w_out, double* acceptance_rate_out);

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* OPERON_H */
