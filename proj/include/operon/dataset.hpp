#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "operon/dimred.hpp"
#include "operon/forward.hpp"
#include "operon/grid_transfer.hpp"
#include "operon/mesh.hpp"

namespace operon {

struct DatasetMeta {
    std::string format_version = "1";
    std::string problem;
    int nx = 0, ny = 0;
    double L1 = 1.0, L2 = 1.0;
    double a_c = 0.0, b_c = 1.0, c_c = 0.0;
    bool b_c_is_field = false;
    double alpha_m = 1.0, beta_m = 0.0;
    std::uint64_t prior_seed = 0;
    std::uint64_t seed = 0;
    int N = 0, p_m = 0, p_u = 0, d_o = 1;

    // split; empty index arrays mean "not split yet"
    int n_train = 0, n_test = 0;
    std::uint64_t split_seed = 0;
    std::vector<int> train_indices, test_indices;

    // grid resampling; 0 means absent
    int grid_n1 = 0, grid_n2 = 0;
};

/// Paired samples (m^I, u^I): X stores the transformed parameter m (not w),
/// row-correspondent with Y. Optional grid arrays for the FNO path with the
/// per-grid-point normalization statistics fitted on training rows only.
struct Dataset {
    DatasetMeta meta;
    std::vector<double> X;      // N x p_m
    std::vector<double> Y;      // N x p_u
    std::vector<double> Xgrid;  // N x n1 x n2 x 3, channels (m, x1, x2)
    std::vector<double> Ygrid;  // N x n1 x n2 x d_o
    Normalizer grid_norm_in;    // over n1*n2 m-values
    Normalizer grid_norm_out;   // over n1*n2*d_o values
    NodalField b_c_field;       // only when meta.b_c_is_field

    bool has_grid() const { return meta.grid_n1 > 0; }
    bool has_split() const { return !meta.train_indices.empty(); }

    const double* x_row(int i) const { return X.data() + static_cast<std::size_t>(i) * meta.p_m; }
    const double* y_row(int i) const { return Y.data() + static_cast<std::size_t>(i) * meta.p_u; }

    // mesh/prior/model reconstructed deterministically from the metadata
    std::shared_ptr<const Mesh> make_mesh() const;
    std::shared_ptr<ForwardModel> make_model() const;
};

/// Row view sharing the dataset's storage.
struct DatasetView {
    const Dataset* ds = nullptr;
    std::vector<int> indices;

    int size() const { return static_cast<int>(indices.size()); }
    const double* x_row(int k) const { return ds->x_row(indices[k]); }
    const double* y_row(int k) const { return ds->y_row(indices[k]); }
};

/// N independent prior draws, transformed and solved; sample I uses the RNG
/// substream (seed, I) so results do not depend on the worker count. A failed
/// forward solve is redrawn from the sample's own stream, at most 3 times.
Dataset generate(const ForwardModel& model, int N, std::uint64_t seed, int threads = 1);

/// Seeded shuffle then partition; stores the index sets in the metadata.
void split(Dataset& ds, int n_train, int n_test, std::uint64_t seed);
DatasetView train_view(const Dataset& ds);
DatasetView test_view(const Dataset& ds);

/// Fills Xgrid/Ygrid by resampling every row onto the n1 x n2 grid and fits
/// the normalization statistics over the training rows. Requires a split.
void to_grid_dataset(Dataset& ds, const GridTransfer& transfer);

// Directory layout: meta.json, X.bin, Y.bin, optional Xgrid.bin/Ygrid.bin/
// norm.json/b_c.bin. Bit-exact round trip.
void save_dataset(const Dataset& ds, const std::string& dir);
Dataset load_dataset(const std::string& dir);

} // namespace operon
