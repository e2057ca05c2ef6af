#pragma once

#include <vector>

namespace operon {

/// Per-column centering and scaling: transform is (x - mean) / (std + tol)
/// with the population standard deviation and guard tol = 1e-8.
struct Normalizer {
    std::vector<double> mean;
    std::vector<double> std_dev;
    double tol = 1e-8;

    std::size_t dim() const { return mean.size(); }
    void apply_inplace(double* row) const;
    void invert_inplace(double* row) const;
    std::vector<double> apply(const std::vector<double>& x) const;
    std::vector<double> invert(const std::vector<double>& z) const;
};

/// Fit over the N rows of a row-major N x p matrix; requires N >= 2.
Normalizer fit_normalizer(const std::vector<double>& X, int n_rows, int n_cols);

/// Rank-r orthogonal projector from the truncated left singular basis of the
/// data arranged p x N (samples as columns). Rows of `basis` are orthonormal
/// and sign-canonicalized so the largest-magnitude entry of each row is
/// positive; the full spectrum is kept for diagnostics.
struct Projector {
    std::vector<double> basis;  // r x p, row-major
    std::vector<double> singular_values;
    int r = 0;
    int p = 0;

    std::vector<double> project(const std::vector<double>& x) const;  // basis * x
    std::vector<double> lift(const std::vector<double>& z) const;     // basis^T * z
};

Projector fit_projector(const std::vector<double>& Xhat, int n_rows, int n_cols, int r);

} // namespace operon
