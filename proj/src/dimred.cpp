#include "operon/dimred.hpp"

#include <cmath>
#include <stdexcept>

#include <Eigen/Dense>
#include <Eigen/SVD>

namespace operon {

void Normalizer::apply_inplace(double* row) const {
    for (std::size_t j = 0; j < mean.size(); ++j) row[j] = (row[j] - mean[j]) / (std_dev[j] + tol);
}

void Normalizer::invert_inplace(double* row) const {
    for (std::size_t j = 0; j < mean.size(); ++j) row[j] = row[j] * (std_dev[j] + tol) + mean[j];
}

std::vector<double> Normalizer::apply(const std::vector<double>& x) const {
    std::vector<double> out = x;
    apply_inplace(out.data());
    return out;
}

std::vector<double> Normalizer::invert(const std::vector<double>& z) const {
    std::vector<double> out = z;
    invert_inplace(out.data());
    return out;
}

Normalizer fit_normalizer(const std::vector<double>& X, int n_rows, int n_cols) {
    if (n_rows < 2) throw std::invalid_argument("fit_normalizer: need at least 2 rows");
    if (static_cast<std::size_t>(n_rows) * n_cols != X.size())
        throw std::invalid_argument("fit_normalizer: shape mismatch");

    Normalizer norm;
    norm.mean.assign(n_cols, 0.0);
    norm.std_dev.assign(n_cols, 0.0);
    for (int i = 0; i < n_rows; ++i)
        for (int j = 0; j < n_cols; ++j) norm.mean[j] += X[static_cast<std::size_t>(i) * n_cols + j];
    for (int j = 0; j < n_cols; ++j) norm.mean[j] /= n_rows;
    for (int i = 0; i < n_rows; ++i)
        for (int j = 0; j < n_cols; ++j) {
            const double d = X[static_cast<std::size_t>(i) * n_cols + j] - norm.mean[j];
            norm.std_dev[j] += d * d;
        }
    for (int j = 0; j < n_cols; ++j) norm.std_dev[j] = std::sqrt(norm.std_dev[j] / n_rows);
    return norm;
}

std::vector<double> Projector::project(const std::vector<double>& x) const {
    if (static_cast<int>(x.size()) != p) throw std::invalid_argument("Projector::project: dimension mismatch");
    std::vector<double> z(r, 0.0);
    for (int i = 0; i < r; ++i) {
        double acc = 0.0;
        const double* row = basis.data() + static_cast<std::size_t>(i) * p;
        for (int j = 0; j < p; ++j) acc += row[j] * x[j];
        z[i] = acc;
    }
    return z;
}

std::vector<double> Projector::lift(const std::vector<double>& z) const {
    if (static_cast<int>(z.size()) != r) throw std::invalid_argument("Projector::lift: dimension mismatch");
    std::vector<double> x(p, 0.0);
    for (int i = 0; i < r; ++i) {
        const double* row = basis.data() + static_cast<std::size_t>(i) * p;
        for (int j = 0; j < p; ++j) x[j] += row[j] * z[i];
    }
    return x;
}

Projector fit_projector(const std::vector<double>& Xhat, int n_rows, int n_cols, int r) {
    if (static_cast<std::size_t>(n_rows) * n_cols != Xhat.size())
        throw std::invalid_argument("fit_projector: shape mismatch");
    if (r < 1 || r > std::min(n_rows, n_cols)) throw std::invalid_argument("fit_projector: r out of range");

    // samples as columns: p x N
    Eigen::MatrixXd A(n_cols, n_rows);
    for (int i = 0; i < n_rows; ++i)
        for (int j = 0; j < n_cols; ++j) A(j, i) = Xhat[static_cast<std::size_t>(i) * n_cols + j];

    Eigen::BDCSVD<Eigen::MatrixXd> svd(A, Eigen::ComputeThinU);
    const auto& U = svd.matrixU();
    const auto& sv = svd.singularValues();

    Projector proj;
    proj.r = r;
    proj.p = n_cols;
    proj.singular_values.assign(sv.data(), sv.data() + sv.size());
    proj.basis.resize(static_cast<std::size_t>(r) * n_cols);
    for (int i = 0; i < r; ++i) {
        // deterministic sign: largest-magnitude entry positive
        int arg_max = 0;
        double best = 0.0;
        for (int j = 0; j < n_cols; ++j) {
            const double mag = std::abs(U(j, i));
            if (mag > best) {
                best = mag;
                arg_max = j;
            }
        }
        const double sign = U(arg_max, i) >= 0.0 ? 1.0 : -1.0;
        for (int j = 0; j < n_cols; ++j)
            proj.basis[static_cast<std::size_t>(i) * n_cols + j] = sign * U(j, i);
    }
    return proj;
}

} // namespace operon
