#include "operon/sparse.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "operon/errors.hpp"

namespace operon {

double SparseOperator::at(int r, int c) const {
    for (int k = row_offsets[r]; k < row_offsets[r + 1]; ++k)
        if (col_indices[k] == c) return values[k];
    return 0.0;
}

double* SparseOperator::find(int r, int c) {
    for (int k = row_offsets[r]; k < row_offsets[r + 1]; ++k)
        if (col_indices[k] == c) return &values[k];
    return nullptr;
}

std::vector<double> SparseOperator::multiply(const std::vector<double>& x) const {
    if (static_cast<int>(x.size()) != cols) throw std::invalid_argument("SparseOperator::multiply: size mismatch");
    std::vector<double> y(rows, 0.0);
    for (int r = 0; r < rows; ++r) {
        double acc = 0.0;
        for (int k = row_offsets[r]; k < row_offsets[r + 1]; ++k) acc += values[k] * x[col_indices[k]];
        y[r] = acc;
    }
    return y;
}

std::vector<double> SparseOperator::diagonal() const {
    std::vector<double> d(rows, 0.0);
    for (int r = 0; r < rows; ++r) d[r] = at(r, r);
    return d;
}

double SparseOperator::sum_entries() const {
    double s = 0.0;
    for (double v : values) s += v;
    return s;
}

SparseOperator TripletAccumulator::compress() const {
    const std::size_t n = vals_.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (rows_idx_[a] != rows_idx_[b]) return rows_idx_[a] < rows_idx_[b];
        return cols_idx_[a] < cols_idx_[b];
    });

    SparseOperator A;
    A.rows = rows_;
    A.cols = cols_;
    A.row_offsets.assign(rows_ + 1, 0);
    int prev_r = -1, prev_c = -1;
    for (std::size_t idx : order) {
        const int r = rows_idx_[idx];
        const int c = cols_idx_[idx];
        if (r == prev_r && c == prev_c) {
            A.values.back() += vals_[idx];
        } else {
            A.col_indices.push_back(c);
            A.values.push_back(vals_[idx]);
            A.row_offsets[r + 1] += 1;
            prev_r = r;
            prev_c = c;
        }
    }
    for (int r = 0; r < rows_; ++r) A.row_offsets[r + 1] += A.row_offsets[r];
    return A;
}

void apply_dirichlet(SparseOperator& A, std::vector<double>& b, const std::vector<int>& nodes,
                     const std::vector<double>& values) {
    if (nodes.size() != values.size()) throw std::invalid_argument("apply_dirichlet: nodes/values size mismatch");
    if (nodes.empty()) return;

    std::vector<char> constrained(A.rows, 0);
    std::vector<double> prescribed(A.rows, 0.0);
    for (std::size_t k = 0; k < nodes.size(); ++k) {
        const int n = nodes[k];
        if (n < 0 || n >= A.rows) throw std::invalid_argument("apply_dirichlet: node index out of range");
        constrained[n] = 1;
        prescribed[n] = values[k];
    }

    for (int r = 0; r < A.rows; ++r) {
        for (int k = A.row_offsets[r]; k < A.row_offsets[r + 1]; ++k) {
            const int c = A.col_indices[k];
            if (constrained[r]) {
                A.values[k] = (c == r) ? 1.0 : 0.0;
            } else if (constrained[c]) {
                b[r] -= A.values[k] * prescribed[c];
                A.values[k] = 0.0;
            }
        }
    }
    for (int r = 0; r < A.rows; ++r)
        if (constrained[r]) b[r] = prescribed[r];
}

std::vector<double> solve_spd(const SparseOperator& A, const std::vector<double>& b, double tol) {
    const int n = A.rows;
    if (A.cols != n || static_cast<int>(b.size()) != n) throw std::invalid_argument("solve_spd: dimension mismatch");

    const double norm_b = std::sqrt(std::inner_product(b.begin(), b.end(), b.begin(), 0.0));
    std::vector<double> x(n, 0.0);
    if (norm_b == 0.0) return x;

    const double target = tol * std::max(norm_b, 1e-300);
    std::vector<double> inv_diag = A.diagonal();
    for (double& d : inv_diag) {
        if (d <= 0.0) throw invalid_configuration("solve_spd: non-positive diagonal, operator is not SPD");
        d = 1.0 / d;
    }

    // Rows decoupled by Dirichlet elimination are solved exactly up front and
    // their residual pinned to zero, so CG never perturbs them.
    std::vector<char> decoupled(n, 1);
    for (int row = 0; row < n; ++row)
        for (int k = A.row_offsets[row]; k < A.row_offsets[row + 1]; ++k)
            if (A.col_indices[k] != row && A.values[k] != 0.0) {
                decoupled[row] = 0;
                break;
            }

    std::vector<double> x0(n, 0.0);
    for (int i = 0; i < n; ++i)
        if (decoupled[i]) x0[i] = b[i] * inv_diag[i];
    std::vector<double> r = A.multiply(x0);
    for (int i = 0; i < n; ++i) r[i] = decoupled[i] ? 0.0 : b[i] - r[i];
    x = x0;
    {
        const double r0 = std::sqrt(std::inner_product(r.begin(), r.end(), r.begin(), 0.0));
        if (r0 <= target) return x;
    }

    std::vector<double> z(n), p(n), Ap(n);
    for (int i = 0; i < n; ++i) z[i] = inv_diag[i] * r[i];
    p = z;
    double rz = std::inner_product(r.begin(), r.end(), z.begin(), 0.0);

    const long max_iter = 50L * n;
    double res_norm = norm_b;
    for (long it = 0; it < max_iter; ++it) {
        Ap = A.multiply(p);
        const double pAp = std::inner_product(p.begin(), p.end(), Ap.begin(), 0.0);
        if (!(pAp > 0.0)) throw invalid_configuration("solve_spd: CG breakdown, operator is not SPD");
        const double alpha = rz / pAp;
        for (int i = 0; i < n; ++i) x[i] += alpha * p[i];
        for (int i = 0; i < n; ++i) r[i] -= alpha * Ap[i];

        res_norm = std::sqrt(std::inner_product(r.begin(), r.end(), r.begin(), 0.0));
        if (res_norm <= target) {
            // recurrence residual can drift; confirm with the true residual
            std::vector<double> true_r = A.multiply(x);
            for (int i = 0; i < n; ++i) true_r[i] = b[i] - true_r[i];
            const double true_norm =
                std::sqrt(std::inner_product(true_r.begin(), true_r.end(), true_r.begin(), 0.0));
            if (true_norm <= target) return x;
            r = true_r;
            res_norm = true_norm;
        }

        for (int i = 0; i < n; ++i) z[i] = inv_diag[i] * r[i];
        const double rz_next = std::inner_product(r.begin(), r.end(), z.begin(), 0.0);
        const double beta = rz_next / rz;
        rz = rz_next;
        for (int i = 0; i < n; ++i) p[i] = z[i] + beta * p[i];
    }
    throw solver_failure("solve_spd: conjugate gradients did not converge", res_norm / std::max(norm_b, 1e-300));
}

} // namespace operon
