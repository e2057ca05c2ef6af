#pragma once

#include <vector>

namespace operon {

/// Compressed sparse row matrix. All assembled forms in this library are
/// structurally symmetric and square.
struct SparseOperator {
    int rows = 0, cols = 0;
    std::vector<int> row_offsets;  // size rows+1
    std::vector<int> col_indices;
    std::vector<double> values;

    int nnz() const { return static_cast<int>(values.size()); }
    // Value at (r, c); 0 if the entry is not in the pattern.
    double at(int r, int c) const;
    // Pointer to the stored entry (r, c), nullptr if absent.
    double* find(int r, int c);

    std::vector<double> multiply(const std::vector<double>& x) const;
    std::vector<double> diagonal() const;
    double sum_entries() const;
};

// Duplicate-tolerant COO accumulator; compress() sums duplicates into CSR.
class TripletAccumulator {
public:
    TripletAccumulator(int rows, int cols) : rows_(rows), cols_(cols) {}
    void add(int r, int c, double v) {
        rows_idx_.push_back(r);
        cols_idx_.push_back(c);
        vals_.push_back(v);
    }
    SparseOperator compress() const;

private:
    int rows_, cols_;
    std::vector<int> rows_idx_, cols_idx_;
    std::vector<double> vals_;
};

/// Symmetric elimination of Dirichlet rows/columns: constrained unknowns get
/// an identity row and the prescribed value in b; couplings move to the rhs.
/// Keeps the operator SPD for conjugate gradients.
void apply_dirichlet(SparseOperator& A, std::vector<double>& b, const std::vector<int>& nodes,
                     const std::vector<double>& values);

/// Jacobi-preconditioned conjugate gradients. Guarantees
/// ||A x - b|| / max(||b||, eps) <= tol on return; iteration cap 50*dim.
/// Throws solver_failure (with the final residual) past the cap and
/// invalid_configuration on a non-SPD breakdown.
std::vector<double> solve_spd(const SparseOperator& A, const std::vector<double>& b,
                              double tol = 1e-10);

} // namespace operon
