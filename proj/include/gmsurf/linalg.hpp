#pragma once

#include <cstddef>
#include <iosfwd>
#include <utility>
#include <vector>

#include "gmsurf/errors.hpp"

namespace gmsurf {

using Vector = std::vector<double>;

// Compressed sparse row matrix. Column indices are strictly increasing within
// each row. symmetry_flag is a structural hint checked by check_invariants().
struct SparseMatrix {
  int n_rows = 0;
  int n_cols = 0;
  std::vector<int> row_offsets;     // size n_rows + 1
  std::vector<int> column_indices;  // size nnz
  std::vector<double> values;       // size nnz
  bool symmetry_flag = false;

  // Build from (i, j, v) triplets; duplicate entries are summed.
  static SparseMatrix from_triplets(int n_rows, int n_cols,
                                    const std::vector<int>& rows,
                                    const std::vector<int>& cols,
                                    const std::vector<double>& vals,
                                    bool symmetric_hint = false);

  int nnz() const { return static_cast<int>(values.size()); }

  // Stored value at (i, j); 0 if the entry is not stored.
  double at(int i, int j) const;

  // y = A x (y resized if needed).
  void multiply(const Vector& x, Vector& y) const;
  Vector multiply(const Vector& x) const;

  Vector diagonal() const;

  // Throws ConsistencyError on malformed structure or (if symmetry_flag) on
  // |a_ij - a_ji| > 1e-13 * max|a|.
  void check_invariants() const;

  // One "row col value" line per stored entry.
  void dump_triplets(std::ostream& os) const;
};

// Options shared by the iterative solvers. max_iter == 0 means 10 * n_rows.
struct SolveOpts {
  double tol = 1e-10;
  int max_iter = 0;
  const Vector* x0 = nullptr;  // initial guess; zero vector if null
};

struct SolveInfo {
  int iterations = 0;
  double residual = 0.0;  // final relative residual |b - A x| / |b|
};

// Jacobi-preconditioned conjugate gradients for symmetric positive definite A.
// Throws SolverError on non-convergence.
Vector solve_spd(const SparseMatrix& A, const Vector& b,
                 const SolveOpts& opts = {}, SolveInfo* info = nullptr);

// 2x2 block system over the (u, v) unknowns:
//   [A11 A12] [x1]   [rhs1]
//   [A21 A22] [x2] = [rhs2]
// For the low-order scheme the diagonal blocks are M-matrices and the
// off-diagonal blocks are entrywise <= 0 (so the inverse is nonnegative).
struct BlockSystem {
  const SparseMatrix* A11 = nullptr;
  const SparseMatrix* A12 = nullptr;  // may be null (zero block)
  const SparseMatrix* A21 = nullptr;  // may be null (zero block)
  const SparseMatrix* A22 = nullptr;
  Vector rhs1, rhs2;
};

// Jacobi (right-)preconditioned BiCGStab on the assembled 2N x 2N system.
// After convergence, any component below -1e-12 * |x|_inf triggers a
// PositivityError: with the documented preconditions the exact solution is
// entrywise nonnegative for nonnegative right-hand sides, so a materially
// negative component signals a broken precondition, not roundoff.
// positivity_check can be disabled for general (non-M-matrix) systems.
std::pair<Vector, Vector> solve_coupled(const BlockSystem& S,
                                        const SolveOpts& opts = {},
                                        SolveInfo* info = nullptr,
                                        bool positivity_check = true);

// Allocation-free kernels used by the time steppers (workspaces owned by the
// caller). Semantics identical to solve_spd / solve_coupled.
struct CgWorkspace {
  Vector r, z, p, q;
};
void solve_spd_inplace(const SparseMatrix& A, const Vector& b, Vector& x,
                       const SolveOpts& opts, CgWorkspace& ws,
                       SolveInfo* info = nullptr);

// Coupled solve where the off-diagonal blocks are diagonal matrices (the
// lumped cross-coupling case): offdiag12/offdiag21 hold the diagonals.
struct BiCgWorkspace {
  Vector r1, r2, r01, r02, p1, p2, ph1, ph2, v1, v2, s1, s2, sh1, sh2, t1, t2;
};
void solve_coupled_diag_offblocks(const SparseMatrix& A11,
                                  const SparseMatrix& A22,
                                  const Vector& offdiag12,
                                  const Vector& offdiag21,
                                  const Vector& rhs1, const Vector& rhs2,
                                  Vector& x1, Vector& x2,
                                  const SolveOpts& opts, BiCgWorkspace& ws,
                                  SolveInfo* info = nullptr,
                                  bool positivity_check = true);

// Basic vector helpers (fixed, deterministic summation order).
double dot(const Vector& a, const Vector& b);
double norm2(const Vector& a);
double norm_inf(const Vector& a);

}  // namespace gmsurf
