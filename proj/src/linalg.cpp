#include "gmsurf/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numeric>
#include <ostream>
#include <string>

namespace gmsurf {

namespace {

int default_iters(int n, int max_iter) { return max_iter > 0 ? max_iter : 10 * n; }

void require(bool cond, const std::string& msg) {
  if (!cond) throw ConsistencyError(msg);
}

}  // namespace

SparseMatrix SparseMatrix::from_triplets(int n_rows, int n_cols,
                                         const std::vector<int>& rows,
                                         const std::vector<int>& cols,
                                         const std::vector<double>& vals,
                                         bool symmetric_hint) {
  require(rows.size() == cols.size() && rows.size() == vals.size(),
          "from_triplets: length mismatch");
  std::vector<std::size_t> order(rows.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return rows[a] != rows[b] ? rows[a] < rows[b] : cols[a] < cols[b];
  });

  SparseMatrix m;
  m.n_rows = n_rows;
  m.n_cols = n_cols;
  m.symmetry_flag = symmetric_hint;
  m.column_indices.reserve(rows.size());
  m.values.reserve(rows.size());
  std::vector<int> merged_rows;
  merged_rows.reserve(rows.size());
  int last_row = -1, last_col = -1;
  for (std::size_t k = 0; k < order.size(); ++k) {
    const int i = rows[order[k]];
    const int j = cols[order[k]];
    const double v = vals[order[k]];
    require(i >= 0 && i < n_rows && j >= 0 && j < n_cols,
            "from_triplets: index out of range");
    if (i == last_row && j == last_col) {
      m.values.back() += v;  // duplicate entry: accumulate
    } else {
      merged_rows.push_back(i);
      m.column_indices.push_back(j);
      m.values.push_back(v);
      last_row = i;
      last_col = j;
    }
  }
  m.row_offsets.assign(n_rows + 1, 0);
  for (int i : merged_rows) ++m.row_offsets[i + 1];
  for (int i = 0; i < n_rows; ++i) m.row_offsets[i + 1] += m.row_offsets[i];
  return m;
}

double SparseMatrix::at(int i, int j) const {
  const int lo = row_offsets[i], hi = row_offsets[i + 1];
  const auto first = column_indices.begin() + lo;
  const auto last = column_indices.begin() + hi;
  const auto it = std::lower_bound(first, last, j);
  if (it != last && *it == j) return values[lo + (it - first)];
  return 0.0;
}

void SparseMatrix::multiply(const Vector& x, Vector& y) const {
  y.resize(n_rows);
  for (int i = 0; i < n_rows; ++i) {
    double acc = 0.0;
    for (int k = row_offsets[i]; k < row_offsets[i + 1]; ++k)
      acc += values[k] * x[column_indices[k]];
    y[i] = acc;
  }
}

Vector SparseMatrix::multiply(const Vector& x) const {
  Vector y;
  multiply(x, y);
  return y;
}

Vector SparseMatrix::diagonal() const {
  Vector d(n_rows, 0.0);
  for (int i = 0; i < n_rows; ++i) d[i] = at(i, i);
  return d;
}

void SparseMatrix::check_invariants() const {
  require(static_cast<int>(row_offsets.size()) == n_rows + 1,
          "SparseMatrix: row_offsets size");
  require(row_offsets.front() == 0 && row_offsets.back() == nnz(),
          "SparseMatrix: offset bounds");
  double amax = 0.0;
  for (int i = 0; i < n_rows; ++i) {
    require(row_offsets[i] <= row_offsets[i + 1], "SparseMatrix: offsets not monotone");
    for (int k = row_offsets[i]; k < row_offsets[i + 1]; ++k) {
      require(column_indices[k] >= 0 && column_indices[k] < n_cols,
              "SparseMatrix: column index out of range");
      if (k > row_offsets[i])
        require(column_indices[k] > column_indices[k - 1],
                "SparseMatrix: column indices not strictly increasing");
      require(std::isfinite(values[k]), "SparseMatrix: non-finite value");
      amax = std::max(amax, std::abs(values[k]));
    }
  }
  if (symmetry_flag) {
    require(n_rows == n_cols, "SparseMatrix: symmetry_flag on non-square matrix");
    for (int i = 0; i < n_rows; ++i)
      for (int k = row_offsets[i]; k < row_offsets[i + 1]; ++k) {
        const int j = column_indices[k];
        require(std::abs(values[k] - at(j, i)) <= 1e-13 * amax,
                "SparseMatrix: symmetry violated at (" + std::to_string(i) + "," +
                    std::to_string(j) + ")");
      }
  }
}

void SparseMatrix::dump_triplets(std::ostream& os) const {
  char buf[64];
  for (int i = 0; i < n_rows; ++i)
    for (int k = row_offsets[i]; k < row_offsets[i + 1]; ++k) {
      std::snprintf(buf, sizeof buf, "%d %d %.17g\n", i, column_indices[k], values[k]);
      os << buf;
    }
}

double dot(const Vector& a, const Vector& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double norm2(const Vector& a) { return std::sqrt(dot(a, a)); }

double norm_inf(const Vector& a) {
  double s = 0.0;
  for (double x : a) s = std::max(s, std::abs(x));
  return s;
}

void solve_spd_inplace(const SparseMatrix& A, const Vector& b, Vector& x,
                       const SolveOpts& opts, CgWorkspace& ws, SolveInfo* info) {
  // x carries the initial guess on entry (resized/zeroed if the size differs).
  const int n = A.n_rows;
  const int itmax = default_iters(n, opts.max_iter);
  const double bnorm = norm2(b);
  if (opts.x0) {
    x = *opts.x0;
  } else if (static_cast<int>(x.size()) != n) {
    x.assign(n, 0.0);
  }
  if (bnorm == 0.0) {
    std::fill(x.begin(), x.end(), 0.0);
    if (info) *info = {0, 0.0};
    return;
  }
  Vector& r = ws.r;
  Vector& z = ws.z;
  Vector& p = ws.p;
  Vector& q = ws.q;
  // Jacobi preconditioner from the diagonal.
  static thread_local Vector dinv_tl;
  dinv_tl.resize(n);
  for (int i = 0; i < n; ++i) {
    double d = 0.0;
    for (int k = A.row_offsets[i]; k < A.row_offsets[i + 1]; ++k)
      if (A.column_indices[k] == i) d = A.values[k];
    if (d <= 0.0)
      throw SolverError("solve_spd: nonpositive diagonal entry (matrix not SPD)", 0.0, 0);
    dinv_tl[i] = 1.0 / d;
  }

  A.multiply(x, q);
  r.resize(n);
  for (int i = 0; i < n; ++i) r[i] = b[i] - q[i];
  int total_it = 0;
  for (int attempt = 0; attempt < 4; ++attempt) {
    double rn = norm2(r);
    if (rn <= opts.tol * bnorm) {
      if (info) *info = {total_it, rn / bnorm};
      return;
    }
    z.resize(n);
    p.resize(n);
    for (int i = 0; i < n; ++i) z[i] = dinv_tl[i] * r[i];
    p = z;
    double rz = dot(r, z);
    while (total_it < itmax) {
      A.multiply(p, q);
      const double pq = dot(p, q);
      if (pq <= 0.0) break;  // lost positive-definiteness numerically; restart
      const double alpha = rz / pq;
      for (int i = 0; i < n; ++i) x[i] += alpha * p[i];
      for (int i = 0; i < n; ++i) r[i] -= alpha * q[i];
      ++total_it;
      rn = norm2(r);
      if (rn <= opts.tol * bnorm) break;
      for (int i = 0; i < n; ++i) z[i] = dinv_tl[i] * r[i];
      const double rz_new = dot(r, z);
      const double beta = rz_new / rz;
      rz = rz_new;
      for (int i = 0; i < n; ++i) p[i] = z[i] + beta * p[i];
    }
    // Recompute the true residual; restart if rounding drift spoiled it.
    A.multiply(x, q);
    for (int i = 0; i < n; ++i) r[i] = b[i] - q[i];
    rn = norm2(r);
    if (rn <= opts.tol * bnorm) {
      if (info) *info = {total_it, rn / bnorm};
      return;
    }
    if (total_it >= itmax)
      throw SolverError("solve_spd: no convergence after " + std::to_string(total_it) +
                            " iterations (relative residual " + std::to_string(rn / bnorm) + ")",
                        rn / bnorm, total_it);
  }
  throw SolverError("solve_spd: stagnated across restarts", 0.0, total_it);
}

Vector solve_spd(const SparseMatrix& A, const Vector& b, const SolveOpts& opts,
                 SolveInfo* info) {
  CgWorkspace ws;
  Vector x(A.n_rows, 0.0);
  SolveOpts o = opts;
  if (opts.x0) {
    x = *opts.x0;
    o.x0 = nullptr;
  }
  solve_spd_inplace(A, b, x, o, ws, info);
  return x;
}

namespace {

// Preconditioned BiCGStab on a size-n operator given as a callable
// apply(x, y): y = A x. dinv is the inverse Jacobi diagonal.
// x holds the initial guess on entry and the solution on exit.
void bicgstab(int n, const std::function<void(const Vector&, Vector&)>& apply,
              const Vector& b, const Vector& dinv, Vector& x, double tol,
              int itmax, SolveInfo* info) {
  const double bnorm = norm2(b);
  if (bnorm == 0.0) {
    std::fill(x.begin(), x.end(), 0.0);
    if (info) *info = {0, 0.0};
    return;
  }
  Vector r(n), r0(n), p(n), ph(n), v(n), s(n), sh(n), t(n), tmp(n);
  int total_it = 0;
  for (int attempt = 0; attempt < 4; ++attempt) {
    apply(x, tmp);
    for (int i = 0; i < n; ++i) r[i] = b[i] - tmp[i];
    double rn = norm2(r);
    if (rn <= tol * bnorm) {
      if (info) *info = {total_it, rn / bnorm};
      return;
    }
    r0 = r;
    double rho = 1.0, alpha = 1.0, omega = 1.0;
    std::fill(p.begin(), p.end(), 0.0);
    std::fill(v.begin(), v.end(), 0.0);
    bool breakdown = false;
    while (total_it < itmax && !breakdown) {
      const double rho_new = dot(r0, r);
      if (std::abs(rho_new) < 1e-300) {
        breakdown = true;
        break;
      }
      const double beta = (rho_new / rho) * (alpha / omega);
      rho = rho_new;
      for (int i = 0; i < n; ++i) p[i] = r[i] + beta * (p[i] - omega * v[i]);
      for (int i = 0; i < n; ++i) ph[i] = dinv[i] * p[i];
      apply(ph, v);
      const double r0v = dot(r0, v);
      if (std::abs(r0v) < 1e-300) {
        breakdown = true;
        break;
      }
      alpha = rho / r0v;
      for (int i = 0; i < n; ++i) s[i] = r[i] - alpha * v[i];
      ++total_it;
      if (norm2(s) <= tol * bnorm) {
        for (int i = 0; i < n; ++i) x[i] += alpha * ph[i];
        break;
      }
      for (int i = 0; i < n; ++i) sh[i] = dinv[i] * s[i];
      apply(sh, t);
      const double tt = dot(t, t);
      if (tt < 1e-300) {
        breakdown = true;
        break;
      }
      omega = dot(t, s) / tt;
      for (int i = 0; i < n; ++i) x[i] += alpha * ph[i] + omega * sh[i];
      for (int i = 0; i < n; ++i) r[i] = s[i] - omega * t[i];
      if (norm2(r) <= tol * bnorm) break;
      if (std::abs(omega) < 1e-300) breakdown = true;
    }
    apply(x, tmp);
    for (int i = 0; i < n; ++i) r[i] = b[i] - tmp[i];
    rn = norm2(r);
    if (rn <= tol * bnorm) {
      if (info) *info = {total_it, rn / bnorm};
      return;
    }
    if (total_it >= itmax)
      throw SolverError("solve_coupled: no convergence after " + std::to_string(total_it) +
                            " iterations (relative residual " + std::to_string(rn / bnorm) + ")",
                        rn / bnorm, total_it);
    // else: restart from current x (handles breakdown / drift)
  }
  throw SolverError("solve_coupled: stagnated across restarts", 0.0, total_it);
}

void positivity_assert(const Vector& x1, const Vector& x2, const char* what) {
  double xinf = std::max(norm_inf(x1), norm_inf(x2));
  const double floor = -1e-12 * xinf;
  for (std::size_t i = 0; i < x1.size(); ++i)
    if (x1[i] < floor)
      throw PositivityError(std::string(what) +
                                ": negative first-block component at node " +
                                std::to_string(i) + " (value " + std::to_string(x1[i]) + ")",
                            static_cast<long>(i), x1[i]);
  for (std::size_t i = 0; i < x2.size(); ++i)
    if (x2[i] < floor)
      throw PositivityError(std::string(what) +
                                ": negative second-block component at node " +
                                std::to_string(i) + " (value " + std::to_string(x2[i]) + ")",
                            static_cast<long>(i), x2[i]);
}

}  // namespace

std::pair<Vector, Vector> solve_coupled(const BlockSystem& S, const SolveOpts& opts,
                                        SolveInfo* info, bool positivity_check) {
  require(S.A11 != nullptr && S.A22 != nullptr, "solve_coupled: diagonal blocks required");
  const int n1 = S.A11->n_rows;
  const int n2 = S.A22->n_rows;
  const int n = n1 + n2;
  Vector b(n);
  std::copy(S.rhs1.begin(), S.rhs1.end(), b.begin());
  std::copy(S.rhs2.begin(), S.rhs2.end(), b.begin() + n1);

  Vector dinv(n);
  for (int i = 0; i < n1; ++i) {
    const double d = S.A11->at(i, i);
    dinv[i] = (d != 0.0) ? 1.0 / d : 1.0;
  }
  for (int i = 0; i < n2; ++i) {
    const double d = S.A22->at(i, i);
    dinv[n1 + i] = (d != 0.0) ? 1.0 / d : 1.0;
  }

  Vector x1(n1, 0.0), x2(n2, 0.0), y1(n1), y2(n2), t1(n1), t2(n2);
  if (opts.x0) {
    const Vector& g = *opts.x0;
    require(static_cast<int>(g.size()) == n, "solve_coupled: x0 size mismatch");
    std::copy(g.begin(), g.begin() + n1, x1.begin());
    std::copy(g.begin() + n1, g.end(), x2.begin());
  }
  Vector x(n);
  std::copy(x1.begin(), x1.end(), x.begin());
  std::copy(x2.begin(), x2.end(), x.begin() + n1);

  auto apply = [&](const Vector& in, Vector& out) {
    out.resize(n);
    const Vector xin1(in.begin(), in.begin() + n1);
    const Vector xin2(in.begin() + n1, in.end());
    S.A11->multiply(xin1, y1);
    if (S.A12) {
      S.A12->multiply(xin2, t1);
      for (int i = 0; i < n1; ++i) y1[i] += t1[i];
    }
    S.A22->multiply(xin2, y2);
    if (S.A21) {
      S.A21->multiply(xin1, t2);
      for (int i = 0; i < n2; ++i) y2[i] += t2[i];
    }
    std::copy(y1.begin(), y1.end(), out.begin());
    std::copy(y2.begin(), y2.end(), out.begin() + n1);
  };

  bicgstab(n, apply, b, dinv, x, opts.tol, default_iters(n, opts.max_iter), info);

  std::pair<Vector, Vector> result{Vector(x.begin(), x.begin() + n1),
                                   Vector(x.begin() + n1, x.end())};
  if (positivity_check) positivity_assert(result.first, result.second, "solve_coupled");
  return result;
}

void solve_coupled_diag_offblocks(const SparseMatrix& A11, const SparseMatrix& A22,
                                  const Vector& offdiag12, const Vector& offdiag21,
                                  const Vector& rhs1, const Vector& rhs2,
                                  Vector& x1, Vector& x2, const SolveOpts& opts,
                                  BiCgWorkspace& ws, SolveInfo* info,
                                  bool positivity_check) {
  const int n = A11.n_rows;
  const int itmax = default_iters(2 * n, opts.max_iter);
  const double bnorm = std::sqrt(dot(rhs1, rhs1) + dot(rhs2, rhs2));
  x1.resize(n);
  x2.resize(n);
  if (bnorm == 0.0) {
    std::fill(x1.begin(), x1.end(), 0.0);
    std::fill(x2.begin(), x2.end(), 0.0);
    if (info) *info = {0, 0.0};
    return;
  }

  static thread_local Vector dinv1, dinv2;
  dinv1.resize(n);
  dinv2.resize(n);
  for (int i = 0; i < n; ++i) {
    double d = 0.0;
    for (int k = A11.row_offsets[i]; k < A11.row_offsets[i + 1]; ++k)
      if (A11.column_indices[k] == i) d = A11.values[k];
    dinv1[i] = (d != 0.0) ? 1.0 / d : 1.0;
    d = 0.0;
    for (int k = A22.row_offsets[i]; k < A22.row_offsets[i + 1]; ++k)
      if (A22.column_indices[k] == i) d = A22.values[k];
    dinv2[i] = (d != 0.0) ? 1.0 / d : 1.0;
  }

  auto resize_all = [&](int m) {
    for (Vector* v :
         {&ws.r1, &ws.r2, &ws.r01, &ws.r02, &ws.p1, &ws.p2, &ws.ph1, &ws.ph2, &ws.v1,
          &ws.v2, &ws.s1, &ws.s2, &ws.sh1, &ws.sh2, &ws.t1, &ws.t2})
      v->resize(m);
  };
  resize_all(n);

  // y = A x for the 2x2 block operator with diagonal off-blocks.
  auto apply = [&](const Vector& in1, const Vector& in2, Vector& out1, Vector& out2) {
    A11.multiply(in1, out1);
    for (int i = 0; i < n; ++i) out1[i] += offdiag12[i] * in2[i];
    A22.multiply(in2, out2);
    for (int i = 0; i < n; ++i) out2[i] += offdiag21[i] * in1[i];
  };
  auto dot2 = [&](const Vector& a1, const Vector& a2, const Vector& b1, const Vector& b2) {
    return dot(a1, b1) + dot(a2, b2);
  };

  int total_it = 0;
  for (int attempt = 0; attempt < 4; ++attempt) {
    apply(x1, x2, ws.t1, ws.t2);
    for (int i = 0; i < n; ++i) ws.r1[i] = rhs1[i] - ws.t1[i];
    for (int i = 0; i < n; ++i) ws.r2[i] = rhs2[i] - ws.t2[i];
    double rn = std::sqrt(dot2(ws.r1, ws.r2, ws.r1, ws.r2));
    if (rn <= opts.tol * bnorm) {
      if (info) *info = {total_it, rn / bnorm};
      if (positivity_check) positivity_assert(x1, x2, "solve_coupled");
      return;
    }
    ws.r01 = ws.r1;
    ws.r02 = ws.r2;
    double rho = 1.0, alpha = 1.0, omega = 1.0;
    std::fill(ws.p1.begin(), ws.p1.end(), 0.0);
    std::fill(ws.p2.begin(), ws.p2.end(), 0.0);
    std::fill(ws.v1.begin(), ws.v1.end(), 0.0);
    std::fill(ws.v2.begin(), ws.v2.end(), 0.0);
    bool breakdown = false;
    while (total_it < itmax && !breakdown) {
      const double rho_new = dot2(ws.r01, ws.r02, ws.r1, ws.r2);
      if (std::abs(rho_new) < 1e-300) {
        breakdown = true;
        break;
      }
      const double beta = (rho_new / rho) * (alpha / omega);
      rho = rho_new;
      for (int i = 0; i < n; ++i) ws.p1[i] = ws.r1[i] + beta * (ws.p1[i] - omega * ws.v1[i]);
      for (int i = 0; i < n; ++i) ws.p2[i] = ws.r2[i] + beta * (ws.p2[i] - omega * ws.v2[i]);
      for (int i = 0; i < n; ++i) ws.ph1[i] = dinv1[i] * ws.p1[i];
      for (int i = 0; i < n; ++i) ws.ph2[i] = dinv2[i] * ws.p2[i];
      apply(ws.ph1, ws.ph2, ws.v1, ws.v2);
      const double r0v = dot2(ws.r01, ws.r02, ws.v1, ws.v2);
      if (std::abs(r0v) < 1e-300) {
        breakdown = true;
        break;
      }
      alpha = rho / r0v;
      for (int i = 0; i < n; ++i) ws.s1[i] = ws.r1[i] - alpha * ws.v1[i];
      for (int i = 0; i < n; ++i) ws.s2[i] = ws.r2[i] - alpha * ws.v2[i];
      ++total_it;
      if (std::sqrt(dot2(ws.s1, ws.s2, ws.s1, ws.s2)) <= opts.tol * bnorm) {
        for (int i = 0; i < n; ++i) x1[i] += alpha * ws.ph1[i];
        for (int i = 0; i < n; ++i) x2[i] += alpha * ws.ph2[i];
        break;
      }
      for (int i = 0; i < n; ++i) ws.sh1[i] = dinv1[i] * ws.s1[i];
      for (int i = 0; i < n; ++i) ws.sh2[i] = dinv2[i] * ws.s2[i];
      apply(ws.sh1, ws.sh2, ws.t1, ws.t2);
      const double tt = dot2(ws.t1, ws.t2, ws.t1, ws.t2);
      if (tt < 1e-300) {
        breakdown = true;
        break;
      }
      omega = dot2(ws.t1, ws.t2, ws.s1, ws.s2) / tt;
      for (int i = 0; i < n; ++i) x1[i] += alpha * ws.ph1[i] + omega * ws.sh1[i];
      for (int i = 0; i < n; ++i) x2[i] += alpha * ws.ph2[i] + omega * ws.sh2[i];
      for (int i = 0; i < n; ++i) ws.r1[i] = ws.s1[i] - omega * ws.t1[i];
      for (int i = 0; i < n; ++i) ws.r2[i] = ws.s2[i] - omega * ws.t2[i];
      if (std::sqrt(dot2(ws.r1, ws.r2, ws.r1, ws.r2)) <= opts.tol * bnorm) break;
      if (std::abs(omega) < 1e-300) breakdown = true;
    }
    apply(x1, x2, ws.t1, ws.t2);
    for (int i = 0; i < n; ++i) ws.r1[i] = rhs1[i] - ws.t1[i];
    for (int i = 0; i < n; ++i) ws.r2[i] = rhs2[i] - ws.t2[i];
    rn = std::sqrt(dot2(ws.r1, ws.r2, ws.r1, ws.r2));
    if (rn <= opts.tol * bnorm) {
      if (info) *info = {total_it, rn / bnorm};
      if (positivity_check) positivity_assert(x1, x2, "solve_coupled");
      return;
    }
    if (total_it >= itmax)
      throw SolverError("solve_coupled: no convergence after " + std::to_string(total_it) +
                            " iterations (relative residual " + std::to_string(rn / bnorm) + ")",
                        rn / bnorm, total_it);
  }
  throw SolverError("solve_coupled: stagnated across restarts", 0.0, total_it);
}

}  // namespace gmsurf
