// Copyright 2026 The revpref Authors
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

// Dense phase-one simplex for small linear feasibility problems
//
//   find x  s.t.  A x <= b,  lower <= x <= upper.
//
// Variables are shifted to y = x - lower so every column lives in [0, U].
// Rows whose shifted right-hand side is negative receive an artificial
// column; the kernel minimizes the sum of artificials with a bounded-variable
// primal simplex under Bland's rule (smallest index enters, smallest basic
// index leaves on ties), so the pivot sequence is a pure function of the
// input.

#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "revpref/types.hpp"

namespace revpref {

class CycleLimit : public std::runtime_error {
 public:
  explicit CycleLimit(std::size_t pivots)
      : std::runtime_error("linfeas: pivot limit exceeded after " + std::to_string(pivots) + " pivots") {}
};

class LinfeasError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct LinearRow {
  std::vector<std::pair<std::size_t, double>> coeffs;
  double rhs = 0.0;
};

struct LinearSystem {
  std::size_t n_vars = 0;
  std::vector<LinearRow> rows;
  Vector lower;
  Vector upper;

  explicit LinearSystem(std::size_t n = 0, double lo = 0.0, double hi = std::numeric_limits<double>::infinity())
      : n_vars(n), lower(n, lo), upper(n, hi) {}

  void set_bounds(std::size_t j, double lo, double hi) {
    lower[j] = lo;
    upper[j] = hi;
  }

  /// Adds sum_k coeffs[k].second * x[coeffs[k].first] <= rhs.
  void add_row(std::vector<std::pair<std::size_t, double>> coeffs, double rhs) {
    rows.push_back(LinearRow{std::move(coeffs), rhs});
  }

  /// Largest violation of any row or bound at x (0 when x is feasible).
  double violation(const Vector& x) const {
    double worst = 0.0;
    for (std::size_t j = 0; j < n_vars; ++j) {
      worst = std::max(worst, lower[j] - x[j]);
      worst = std::max(worst, x[j] - upper[j]);
    }
    for (const auto& row : rows) {
      double lhs = 0.0;
      for (const auto& [j, a] : row.coeffs) lhs += a * x[j];
      worst = std::max(worst, lhs - row.rhs);
    }
    return worst;
  }

  void check() const {
    if (lower.size() != n_vars || upper.size() != n_vars) throw std::invalid_argument("linfeas: bound size mismatch");
    for (std::size_t j = 0; j < n_vars; ++j) {
      if (!std::isfinite(lower[j])) throw std::invalid_argument("linfeas: lower bounds must be finite");
      if (lower[j] > upper[j]) throw std::invalid_argument("linfeas: lower bound exceeds upper bound");
    }
    for (const auto& row : rows) {
      if (!std::isfinite(row.rhs)) throw std::invalid_argument("linfeas: non-finite right-hand side");
      for (const auto& [j, a] : row.coeffs) {
        if (j >= n_vars) throw std::invalid_argument("linfeas: column index out of range");
        if (!std::isfinite(a)) throw std::invalid_argument("linfeas: non-finite coefficient");
      }
    }
  }
};

struct LinfeasOptions {
  std::size_t max_pivots = 1'000'000;
  double feasibility_tol = 1e-9;
};

namespace detail {

/// Recomputes the tableau B^{-1} A0 and the basic values B^{-1}(b0 - N x_N)
/// from the initial tableau A0 for the current basis, removing the drift
/// accumulated by pivoting. Returns false if the basis matrix is singular.
inline bool reinvert(const std::vector<double>& A0, const std::vector<double>& b0, std::size_t m, std::size_t cols,
                     const std::vector<std::size_t>& basis, const std::vector<char>& is_basic, std::vector<double>& x,
                     std::vector<double>& tab) {
  if (m == 0) return true;
  const std::size_t w = m + cols + 1;  // [B | A0 | rhs]
  std::vector<double> aug(m * w, 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    const double* row = &A0[i * cols];
    double* out = &aug[i * w];
    for (std::size_t p = 0; p < m; ++p) out[p] = row[basis[p]];
    double rhs = b0[i];
    for (std::size_t j = 0; j < cols; ++j) {
      out[m + j] = row[j];
      if (!is_basic[j] && x[j] != 0.0) rhs -= row[j] * x[j];
    }
    out[m + cols] = rhs;
  }
  // Gauss-Jordan elimination with partial pivoting.
  for (std::size_t c = 0; c < m; ++c) {
    std::size_t piv = c;
    for (std::size_t r = c + 1; r < m; ++r)
      if (std::abs(aug[r * w + c]) > std::abs(aug[piv * w + c])) piv = r;
    if (std::abs(aug[piv * w + c]) < 1e-14) return false;
    if (piv != c)
      for (std::size_t k = 0; k < w; ++k) std::swap(aug[c * w + k], aug[piv * w + k]);
    const double d = aug[c * w + c];
    for (std::size_t k = 0; k < w; ++k) aug[c * w + k] /= d;
    for (std::size_t r = 0; r < m; ++r) {
      if (r == c) continue;
      const double f = aug[r * w + c];
      if (f == 0.0) continue;
      for (std::size_t k = 0; k < w; ++k) aug[r * w + k] -= f * aug[c * w + k];
    }
  }
  for (std::size_t p = 0; p < m; ++p) {
    for (std::size_t j = 0; j < cols; ++j) tab[p * cols + j] = aug[p * w + m + j];
    x[basis[p]] = aug[p * w + m + cols];
  }
  return true;
}

}  // namespace detail

/// Returns a point of the polyhedron, or nullopt when the phase-one optimum
/// stays above `feasibility_tol`.
inline std::optional<Vector> feasible(const LinearSystem& sys, const LinfeasOptions& opt = {}) {
  sys.check();
  constexpr double kInf = std::numeric_limits<double>::infinity();
  constexpr double kPivotTol = 1e-11;
  constexpr double kCostTol = 1e-12;

  const std::size_t n = sys.n_vars;
  const std::size_t m = sys.rows.size();

  std::vector<double> shifted_rhs(m);
  std::size_t n_art = 0;
  for (std::size_t i = 0; i < m; ++i) {
    double r = sys.rows[i].rhs;
    for (const auto& [j, a] : sys.rows[i].coeffs) r -= a * sys.lower[j];
    shifted_rhs[i] = r;
    if (r < 0.0) ++n_art;
  }

  const std::size_t cols = n + m + n_art;
  std::vector<double> tab(m * cols, 0.0);
  auto at = [&](std::size_t i, std::size_t j) -> double& { return tab[i * cols + j]; };

  std::vector<double> ub(cols, kInf);
  std::vector<double> cost(cols, 0.0);
  std::vector<double> x(cols, 0.0);
  std::vector<std::size_t> basis(m);
  std::vector<char> is_basic(cols, 0);
  std::vector<char> at_upper(cols, 0);

  for (std::size_t j = 0; j < n; ++j) ub[j] = sys.upper[j] - sys.lower[j];

  std::size_t art = n + m;
  for (std::size_t i = 0; i < m; ++i) {
    for (const auto& [j, a] : sys.rows[i].coeffs) at(i, j) += a;
    at(i, n + i) = 1.0;
    if (shifted_rhs[i] < 0.0) {
      // Negate the row so the artificial enters the basis with coefficient +1.
      for (std::size_t j = 0; j < n + m; ++j) at(i, j) = -at(i, j);
      at(i, art) = 1.0;
      cost[art] = 1.0;
      basis[i] = art;
      x[art] = -shifted_rhs[i];
      ++art;
    } else {
      basis[i] = n + i;
      x[n + i] = shifted_rhs[i];
    }
    is_basic[basis[i]] = 1;
  }

  const std::vector<double> A0 = tab;
  std::vector<double> b0(m);
  for (std::size_t i = 0; i < m; ++i) b0[i] = x[basis[i]];
  constexpr std::size_t kReinvertEvery = 50;

  std::vector<double> reduced(cols);
  std::size_t pivots = 0;
  bool fresh = true;  // tableau was rebuilt since the last pivot
  for (;;) {
    for (std::size_t j = 0; j < cols; ++j) reduced[j] = cost[j];
    for (std::size_t i = 0; i < m; ++i) {
      const double cb = cost[basis[i]];
      if (cb == 0.0) continue;
      const double* row = &tab[i * cols];
      for (std::size_t j = 0; j < cols; ++j) reduced[j] -= cb * row[j];
    }

    std::size_t enter = cols;
    double dir = 0.0;
    for (std::size_t j = 0; j < cols; ++j) {
      if (is_basic[j] || ub[j] <= 0.0) continue;
      if (!at_upper[j] && reduced[j] < -kCostTol) {
        enter = j;
        dir = 1.0;
        break;
      }
      if (at_upper[j] && reduced[j] > kCostTol) {
        enter = j;
        dir = -1.0;
        break;
      }
    }
    if (enter == cols) {
      // Confirm optimality on a freshly inverted basis before stopping.
      if (fresh || !detail::reinvert(A0, b0, m, cols, basis, is_basic, x, tab)) break;
      fresh = true;
      continue;
    }
    if (++pivots > opt.max_pivots) throw CycleLimit(opt.max_pivots);

    double theta = ub[enter];
    std::size_t leave_row = m;
    bool leave_to_upper = false;
    for (std::size_t i = 0; i < m; ++i) {
      const double a = at(i, enter) * dir;
      const std::size_t b = basis[i];
      double limit = kInf;
      bool to_upper = false;
      if (a > kPivotTol) {
        limit = std::max(0.0, x[b]) / a;
      } else if (a < -kPivotTol && ub[b] < kInf) {
        limit = std::max(0.0, ub[b] - x[b]) / (-a);
        to_upper = true;
      } else {
        continue;
      }
      // Ties keep a pending bound flip, otherwise the smallest basic index.
      if (limit < theta || (limit == theta && leave_row < m && b < basis[leave_row])) {
        theta = limit;
        leave_row = i;
        leave_to_upper = to_upper;
      }
    }
    if (!std::isfinite(theta)) throw LinfeasError("linfeas: unbounded phase-one direction");

    const double step = dir * theta;
    x[enter] += step;
    for (std::size_t i = 0; i < m; ++i) x[basis[i]] -= at(i, enter) * step;

    if (leave_row == m) {
      // Bound flip: the entering column moves to its opposite bound.
      at_upper[enter] = dir > 0.0;
      x[enter] = at_upper[enter] ? ub[enter] : 0.0;
      continue;
    }

    const std::size_t leaving = basis[leave_row];
    x[leaving] = leave_to_upper ? ub[leaving] : 0.0;
    at_upper[leaving] = leave_to_upper;
    is_basic[leaving] = 0;
    if (cost[leaving] > 0.0) ub[leaving] = 0.0;  // artificials never re-enter

    const double pivot = at(leave_row, enter);
    double* prow = &tab[leave_row * cols];
    for (std::size_t j = 0; j < cols; ++j) prow[j] /= pivot;
    for (std::size_t i = 0; i < m; ++i) {
      if (i == leave_row) continue;
      const double f = at(i, enter);
      if (f == 0.0) continue;
      double* row = &tab[i * cols];
      for (std::size_t j = 0; j < cols; ++j) row[j] -= f * prow[j];
      row[enter] = 0.0;
    }
    basis[leave_row] = enter;
    is_basic[enter] = 1;
    at_upper[enter] = 0;
    fresh = false;
    if (pivots % kReinvertEvery == 0 && detail::reinvert(A0, b0, m, cols, basis, is_basic, x, tab)) fresh = true;
  }

  double infeasibility = 0.0;
  for (std::size_t j = n + m; j < cols; ++j) infeasibility += std::max(0.0, x[j]);
  if (infeasibility > opt.feasibility_tol) return std::nullopt;

  Vector witness(n);
  for (std::size_t j = 0; j < n; ++j) witness[j] = std::clamp(sys.lower[j] + x[j], sys.lower[j], sys.upper[j]);
  if (sys.violation(witness) > opt.feasibility_tol)
    throw LinfeasError("linfeas: witness failed re-verification against the original rows");
  return witness;
}

}  // namespace revpref
