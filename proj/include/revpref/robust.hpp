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

// Wasserstein distributionally robust utility estimation.
//
// The estimator solves
//
//   min  epsilon * v2 + v1   over psi in the parameter box, v in [0, v1_max] x [0, v2_max]
//   s.t. h(psi, Phi) - v2 * sum_{i,t} |beta_t^i - hat beta_t^i|_2 - v1 <= 0   for all Phi in Gamma
//
// by an exchange method: a finite master over a scenario pool alternates
// with an exact oracle for the most violated scenario.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <queue>
#include <span>
#include <stdexcept>
#include <string>
#include <tuple>
#include <vector>

#include "revpref/afriat.hpp"
#include "revpref/types.hpp"

namespace revpref {

class IterationCapExceeded : public std::runtime_error {
 public:
  explicit IterationCapExceeded(ExchangeState s)
      : std::runtime_error("exchange loop hit its iteration cap of " + std::to_string(s.iterations)),
        state(std::move(s)) {}
  ExchangeState state;
};

/// Gamma_t^i = {beta : beta >= floor, |beta - center|_2 <= radius}. The floor
/// is min(0.01, center_k) per coordinate so the center always belongs to it.
struct SupportCell {
  Vector center;
  double radius = 0.0;
  Vector floor;

  SupportCell(Vector c, double r) : center(std::move(c)), radius(r), floor(center.size()) {
    for (std::size_t k = 0; k < center.size(); ++k) floor[k] = std::min(kSignalFloor, center[k]);
  }

  bool contains(std::span<const double> x, double tol = 1e-9) const {
    for (std::size_t k = 0; k < x.size(); ++k)
      if (x[k] < floor[k] - tol) return false;
    return distance2(x, center) <= radius + tol;
  }
};

struct CellMove {
  Vector offset;  // x - center
  double gain = 0.0;
};

/// Maximizes g'd - penalty * |d|_2 over offsets d with center + d in the cell.
///
/// For a fixed norm the best offset is d(theta)_k = max(floor_k - center_k, theta g_k),
/// and the value along that path is concave in |d|. The marginal gain
/// |d(theta)| / theta is nonincreasing in theta, so the optimum is the largest
/// theta whose marginal still pays the penalty, capped at the radius.
inline CellMove best_cell_move(const SupportCell& cell, std::span<const double> g, double penalty) {
  const std::size_t n = cell.center.size();
  Vector lower(n);
  for (std::size_t k = 0; k < n; ++k) lower[k] = cell.floor[k] - cell.center[k];

  auto offset = [&](double theta) {
    Vector d(n);
    for (std::size_t k = 0; k < n; ++k) d[k] = std::max(lower[k], theta * g[k]);
    return d;
  };

  double initial = 0.0;  // squared marginal at theta -> 0+
  double limit = 0.0;    // squared marginal as theta -> infinity
  double saturate = 0.0; // theta beyond which every negative coordinate is clamped
  for (std::size_t k = 0; k < n; ++k) {
    if (g[k] > 0.0) {
      initial += g[k] * g[k];
      limit += g[k] * g[k];
    } else if (g[k] < 0.0 && lower[k] < 0.0) {
      initial += g[k] * g[k];
      saturate = std::max(saturate, lower[k] / g[k]);
    }
  }

  CellMove out;
  out.offset.assign(n, 0.0);
  if (std::sqrt(initial) <= penalty || cell.radius <= 0.0) return out;

  auto marginal_pays = [&](double theta) { return norm2(offset(theta)) >= penalty * theta; };
  auto within_radius = [&](double theta) { return norm2(offset(theta)) <= cell.radius; };

  double theta = std::numeric_limits<double>::infinity();
  const bool grows = limit > 0.0;
  // Marginal condition.
  if (!(grows && std::sqrt(limit) >= penalty)) {
    double lo = 0.0;
    double hi = grows ? 1.0 : std::max(saturate, 1e-300);
    if (grows)
      while (marginal_pays(hi)) hi *= 2.0;
    if (marginal_pays(hi)) {
      theta = hi;  // fully clamped and still paying
    } else {
      for (int it = 0; it < 200 && hi - lo > 0.0; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;
        (marginal_pays(mid) ? lo : hi) = mid;
      }
      theta = lo;
    }
  }
  // Radius condition.
  if (!std::isfinite(theta) || !within_radius(theta)) {
    double lo = 0.0;
    double hi = std::isfinite(theta) ? theta : 1.0;
    if (!std::isfinite(theta)) {
      while (within_radius(hi)) hi *= 2.0;
    }
    if (within_radius(hi)) {
      theta = hi;
    } else {
      for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;
        (within_radius(mid) ? lo : hi) = mid;
      }
      theta = lo;
    }
  }

  out.offset = offset(theta);
  out.gain = dot(g, out.offset) - penalty * norm2(out.offset);
  if (out.gain <= 0.0) {
    out.offset.assign(n, 0.0);
    out.gain = 0.0;
  }
  return out;
}

/// Sum over agents and rounds of |beta_t^i - hat beta_t^i|_2.
inline double transport_cost(const std::vector<std::vector<Vector>>& signals, const Dataset& dhat) {
  if (signals.size() != dhat.M) throw std::invalid_argument("transport_cost: agent count mismatch");
  double total = 0.0;
  for (std::size_t i = 0; i < dhat.M; ++i) {
    if (signals[i].size() != dhat.T) throw std::invalid_argument("transport_cost: round count mismatch");
    for (std::size_t t = 0; t < dhat.T; ++t) total += distance2(signals[i][t], dhat.signals[i][t]);
  }
  return total;
}

inline double transport_cost(const Scenario& phi, const Dataset& dhat) { return transport_cost(phi.signals, dhat); }

inline Scenario make_scenario(std::vector<std::vector<Vector>> signals, const Dataset& dhat) {
  Scenario s{std::move(signals), 0.0};
  s.transport_cost = transport_cost(s, dhat);
  return s;
}

/// G(psi, v, Phi, hat D) = h(psi, Phi) - v2 * transport - v1.
inline double constraint_value(const ParameterVector& psi, const DualPair& v, const Scenario& phi, const Dataset& dhat) {
  return h_value(psi, phi.signals, dhat.probes) - v.v2 * transport_cost(phi, dhat) - v.v1;
}

inline std::vector<std::vector<SupportCell>> support_cells(const Dataset& dhat, double R) {
  std::vector<std::vector<SupportCell>> cells(dhat.M);
  for (std::size_t i = 0; i < dhat.M; ++i)
    for (std::size_t t = 0; t < dhat.T; ++t) cells[i].emplace_back(dhat.signals[i][t], R);
  return cells;
}

struct Violation {
  double cv = 0.0;
  Scenario argmax;
};

/// Exact maximum of G over the support. Only the two signals of one ordered
/// pair (s, t) of one agent can raise h, and the transport penalty separates
/// per signal, so the maximum over Phi splits into per-pair problems whose two
/// signal moves are independent.
inline Violation max_constraint_violation(const ParameterVector& psi, const DualPair& v, const Dataset& dhat,
                                          const AmbiguityConfig& cfg) {
  Violation out;
  out.argmax = make_scenario(dhat.signals, dhat);
  if (dhat.T < 2) {
    out.cv = -v.v1;
    return out;
  }
  const auto cells = support_cells(dhat, cfg.R);
  const auto costs = pair_costs(dhat);

  double best = -std::numeric_limits<double>::infinity();
  std::size_t bi = 0, bs = 0, bt = 0;
  CellMove best_s, best_t;
  Vector neg(dhat.N);
  for (std::size_t i = 0; i < dhat.M; ++i)
    for (std::size_t t = 0; t < dhat.T; ++t) {
      const Vector& a = dhat.probes[t];
      for (std::size_t k = 0; k < dhat.N; ++k) neg[k] = -a[k];
      // Raising alpha_t'beta_t helps every pair ending in t.
      const CellMove up = best_cell_move(cells[i][t], a, v.v2);
      for (std::size_t s = 0; s < dhat.T; ++s) {
        if (s == t) continue;
        const CellMove down = best_cell_move(cells[i][s], neg, v.v2);
        const double term = (psi.u[i][s] - psi.u[i][t]) / psi.lambda[i][t] - costs[i](t, s);
        const double value = term + down.gain + up.gain;
        if (value > best) {
          best = value;
          std::tie(bi, bs, bt) = std::tuple{i, s, t};
          best_s = down;
          best_t = up;
        }
      }
    }

  auto signals = dhat.signals;
  for (std::size_t k = 0; k < dhat.N; ++k) {
    signals[bi][bs][k] += best_s.offset[k];
    signals[bi][bt][k] += best_t.offset[k];
  }
  // Keep the argmax inside the cell despite rounding in the offset.
  for (std::size_t t : {bs, bt})
    for (std::size_t k = 0; k < dhat.N; ++k)
      signals[bi][t][k] = std::max(signals[bi][t][k], cells[bi][t].floor[k]);
  out.argmax = make_scenario(std::move(signals), dhat);
  out.cv = best - v.v1;
  return out;
}

struct MasterOptions {
  /// Lattice spacing for v1 (bisection tolerance).
  double v1_resolution = 1e-5;
  /// Upper bound on epsilon * (v2 lattice spacing).
  double objective_resolution = 5e-5;
};

struct MasterSolution {
  ParameterVector psi;
  DualPair v;
  double objective = 0.0;
  std::size_t evaluations = 0;
};

namespace detail {

inline std::size_t lattice_cells(double span, double resolution) {
  std::size_t cells = 1;
  while (span / static_cast<double>(cells) > resolution) cells *= 2;
  return cells;
}

/// Pair costs min_j [alpha_t'(beta_{s,j} - beta_{t,j}) + v2 D_j] per agent for
/// a fixed pool. Only the smallest cost binds because lambda_t > 0.
class PoolCosts {
 public:
  PoolCosts(std::span<const Scenario> pool, const Dataset& dhat) : M_(dhat.M), T_(dhat.T) {
    for (const Scenario& phi : pool) {
      costs_.push_back(pair_costs(dhat.probes, phi.signals));
      transport_.push_back(phi.transport_cost);
    }
  }

  std::vector<PairCosts> at(double v2) const {
    std::vector<PairCosts> out(M_, PairCosts(T_));
    for (std::size_t i = 0; i < M_; ++i)
      for (std::size_t t = 0; t < T_; ++t)
        for (std::size_t s = 0; s < T_; ++s) {
          if (s == t) continue;
          double c = std::numeric_limits<double>::infinity();
          for (std::size_t j = 0; j < costs_.size(); ++j) c = std::min(c, costs_[j][i](t, s) + v2 * transport_[j]);
          out[i](t, s) = c;
        }
    return out;
  }

 private:
  std::size_t M_, T_;
  std::vector<std::vector<PairCosts>> costs_;
  Vector transport_;
};

}  // namespace detail

/// Finite master program over the scenario pool.
///
/// For fixed v the constraints are linear in psi, and raising either v1 or v2
/// relaxes all of them. The least feasible v1 is therefore nonincreasing in
/// v2, which gives the bound epsilon * v2_lo + v1(v2_hi) on any interval of v2.
/// The search is an exact branch and bound over a dyadic v2 lattice; v1 is
/// the smallest feasible point of a dyadic v1 lattice. Both lattices are fixed
/// by the configuration, so growing the pool can only raise the optimum.
inline MasterSolution master_solve(std::span<const Scenario> pool, const Dataset& dhat, const AmbiguityConfig& cfg,
                                   const MasterOptions& opt = {}) {
  cfg.validate();
  MasterSolution out;
  out.psi = ParameterVector(dhat.M, dhat.T);
  if (pool.empty() || dhat.T < 2) return out;

  const detail::PoolCosts pool_costs(pool, dhat);
  const std::size_t K1 = detail::lattice_cells(cfg.v1_max(), opt.v1_resolution);
  const std::size_t K2 = detail::lattice_cells(cfg.V(), opt.objective_resolution);
  const double h1 = cfg.v1_max() / static_cast<double>(K1);
  const double h2 = cfg.v2_max() / static_cast<double>(K2);

  auto feasible_at = [&](const std::vector<PairCosts>& costs, std::size_t k1) {
    return solve_afriat(costs, static_cast<double>(k1) * h1, cfg.lambda_min).has_value();
  };
  // Smallest feasible v1 index in [lo, hi]; hi is known feasible.
  auto least_v1 = [&](std::size_t k2, std::size_t lo, std::size_t hi) {
    const auto costs = pool_costs.at(static_cast<double>(k2) * h2);
    ++out.evaluations;
    if (feasible_at(costs, lo)) return lo;
    while (hi - lo > 1) {
      const std::size_t mid = lo + (hi - lo) / 2;
      (feasible_at(costs, mid) ? hi : lo) = mid;
    }
    return hi;
  };
  auto value = [&](std::size_t k2, std::size_t k1) {
    return cfg.epsilon * (static_cast<double>(k2) * h2) + static_cast<double>(k1) * h1;
  };

  if (!feasible_at(pool_costs.at(cfg.v2_max()), K1))
    throw LinfeasError("master_solve: infeasible at the upper corner of the dual box");
  if (!feasible_at(pool_costs.at(0.0), K1))
    throw LinfeasError("master_solve: infeasible at v1 = v1_max, v2 = 0");

  std::map<std::size_t, std::size_t> v1_at;  // k2 -> least feasible k1
  v1_at[0] = least_v1(0, 0, K1);
  v1_at[K2] = least_v1(K2, 0, v1_at[0]);

  std::size_t best_k2 = 0;
  double best = value(0, v1_at[0]);
  if (value(K2, v1_at[K2]) < best) {
    best = value(K2, v1_at[K2]);
    best_k2 = K2;
  }

  using Interval = std::tuple<double, std::size_t, std::size_t>;  // (bound, a, b)
  std::priority_queue<Interval, std::vector<Interval>, std::greater<>> open;
  auto push = [&](std::size_t a, std::size_t b) {
    if (b - a < 2) return;
    const double bound = value(a + 1, v1_at[b]);
    if (bound < best) open.emplace(bound, a, b);
  };
  push(0, K2);
  while (!open.empty()) {
    const auto [bound, a, b] = open.top();
    open.pop();
    if (bound >= best) break;
    const std::size_t m = a + (b - a) / 2;
    v1_at[m] = least_v1(m, v1_at[b], v1_at[a]);
    const double val = value(m, v1_at[m]);
    if (val < best || (val == best && m < best_k2)) {
      best = val;
      best_k2 = m;
    }
    push(a, m);
    push(m, b);
  }

  out.v.v2 = static_cast<double>(best_k2) * h2;
  out.v.v1 = static_cast<double>(v1_at[best_k2]) * h1;
  out.objective = best;
  auto psi = solve_afriat(pool_costs.at(out.v.v2), out.v.v1, cfg.lambda_min);
  if (!psi) throw LinfeasError("master_solve: lost feasibility at the selected lattice point");
  out.psi = std::move(*psi);
  return out;
}

struct ExchangeOptions {
  std::size_t max_iterations = 200;
  MasterOptions master;
};

/// Exchange (cutting-plane) loop. Starts from psi = (u = 0, lambda = 1),
/// v = 0 and an empty pool; stops as soon as the oracle certifies cv < delta at
/// the current incumbent, which is the incumbent returned.
inline ExchangeState exchange_loop(const Dataset& dhat, const AmbiguityConfig& cfg, const ExchangeOptions& opt = {}) {
  cfg.validate();
  require_valid(dhat, cfg);
  ExchangeState state;
  state.incumbent_psi = ParameterVector(dhat.M, dhat.T);
  state.incumbent_v = DualPair{};
  state.objective_trace.push_back(0.0);
  for (;;) {
    Violation viol = max_constraint_violation(state.incumbent_psi, state.incumbent_v, dhat, cfg);
    state.cv_trace.push_back(viol.cv);
    if (viol.cv < cfg.delta) break;
    if (state.iterations >= opt.max_iterations) throw IterationCapExceeded(std::move(state));
    if (viol.cv > 0.0) state.pool.push_back(std::move(viol.argmax));
    MasterSolution master = master_solve(state.pool, dhat, cfg, opt.master);
    state.incumbent_psi = std::move(master.psi);
    state.incumbent_v = master.v;
    state.objective_trace.push_back(master.objective);
    ++state.iterations;
  }
  return state;
}

/// Robust objective of a fixed psi: min over v2 of epsilon * v2 + max(0, CV(psi, (0, v2))).
/// CV is a maximum of functions affine in v2, so the objective is convex in v2.
inline double robust_objective(const ParameterVector& psi, const Dataset& dhat, const AmbiguityConfig& cfg) {
  auto f = [&](double v2) {
    const double cv = max_constraint_violation(psi, DualPair{0.0, v2}, dhat, cfg).cv;
    return cfg.epsilon * v2 + std::max(0.0, cv);
  };
  double lo = 0.0, hi = cfg.v2_max();
  for (int it = 0; it < 120; ++it) {
    const double m1 = lo + (hi - lo) / 3.0;
    const double m2 = hi - (hi - lo) / 3.0;
    if (f(m1) <= f(m2))
      hi = m2;
    else
      lo = m1;
  }
  return std::min({f(0.0), f(0.5 * (lo + hi)), f(cfg.v2_max())});
}

}  // namespace revpref
