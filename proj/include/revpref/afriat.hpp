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

// Afriat-type revealed-preference machinery for coordinated agents.
//
// For agent i the inequalities read, for every ordered pair s != t,
//
//   u_s - u_t - lambda_t * (alpha_t'(beta_s - beta_t) + r) <= 0,
//
// with u in [-1, 1] and lambda in [lambda_min, 1]. The agents share no
// variables, so every system below is solved one agent at a time.

#include <algorithm>
#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include "revpref/linfeas.hpp"
#include "revpref/types.hpp"

namespace revpref {

class InfeasibleAtSlack : public std::runtime_error {
 public:
  explicit InfeasibleAtSlack(double r)
      : std::runtime_error("Afriat system infeasible at slack " + std::to_string(r)), slack(r) {}
  double slack;
};

/// Row-major T x T matrix of pair costs for one agent; entry (t, s) holds
/// alpha_t'(beta_s - beta_t) plus any additive slack. The diagonal is unused.
struct PairCosts {
  std::size_t T = 0;
  Vector values;

  explicit PairCosts(std::size_t rounds = 0) : T(rounds), values(rounds * rounds, 0.0) {}
  double& operator()(std::size_t t, std::size_t s) { return values[t * T + s]; }
  double operator()(std::size_t t, std::size_t s) const { return values[t * T + s]; }
};

/// Pair costs of every agent for the signals `signals[i][t]`.
inline std::vector<PairCosts> pair_costs(std::span<const Vector> probes, const std::vector<std::vector<Vector>>& signals) {
  const std::size_t T = probes.size();
  std::vector<PairCosts> out;
  out.reserve(signals.size());
  for (const auto& agent : signals) {
    PairCosts c(T);
    for (std::size_t t = 0; t < T; ++t) {
      const double base = dot(probes[t], agent[t]);
      for (std::size_t s = 0; s < T; ++s)
        if (s != t) c(t, s) = dot(probes[t], agent[s]) - base;
    }
    out.push_back(std::move(c));
  }
  return out;
}

inline std::vector<PairCosts> pair_costs(const Dataset& d) { return pair_costs(d.probes, d.signals); }

/// Linear system in (u_0..u_{T-1}, lambda_0..lambda_{T-1}) for one agent.
inline LinearSystem afriat_system(const PairCosts& cost, double slack, double lambda_min) {
  const std::size_t T = cost.T;
  LinearSystem sys(2 * T);
  for (std::size_t t = 0; t < T; ++t) {
    sys.set_bounds(t, -1.0, 1.0);
    sys.set_bounds(T + t, lambda_min, 1.0);
  }
  sys.rows.reserve(T * (T - 1));
  for (std::size_t t = 0; t < T; ++t)
    for (std::size_t s = 0; s < T; ++s) {
      if (s == t) continue;
      sys.add_row({{s, 1.0}, {t, -1.0}, {T + t, -(cost(t, s) + slack)}}, 0.0);
    }
  return sys;
}

/// Solves every agent's system at the given slack. Agents are checked in
/// order and the search stops at the first infeasible one.
inline std::optional<ParameterVector> solve_afriat(std::span<const PairCosts> costs, double slack, double lambda_min) {
  const std::size_t M = costs.size();
  const std::size_t T = M == 0 ? 0 : costs.front().T;
  ParameterVector psi(M, T);
  for (std::size_t i = 0; i < M; ++i) {
    if (T < 2) continue;
    auto x = feasible(afriat_system(costs[i], slack, lambda_min));
    if (!x) return std::nullopt;
    for (std::size_t t = 0; t < T; ++t) {
      psi.u[i][t] = (*x)[t];
      psi.lambda[i][t] = (*x)[T + t];
    }
  }
  return psi;
}

/// Least r for which psi satisfies every pair inequality on these signals:
/// the max over agents and ordered pairs s != t of
/// (u_s - u_t) / lambda_t - alpha_t'(beta_s - beta_t). Zero when T == 1.
inline double h_value(const ParameterVector& psi, const std::vector<std::vector<Vector>>& signals,
                      std::span<const Vector> probes) {
  const std::size_t T = probes.size();
  if (T < 2) return 0.0;
  double worst = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < signals.size(); ++i)
    for (std::size_t t = 0; t < T; ++t) {
      const double base = dot(probes[t], signals[i][t]);
      for (std::size_t s = 0; s < T; ++s) {
        if (s == t) continue;
        const double term =
            (psi.u[i][s] - psi.u[i][t]) / psi.lambda[i][t] - (dot(probes[t], signals[i][s]) - base);
        worst = std::max(worst, term);
      }
    }
  return worst;
}

inline double h_value(const ParameterVector& psi, const Dataset& d) { return h_value(psi, d.signals, d.probes); }

/// Coordination test: the parameters rationalizing the data, or nullopt.
inline std::optional<ParameterVector> coordination_test(const Dataset& d, const AmbiguityConfig& cfg) {
  require_valid(d, cfg);
  const auto costs = pair_costs(d);
  return solve_afriat(costs, 0.0, cfg.lambda_min);
}

struct ProximityResult {
  double phi = 0.0;
  ParameterVector witness;
  /// (slack, feasible) for every slack probed by the bisection, in order.
  std::vector<std::pair<double, bool>> trace;
};

inline constexpr double kBisectionTolerance = 1e-6;

/// Proximity statistic: the least uniform slack r making every agent's
/// system feasible, found by bisection over [-V, V].
inline ProximityResult proximity(const Dataset& d, const AmbiguityConfig& cfg) {
  require_valid(d, cfg);
  ProximityResult out;
  if (d.T < 2) {
    out.phi = 0.0;
    out.witness = ParameterVector(d.M, d.T);
    return out;
  }
  const auto costs = pair_costs(d);
  auto probe = [&](double r) {
    auto psi = solve_afriat(costs, r, cfg.lambda_min);
    out.trace.emplace_back(r, psi.has_value());
    return psi;
  };

  double lo = -cfg.V();
  double hi = cfg.V();
  if (auto psi = probe(lo)) {
    out.phi = lo;
    out.witness = std::move(*psi);
    return out;
  }
  std::optional<ParameterVector> best = probe(hi);
  // V bounds the statistic under the standing assumptions; widen if the data
  // break them.
  while (!best) {
    lo = hi;
    hi *= 2.0;
    if (hi > 1e9) throw LinfeasError("proximity: no feasible slack found");
    best = probe(hi);
  }
  while (hi - lo > kBisectionTolerance) {
    const double mid = 0.5 * (lo + hi);
    if (auto psi = probe(mid)) {
      hi = mid;
      best = std::move(psi);
    } else {
      lo = mid;
    }
  }
  out.phi = hi;
  out.witness = std::move(*best);
  return out;
}

/// Parameters satisfying every pair inequality at slack r.
inline ParameterVector recover_parameters(const Dataset& d, double r, const AmbiguityConfig& cfg) {
  require_valid(d, cfg);
  const auto costs = pair_costs(d);
  auto psi = solve_afriat(costs, r, cfg.lambda_min);
  if (!psi) throw InfeasibleAtSlack(r);
  return std::move(*psi);
}

/// Naive estimate: parameters recovered just above the proximity statistic.
inline ParameterVector naive_estimate(const Dataset& d, const AmbiguityConfig& cfg, double* phi_out = nullptr) {
  const auto prox = proximity(d, cfg);
  if (phi_out) *phi_out = prox.phi;
  return recover_parameters(d, prox.phi + kBisectionTolerance, cfg);
}

/// Min-affine utilities f^i(x) = min_t u_t^i + lambda_t^i alpha_t'(x - beta_t^i).
inline std::vector<UtilityFunction> reconstruct_utilities(const ParameterVector& psi, const Dataset& d) {
  if (psi.agents() != d.M || psi.rounds() != d.T)
    throw std::invalid_argument("reconstruct_utilities: parameter shape does not match dataset");
  std::vector<UtilityFunction> out(d.M);
  for (std::size_t i = 0; i < d.M; ++i) {
    out[i].pieces.reserve(d.T);
    for (std::size_t t = 0; t < d.T; ++t)
      out[i].pieces.push_back(UtilityPiece{psi.u[i][t], psi.lambda[i][t], d.probes[t], d.signals[i][t]});
  }
  return out;
}

inline double evaluate_utility(const UtilityFunction& f, std::span<const double> x) {
  if (!f.pieces.empty() && x.size() != f.pieces.front().probe.size())
    throw std::invalid_argument("evaluate_utility: dimension mismatch");
  return f(x);
}

}  // namespace revpref
