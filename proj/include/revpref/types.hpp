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

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace revpref {

using Vector = std::vector<double>;

/// Comparison tolerance used wherever an operation does not state its own.
inline constexpr double kTolerance = 1e-9;

/// Coordinate floor applied to noisy signals and to scenario support cells.
inline constexpr double kSignalFloor = 0.01;

inline double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) s += a[k] * b[k];
  return s;
}

inline double norm2(std::span<const double> a) { return std::sqrt(dot(a, a)); }

inline double distance2(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    const double d = a[k] - b[k];
    s += d * d;
  }
  return std::sqrt(s);
}

/// Probe vectors (alpha_t) and response signals (beta_t^i) for T rounds and
/// M agents. Signals are stored agent-major: signals[i][t] is agent i's
/// response to probe t.
struct Dataset {
  std::size_t T = 0;
  std::size_t M = 0;
  std::size_t N = 0;
  std::vector<Vector> probes;
  std::vector<std::vector<Vector>> signals;
  bool noisy = false;

  const Vector& probe(std::size_t t) const { return probes[t]; }
  const Vector& signal(std::size_t i, std::size_t t) const { return signals[i][t]; }

  friend bool operator==(const Dataset&, const Dataset&) = default;
};

/// Afriat parameters {u_t^i, lambda_t^i}, indexed [agent][round].
struct ParameterVector {
  std::vector<Vector> u;
  std::vector<Vector> lambda;

  ParameterVector() = default;
  ParameterVector(std::size_t M, std::size_t T, double u0 = 0.0, double lambda0 = 1.0)
      : u(M, Vector(T, u0)), lambda(M, Vector(T, lambda0)) {}

  std::size_t agents() const { return u.size(); }
  std::size_t rounds() const { return u.empty() ? 0 : u.front().size(); }

  /// Flattened as [u_1^1, lambda_1^1, ..., u_T^M, lambda_T^M].
  Vector flatten() const {
    Vector out;
    out.reserve(2 * agents() * rounds());
    for (std::size_t i = 0; i < agents(); ++i)
      for (std::size_t t = 0; t < rounds(); ++t) {
        out.push_back(u[i][t]);
        out.push_back(lambda[i][t]);
      }
    return out;
  }

  /// Multiplies every entry by c (the Afriat inequalities are invariant).
  ParameterVector scaled(double c) const {
    ParameterVector out = *this;
    for (auto& row : out.u)
      for (double& x : row) x *= c;
    for (auto& row : out.lambda)
      for (double& x : row) x *= c;
    return out;
  }

  /// True when u in [-1, 1] and lambda in [lambda_min, 1] up to `tol`.
  bool in_box(double lambda_min, double tol = kTolerance) const {
    for (std::size_t i = 0; i < agents(); ++i)
      for (std::size_t t = 0; t < rounds(); ++t) {
        if (u[i][t] < -1.0 - tol || u[i][t] > 1.0 + tol) return false;
        if (lambda[i][t] < lambda_min - tol || lambda[i][t] > 1.0 + tol) return false;
      }
    return true;
  }

  friend bool operator==(const ParameterVector&, const ParameterVector&) = default;
};

/// Ambiguity-set and solver configuration. The derived bounds are computed on
/// demand so they always agree with `R` and `epsilon`.
struct AmbiguityConfig {
  double epsilon = 0.2;
  double R = 3.0;
  double delta = 0.1;
  double lambda_min = 1e-3;
  double alpha_min = 1e-3;

  double V() const { return 2.0 * (1.0 + R) + 2.0; }
  double v1_max() const { return 2.0 * V(); }
  double v2_max() const { return V() / epsilon; }

  void validate() const {
    if (!(epsilon > 0.0)) throw std::invalid_argument("epsilon must be positive");
    if (!(R > 0.0)) throw std::invalid_argument("R must be positive");
    if (!(delta > 0.0)) throw std::invalid_argument("delta must be positive");
    if (!(lambda_min > 0.0 && lambda_min <= 1.0))
      throw std::invalid_argument("lambda_min must lie in (0, 1]");
    if (!(alpha_min > 0.0)) throw std::invalid_argument("alpha_min must be positive");
  }
};

/// Auxiliary variables (v1, v2) of the semi-infinite reformulation.
struct DualPair {
  double v1 = 0.0;
  double v2 = 0.0;

  bool in_box(const AmbiguityConfig& cfg, double tol = kTolerance) const {
    return v1 >= -tol && v1 <= cfg.v1_max() + tol && v2 >= -tol && v2 <= cfg.v2_max() + tol;
  }
};

/// A candidate signal dataset inside the support, with its transport cost to
/// the observed signals cached.
struct Scenario {
  std::vector<std::vector<Vector>> signals;  // [agent][round]
  double transport_cost = 0.0;
};

/// One affine piece u + lambda * probe'(x - anchor) of a min-affine utility.
struct UtilityPiece {
  double u = 0.0;
  double lambda = 1.0;
  Vector probe;
  Vector anchor;
};

/// f(x) = min over pieces of u_t + lambda_t * probe_t'(x - anchor_t).
struct UtilityFunction {
  std::vector<UtilityPiece> pieces;

  double operator()(std::span<const double> x) const {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& p : pieces) {
      double v = p.u;
      for (std::size_t k = 0; k < x.size(); ++k) v += p.lambda * p.probe[k] * (x[k] - p.anchor[k]);
      best = std::min(best, v);
    }
    return best;
  }
};

struct ExchangeState {
  std::vector<Scenario> pool;
  ParameterVector incumbent_psi;
  DualPair incumbent_v;
  std::vector<double> cv_trace;
  std::vector<double> objective_trace;
  std::size_t iterations = 0;
};

/// Returns a description of the first violated input invariant, or nullopt.
inline std::optional<std::string> validate_dataset(const Dataset& d, const AmbiguityConfig& cfg) {
  if (d.T < 1 || d.M < 1 || d.N < 1) return "dimension mismatch: T, M and N must be at least 1";
  if (d.probes.size() != d.T) return "dimension mismatch: expected T probes";
  if (d.signals.size() != d.M) return "dimension mismatch: expected M signal rows";
  for (std::size_t t = 0; t < d.T; ++t) {
    const Vector& a = d.probes[t];
    if (a.size() != d.N) return "dimension mismatch: probe " + std::to_string(t) + " length";
    for (double x : a) {
      if (!std::isfinite(x)) return "non-finite probe entry";
      if (x < 0.0) return "negative probe entry";
    }
    if (norm2(a) < cfg.alpha_min) return "probe norm below bound";
  }
  for (std::size_t i = 0; i < d.M; ++i) {
    if (d.signals[i].size() != d.T) return "dimension mismatch: agent " + std::to_string(i) + " signal count";
    for (const Vector& b : d.signals[i]) {
      if (b.size() != d.N) return "dimension mismatch: signal length";
      for (double x : b) {
        if (!std::isfinite(x)) return "non-finite signal entry";
        if (x < 0.0) return "negative signal entry";
      }
    }
  }
  return std::nullopt;
}

inline void require_valid(const Dataset& d, const AmbiguityConfig& cfg) {
  if (auto err = validate_dataset(d, cfg)) throw std::invalid_argument("invalid dataset: " + *err);
}

}  // namespace revpref
