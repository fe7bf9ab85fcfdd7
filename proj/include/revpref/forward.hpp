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

// Synthetic coordinated systems: agents with separable concave utilities
// sum_k c_k * beta(k)^p_k jointly maximize sum_i mu_i f^i(beta^i) subject to
// alpha'(sum_i beta^i) <= 1, beta >= 0.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "revpref/types.hpp"

namespace revpref {

class NonConvergence : public std::runtime_error {
 public:
  explicit NonConvergence(double residual)
      : std::runtime_error("forward solver KKT residual " + std::to_string(residual) + " exceeds tolerance"),
        residual(residual) {}
  double residual;
};

struct UtilityTerm {
  double coefficient = 0.0;
  double exponent = 1.0;  // 1 is linear
};

/// f(beta) = sum_k coefficient_k * beta(k)^exponent_k.
struct UtilitySpec {
  std::vector<UtilityTerm> terms;

  double operator()(std::span<const double> beta) const {
    double v = 0.0;
    for (std::size_t k = 0; k < terms.size(); ++k) {
      const auto& term = terms[k];
      if (term.coefficient == 0.0) continue;
      v += term.coefficient * (term.exponent == 1.0 ? beta[k] : std::pow(std::max(beta[k], 0.0), term.exponent));
    }
    return v;
  }

  void validate() const {
    bool positive = false;
    for (const auto& term : terms) {
      if (!(term.coefficient >= 0.0)) throw std::invalid_argument("utility coefficients must be nonnegative");
      if (!(term.exponent > 0.0 && term.exponent <= 1.0)) throw std::invalid_argument("utility exponents must lie in (0, 1]");
      positive = positive || term.coefficient > 0.0;
    }
    if (!positive) throw std::invalid_argument("utility needs at least one positive coefficient");
  }
};

/// The three agents of the reference radar example:
/// b1 + b2, b1 + b2^(1/4), b1^(1/4) + b2.
inline std::vector<UtilitySpec> paper_utilities() {
  return {
      UtilitySpec{{{1.0, 1.0}, {1.0, 1.0}}},
      UtilitySpec{{{1.0, 1.0}, {1.0, 0.25}}},
      UtilitySpec{{{1.0, 0.25}, {1.0, 1.0}}},
  };
}

struct CoordinationSolution {
  std::vector<Vector> signals;  // one allocation per agent
  double multiplier = 0.0;      // budget shadow price
  double value = 0.0;           // sum_i mu_i f^i(beta^i)
  double kkt_residual = 0.0;
};

inline constexpr double kKktTolerance = 1e-6;

/// Solves the weighted joint allocation exactly through its budget multiplier.
///
/// The objective is separable over (agent, coordinate) with a single linear
/// budget, so for a multiplier nu each power term demands
/// x = (c p / (nu a))^(1 / (1 - p)) and linear terms are worth buying only at the
/// largest bang-per-buck ratio c / a. The multiplier is the larger of that
/// ratio and the root of the power-term spending curve. Budget left over at
/// the linear ratio is split evenly among the tied linear terms.
inline CoordinationSolution solve_coordination(std::span<const UtilitySpec> specs, std::span<const double> weights,
                                               std::span<const double> alpha) {
  const std::size_t M = specs.size();
  const std::size_t N = alpha.size();
  if (weights.size() != M) throw std::invalid_argument("solve_coordination: one weight per agent required");
  for (const auto& spec : specs) {
    if (spec.terms.size() != N) throw std::invalid_argument("solve_coordination: utility dimension mismatch");
    spec.validate();
  }

  struct Var {
    std::size_t agent, coord;
    double c, p, a;
  };
  std::vector<Var> linear, power;
  for (std::size_t i = 0; i < M; ++i) {
    if (weights[i] < 0.0) throw std::invalid_argument("solve_coordination: negative weight");
    for (std::size_t k = 0; k < N; ++k) {
      const double c = weights[i] * specs[i].terms[k].coefficient;
      if (c <= 0.0) continue;
      if (!(alpha[k] > 0.0)) throw std::invalid_argument("solve_coordination: unbounded allocation on a free coordinate");
      const Var v{i, k, c, specs[i].terms[k].exponent, alpha[k]};
      (v.p == 1.0 ? linear : power).push_back(v);
    }
  }
  if (linear.empty() && power.empty()) throw std::invalid_argument("solve_coordination: all weighted coefficients vanish");

  auto demand = [](const Var& v, double nu) { return std::pow(v.c * v.p / (nu * v.a), 1.0 / (1.0 - v.p)); };
  auto spend = [&](double nu) {
    double s = 0.0;
    for (const auto& v : power) s += v.a * demand(v, nu);
    return s;
  };

  double ratio = 0.0;
  for (const auto& v : linear) ratio = std::max(ratio, v.c / v.a);

  CoordinationSolution out;
  out.signals.assign(M, Vector(N, 0.0));
  double nu = ratio;
  if (linear.empty() || (!power.empty() && spend(ratio) > 1.0)) {
    // Budget is exhausted by the power terms alone: spend(nu) = 1.
    double lo = linear.empty() ? 1.0 : ratio;
    double hi = lo;
    while (spend(lo) < 1.0) lo *= 0.5;
    while (spend(hi) > 1.0) hi *= 2.0;
    for (int it = 0; it < 400; ++it) {
      const double mid = std::sqrt(lo * hi);
      if (!(mid > lo && mid < hi)) break;
      (spend(mid) > 1.0 ? lo : hi) = mid;
    }
    nu = (std::abs(spend(lo) - 1.0) < std::abs(spend(hi) - 1.0)) ? lo : hi;
    for (const auto& v : power) out.signals[v.agent][v.coord] = demand(v, nu);
  } else {
    for (const auto& v : power) out.signals[v.agent][v.coord] = demand(v, nu);
    const double left = 1.0 - spend(nu);
    std::vector<const Var*> tied;
    for (const auto& v : linear)
      if (v.c / v.a >= ratio * (1.0 - 1e-12)) tied.push_back(&v);
    for (const Var* v : tied) out.signals[v->agent][v->coord] += left / static_cast<double>(tied.size()) / v->a;
  }
  out.multiplier = nu;

  double budget = 0.0;
  for (std::size_t i = 0; i < M; ++i) {
    budget += dot(alpha, out.signals[i]);
    out.value += weights[i] * specs[i](out.signals[i]);
  }

  // Scaled KKT residual: stationarity, dual feasibility, primal feasibility,
  // complementary slackness.
  double residual = std::max(0.0, budget - 1.0);
  residual = std::max(residual, nu * std::abs(1.0 - budget));
  for (std::size_t i = 0; i < M; ++i)
    for (std::size_t k = 0; k < N; ++k) {
      const double c = weights[i] * specs[i].terms[k].coefficient;
      const double p = specs[i].terms[k].exponent;
      const double x = out.signals[i][k];
      const double price = nu * alpha[k];
      const double scale = std::max(1.0, price);
      if (c == 0.0) continue;
      if (p == 1.0) {
        residual = std::max(residual, std::max(0.0, c - price) / scale);
        if (x > 0.0) residual = std::max(residual, std::abs(c - price) / scale);
      } else {
        if (x <= 0.0) {
          // A zero power demand is only stationary when the exact demand
          // underflows the double range.
          const double log_demand = std::log(c * p / price) / (1.0 - p);
          if (!(log_demand < std::log(std::numeric_limits<double>::min())))
            residual = std::numeric_limits<double>::infinity();
        } else {
          residual = std::max(residual, std::abs(c * p * std::pow(x, p - 1.0) - price) / scale);
        }
      }
    }
  out.kkt_residual = residual;
  if (!(residual <= kKktTolerance)) throw NonConvergence(residual);
  return out;
}

inline CoordinationSolution solve_coordination(std::span<const UtilitySpec> specs, std::span<const double> alpha) {
  const Vector ones(specs.size(), 1.0);
  return solve_coordination(specs, ones, alpha);
}

/// splitmix64 finalizer; used to derive independent RNG streams from a seed.
inline std::uint64_t mix_seed(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0) {
  return mix_seed(mix_seed(mix_seed(seed) ^ a) ^ b);
}

struct GenConfig {
  std::size_t T = 5;
  std::size_t M = 3;
  std::size_t N = 2;
  std::vector<UtilitySpec> utilities = paper_utilities();
  Vector weights;  // empty means all ones
  double probe_low = 0.1;
  double probe_high = 1.1;
  double sigma = 1.0;
  double floor = kSignalFloor;
  bool truncate = true;  // reject noise draws with norm above 3 sigma
  std::uint64_t seed = 0;

  double noise_radius() const { return 3.0 * sigma; }

  Vector resolved_weights() const { return weights.empty() ? Vector(M, 1.0) : weights; }

  void validate() const {
    if (T < 1 || M < 1 || N < 1) throw std::invalid_argument("T, M and N must be at least 1");
    if (utilities.size() != M) throw std::invalid_argument("one utility per agent required");
    for (const auto& u : utilities) {
      u.validate();
      if (u.terms.size() != N) throw std::invalid_argument("utility dimension must equal N");
    }
    for (double w : resolved_weights())
      if (!(w > 0.0)) throw std::invalid_argument("agent weights must be positive");
    if (resolved_weights().size() != M) throw std::invalid_argument("one weight per agent required");
    if (!(probe_low > 0.0 && probe_high > probe_low)) throw std::invalid_argument("probe law needs 0 < low < high");
    if (!(sigma >= 0.0)) throw std::invalid_argument("sigma must be nonnegative");
    if (!(floor >= 0.0)) throw std::invalid_argument("floor must be nonnegative");
  }
};

/// The radar example: T = 5, M = 3, N = 2, probes U(0.1, 1.1)^2, unit noise.
inline GenConfig paper_preset(std::uint64_t seed = 0, double sigma = 1.0) {
  GenConfig cfg;
  cfg.seed = seed;
  cfg.sigma = sigma;
  return cfg;
}

struct GeneratedData {
  Dataset clean;
  Dataset noisy;
  double max_noise_norm = 0.0;
  std::size_t clamped = 0;  // noisy coordinates raised to the floor
};

/// Probes drawn from the configured box law on stream `stream`.
inline std::vector<Vector> draw_probes(const GenConfig& cfg, std::size_t count, std::uint64_t stream) {
  std::vector<Vector> out;
  out.reserve(count);
  for (std::size_t t = 0; t < count; ++t) {
    std::mt19937_64 rng(stream_seed(cfg.seed, stream, t));
    std::uniform_real_distribution<double> unif(cfg.probe_low, cfg.probe_high);
    Vector a(cfg.N);
    for (double& x : a) x = unif(rng);
    out.push_back(std::move(a));
  }
  return out;
}

inline constexpr std::uint64_t kProbeStream = 1;
inline constexpr std::uint64_t kTestProbeStream = 2;
inline constexpr std::uint64_t kNoiseStream = 1000;

inline GeneratedData generate_dataset(const GenConfig& cfg) {
  cfg.validate();
  GeneratedData out;
  Dataset& clean = out.clean;
  clean.T = cfg.T;
  clean.M = cfg.M;
  clean.N = cfg.N;
  clean.noisy = false;
  clean.probes = draw_probes(cfg, cfg.T, kProbeStream);
  clean.signals.assign(cfg.M, std::vector<Vector>(cfg.T));
  const Vector weights = cfg.resolved_weights();
  for (std::size_t t = 0; t < cfg.T; ++t) {
    auto sol = solve_coordination(cfg.utilities, weights, clean.probes[t]);
    for (std::size_t i = 0; i < cfg.M; ++i) clean.signals[i][t] = std::move(sol.signals[i]);
  }

  if (cfg.sigma == 0.0) {
    out.noisy = clean;
    return out;
  }

  Dataset& noisy = out.noisy;
  noisy = clean;
  noisy.noisy = true;
  for (std::size_t i = 0; i < cfg.M; ++i)
    for (std::size_t t = 0; t < cfg.T; ++t) {
      std::mt19937_64 rng(stream_seed(cfg.seed, kNoiseStream + i, t));
      std::normal_distribution<double> gauss(0.0, cfg.sigma);
      Vector eps(cfg.N);
      do {
        for (double& e : eps) e = gauss(rng);
      } while (cfg.truncate && norm2(eps) > cfg.noise_radius());
      out.max_noise_norm = std::max(out.max_noise_norm, norm2(eps));
      for (std::size_t k = 0; k < cfg.N; ++k) {
        const double raw = clean.signals[i][t][k] + eps[k];
        if (raw < cfg.floor) ++out.clamped;
        noisy.signals[i][t][k] = std::max(raw, cfg.floor);
      }
    }
  return out;
}

}  // namespace revpref
