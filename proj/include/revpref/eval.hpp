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

// Estimator quality: Pareto-surface sampling, Hausdorff distance between
// surfaces, and the Monte-Carlo naive-vs-robust comparison harness.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstdlib>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "revpref/afriat.hpp"
#include "revpref/forward.hpp"
#include "revpref/linfeas.hpp"
#include "revpref/robust.hpp"
#include "revpref/types.hpp"

namespace revpref {

class EmptySet : public std::invalid_argument {
 public:
  EmptySet() : std::invalid_argument("hausdorff: point sets must be nonempty") {}
};

struct SurfaceSample {
  std::vector<Vector> points;   // stacked allocations, length M * N
  std::vector<Vector> weights;  // weight vector that generated each point
  Vector probe;
};

/// Strictly positive weights k / grid with integer parts summing to `grid`,
/// plus the equal-weight point when the grid misses it.
inline std::vector<Vector> simplex_weights(std::size_t M, std::size_t grid) {
  if (M == 0) throw std::invalid_argument("simplex_weights: no agents");
  std::vector<Vector> out;
  if (grid >= M) {
    std::vector<std::size_t> parts(M, 1);
    // Enumerate compositions of `grid` into M positive parts, lexicographically.
    auto emit = [&](auto&& self, std::size_t index, std::size_t left) -> void {
      if (index + 1 == M) {
        parts[index] = left;
        Vector w(M);
        for (std::size_t i = 0; i < M; ++i) w[i] = static_cast<double>(parts[i]) / static_cast<double>(grid);
        out.push_back(std::move(w));
        return;
      }
      for (std::size_t k = 1; k + (M - index - 1) <= left; ++k) {
        parts[index] = k;
        self(self, index + 1, left - k);
      }
    };
    emit(emit, 0, grid);
  }
  const bool has_equal = grid >= M && grid % M == 0;
  if (!has_equal) out.push_back(Vector(M, 1.0 / static_cast<double>(M)));
  return out;
}

inline Vector stack(const std::vector<Vector>& parts) {
  Vector out;
  for (const auto& p : parts) out.insert(out.end(), p.begin(), p.end());
  return out;
}

/// Pareto surface of separable concave utilities under the budget alpha.
inline SurfaceSample pareto_surface(std::span<const UtilitySpec> utilities, const Vector& alpha, std::size_t grid) {
  if (grid < 1) throw std::invalid_argument("pareto_surface: grid must be at least 1");
  SurfaceSample out;
  out.probe = alpha;
  for (auto& w : simplex_weights(utilities.size(), grid)) {
    out.points.push_back(stack(solve_coordination(utilities, w, alpha).signals));
    out.weights.push_back(std::move(w));
  }
  return out;
}

/// Maximizes sum_i w_i f^i(gamma^i) s.t. alpha'(sum_i gamma^i) <= 1, gamma >= 0
/// for min-affine utilities. The problem is a linear program in
/// (gamma, z) with z_i <= every affine piece of f^i; it is solved by bisection
/// on the attainable objective with the feasibility kernel.
inline std::vector<Vector> maximize_min_affine(std::span<const UtilityFunction> utilities, std::span<const double> w,
                                               const Vector& alpha, double tol = 1e-9) {
  const std::size_t M = utilities.size();
  const std::size_t N = alpha.size();
  const std::size_t n_gamma = M * N;
  const Vector zero(N, 0.0);

  LinearSystem sys(n_gamma + M);
  double lo = 0.0, hi = 0.0;
  for (std::size_t k = 0; k < N; ++k) {
    if (!(alpha[k] > 0.0)) throw std::invalid_argument("maximize_min_affine: probe must be strictly positive");
    for (std::size_t i = 0; i < M; ++i) sys.set_bounds(i * N + k, 0.0, 1.0 / alpha[k]);
  }
  for (std::size_t i = 0; i < M; ++i) {
    const auto& f = utilities[i];
    const double at_zero = f(zero);
    double cap = std::numeric_limits<double>::infinity();
    for (const auto& piece : f.pieces) {
      double reach = 0.0;  // max of piece.probe'gamma over the budget set
      for (std::size_t k = 0; k < N; ++k) reach = std::max(reach, piece.probe[k] / alpha[k]);
      cap = std::min(cap, piece.u + piece.lambda * (reach - dot(piece.probe, piece.anchor)));
    }
    sys.set_bounds(n_gamma + i, at_zero - 1.0, std::numeric_limits<double>::infinity());
    lo += w[i] * at_zero;
    hi += w[i] * cap;
    for (const auto& piece : f.pieces) {
      std::vector<std::pair<std::size_t, double>> row{{n_gamma + i, 1.0}};
      for (std::size_t k = 0; k < N; ++k) row.emplace_back(i * N + k, -piece.lambda * piece.probe[k]);
      sys.add_row(std::move(row), piece.u - piece.lambda * dot(piece.probe, piece.anchor));
    }
  }
  {
    std::vector<std::pair<std::size_t, double>> budget;
    for (std::size_t i = 0; i < M; ++i)
      for (std::size_t k = 0; k < N; ++k) budget.emplace_back(i * N + k, alpha[k]);
    sys.add_row(std::move(budget), 1.0);
  }
  std::vector<std::pair<std::size_t, double>> target;
  for (std::size_t i = 0; i < M; ++i) target.emplace_back(n_gamma + i, -w[i]);
  sys.add_row(std::move(target), -lo);
  const std::size_t target_row = sys.rows.size() - 1;

  Vector best(n_gamma + M, 0.0);
  {
    auto x = feasible(sys);
    if (!x) throw LinfeasError("maximize_min_affine: origin infeasible");
    best = std::move(*x);
  }
  while (hi - lo > tol * std::max(1.0, std::abs(hi))) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    sys.rows[target_row].rhs = -mid;
    if (auto x = feasible(sys)) {
      lo = mid;
      best = std::move(*x);
    } else {
      hi = mid;
    }
  }
  std::vector<Vector> out(M, Vector(N));
  for (std::size_t i = 0; i < M; ++i)
    for (std::size_t k = 0; k < N; ++k) out[i][k] = best[i * N + k];
  return out;
}

/// Pareto surface of reconstructed (min-affine) utilities.
inline SurfaceSample pareto_surface(std::span<const UtilityFunction> utilities, const Vector& alpha, std::size_t grid) {
  if (grid < 1) throw std::invalid_argument("pareto_surface: grid must be at least 1");
  SurfaceSample out;
  out.probe = alpha;
  for (auto& w : simplex_weights(utilities.size(), grid)) {
    out.points.push_back(stack(maximize_min_affine(utilities, w, alpha)));
    out.weights.push_back(std::move(w));
  }
  return out;
}

/// Symmetric Hausdorff distance between finite point clouds.
inline double hausdorff(std::span<const Vector> a, std::span<const Vector> b) {
  if (a.empty() || b.empty()) throw EmptySet();
  auto directed = [](std::span<const Vector> from, std::span<const Vector> to) {
    double worst = 0.0;
    for (const auto& x : from) {
      double nearest = std::numeric_limits<double>::infinity();
      for (const auto& y : to) nearest = std::min(nearest, distance2(x, y));
      worst = std::max(worst, nearest);
    }
    return worst;
  };
  return std::max(directed(a, b), directed(b, a));
}

/// Mean over probes of the Hausdorff distance between the true and estimated
/// Pareto surfaces.
inline double reconstruction_error(std::span<const UtilitySpec> truth, std::span<const UtilityFunction> estimate,
                                   std::span<const Vector> probes, std::size_t grid) {
  if (probes.empty()) throw std::invalid_argument("reconstruction_error: no probes");
  double total = 0.0;
  for (const auto& alpha : probes)
    total += hausdorff(pareto_surface(truth, alpha, grid).points, pareto_surface(estimate, alpha, grid).points);
  return total / static_cast<double>(probes.size());
}

inline double reconstruction_error(std::span<const UtilitySpec> truth, std::span<const UtilitySpec> estimate,
                                   std::span<const Vector> probes, std::size_t grid) {
  if (probes.empty()) throw std::invalid_argument("reconstruction_error: no probes");
  double total = 0.0;
  for (const auto& alpha : probes)
    total += hausdorff(pareto_surface(truth, alpha, grid).points, pareto_surface(estimate, alpha, grid).points);
  return total / static_cast<double>(probes.size());
}

struct MonteCarloConfig {
  std::size_t runs = 100;
  std::uint64_t master_seed = 0;
  GenConfig gen = paper_preset();
  AmbiguityConfig ambiguity;
  ExchangeOptions exchange;
  std::size_t grid = 15;
  std::size_t test_probes = 5;
  std::size_t threads = 0;  // 0: REVPREF_THREADS or hardware concurrency
};

struct RunRecord {
  std::size_t run = 0;
  std::uint64_t seed = 0;
  bool ok = false;
  std::string failure;
  double phi = 0.0;
  std::size_t iterations = 0;
  double error_naive = 0.0;
  double error_robust = 0.0;
  double robust_objective = 0.0;
  DualPair v;
  ParameterVector psi;  // robust estimate
  std::vector<double> cv_trace;
  std::vector<double> objective_trace;
};

struct MonteCarloReport {
  std::size_t runs = 0;
  std::size_t excluded = 0;
  double avg_error_naive = 0.0;
  double worst_error_naive = 0.0;
  double avg_error_robust = 0.0;
  double worst_error_robust = 0.0;
  std::vector<RunRecord> records;
};

inline std::size_t resolve_threads(std::size_t requested) {
  std::size_t n = requested;
  if (const char* env = std::getenv("REVPREF_THREADS")) {
    const long cap = std::strtol(env, nullptr, 10);
    if (cap > 0) n = n == 0 ? static_cast<std::size_t>(cap) : std::min(n, static_cast<std::size_t>(cap));
  }
  if (n == 0) n = std::max(1u, std::thread::hardware_concurrency());
  return n;
}

/// Test probes used by the evaluation of one run: the observed probes plus
/// `extra` fresh draws from the probe law.
inline std::vector<Vector> evaluation_probes(const GenConfig& gen, const Dataset& d, std::size_t extra) {
  std::vector<Vector> probes = d.probes;
  for (auto& a : draw_probes(gen, extra, kTestProbeStream)) probes.push_back(std::move(a));
  return probes;
}

inline std::uint64_t run_seed(std::uint64_t master_seed, std::size_t run) { return stream_seed(master_seed, 0xC0FFEE, run); }

inline RunRecord monte_carlo_run(const MonteCarloConfig& cfg, std::size_t run) {
  RunRecord rec;
  rec.run = run;
  rec.seed = run_seed(cfg.master_seed, run);
  try {
    GenConfig gen = cfg.gen;
    gen.seed = rec.seed;
    const GeneratedData data = generate_dataset(gen);
    const Dataset& d = data.noisy;

    const ParameterVector naive = naive_estimate(d, cfg.ambiguity, &rec.phi);
    ExchangeState state = exchange_loop(d, cfg.ambiguity, cfg.exchange);
    rec.iterations = state.iterations;
    rec.cv_trace = state.cv_trace;
    rec.objective_trace = state.objective_trace;
    rec.robust_objective = state.objective_trace.back();
    rec.v = state.incumbent_v;
    rec.psi = state.incumbent_psi;

    const auto probes = evaluation_probes(gen, d, cfg.test_probes);
    const auto naive_f = reconstruct_utilities(naive, d);
    const auto robust_f = reconstruct_utilities(state.incumbent_psi, d);
    double sum_naive = 0.0, sum_robust = 0.0;
    for (const auto& alpha : probes) {
      const auto truth = pareto_surface(gen.utilities, alpha, cfg.grid).points;
      sum_naive += hausdorff(truth, pareto_surface(naive_f, alpha, cfg.grid).points);
      sum_robust += hausdorff(truth, pareto_surface(robust_f, alpha, cfg.grid).points);
    }
    rec.error_naive = sum_naive / static_cast<double>(probes.size());
    rec.error_robust = sum_robust / static_cast<double>(probes.size());
    rec.ok = true;
  } catch (const IterationCapExceeded& e) {
    rec.failure = e.what();
    rec.iterations = e.state.iterations;
    rec.cv_trace = e.state.cv_trace;
    rec.objective_trace = e.state.objective_trace;
  } catch (const std::exception& e) {
    rec.failure = e.what();
  }
  return rec;
}

/// Runs are independent and seeded from (master_seed, run index); the report
/// does not depend on the number of worker threads.
inline MonteCarloReport monte_carlo(const MonteCarloConfig& cfg) {
  if (cfg.runs < 1) throw std::invalid_argument("monte_carlo: runs must be at least 1");
  cfg.ambiguity.validate();
  MonteCarloReport report;
  report.runs = cfg.runs;
  report.records.resize(cfg.runs);

  const std::size_t workers = std::min(resolve_threads(cfg.threads), cfg.runs);
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t r = next++; r < cfg.runs; r = next++) report.records[r] = monte_carlo_run(cfg, r);
  };
  if (workers <= 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t k = 0; k < workers; ++k) pool.emplace_back(work);
  }

  std::size_t used = 0;
  for (const auto& rec : report.records) {
    if (!rec.ok) {
      ++report.excluded;
      continue;
    }
    ++used;
    report.avg_error_naive += rec.error_naive;
    report.avg_error_robust += rec.error_robust;
    report.worst_error_naive = std::max(report.worst_error_naive, rec.error_naive);
    report.worst_error_robust = std::max(report.worst_error_robust, rec.error_robust);
  }
  if (used > 0) {
    report.avg_error_naive /= static_cast<double>(used);
    report.avg_error_robust /= static_cast<double>(used);
  }
  return report;
}

}  // namespace revpref
