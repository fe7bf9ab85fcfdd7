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

#include <gtest/gtest.h>

#include <random>

#include "oracles.hpp"
#include "revpref/afriat.hpp"
#include "revpref/forward.hpp"

namespace revpref {
namespace {

UtilitySpec spec(std::vector<UtilityTerm> terms) { return UtilitySpec{std::move(terms)}; }

// Best value on a grid of the single-agent budget line alpha'beta = 1.
double budget_line_grid(const UtilitySpec& f, const Vector& alpha, double step) {
  double best = -1e300;
  for (double x = 0.0; x <= 1.0 / alpha[0] + 1e-12; x += step) {
    const double y = std::max(0.0, (1.0 - alpha[0] * x) / alpha[1]);
    best = std::max(best, f(Vector{x, y}));
  }
  return best;
}

TEST(SolveCoordination, LinearPicksCheapCoordinate) {
  const std::vector<UtilitySpec> f{spec({{1.0, 1.0}, {1.0, 1.0}})};
  const auto sol = solve_coordination(f, Vector{1.0, 2.0});
  EXPECT_NEAR(sol.signals[0][0], 1.0, 1e-9);
  EXPECT_NEAR(sol.signals[0][1], 0.0, 1e-9);
  EXPECT_NEAR(sol.value, 1.0, 1e-9);
  EXPECT_NEAR(budget_line_grid(f[0], {1.0, 2.0}, 1e-3), 1.0, 1e-9);
}

TEST(SolveCoordination, LinearTieExhaustsBudget) {
  const std::vector<UtilitySpec> f{spec({{1.0, 1.0}, {1.0, 1.0}})};
  const auto sol = solve_coordination(f, Vector{1.0, 1.0});
  EXPECT_NEAR(sol.signals[0][0] + sol.signals[0][1], 1.0, 1e-6);
  EXPECT_NEAR(sol.value, 1.0, 1e-9);
}

TEST(SolveCoordination, SinglePowerTerm) {
  const std::vector<UtilitySpec> f{spec({{1.0, 0.25}, {0.0, 1.0}})};
  const auto sol = solve_coordination(f, Vector{0.8, 0.3});
  EXPECT_NEAR(sol.signals[0][0], 1.0 / 0.8, 1e-6);
  EXPECT_NEAR(sol.signals[0][1], 0.0, 1e-9);
  EXPECT_NEAR(budget_line_grid(f[0], {0.8, 0.3}, 1e-3), sol.value, 1e-6);
}

TEST(SolveCoordination, InteriorPowerSplitMatchesGrid) {
  const std::vector<UtilitySpec> f{spec({{1.0, 0.5}, {2.0, 0.25}})};
  const Vector alpha{0.6, 0.9};
  const auto sol = solve_coordination(f, alpha);
  EXPECT_NEAR(budget_line_grid(f[0], alpha, 1e-5), sol.value, 1e-6);
  EXPECT_GE(sol.value, budget_line_grid(f[0], alpha, 1e-5) - 1e-12);
}

TEST(SolveCoordination, BeatsRandomChallengers) {
  std::mt19937_64 rng(77);
  std::uniform_int_distribution<int> dim(1, 3);
  std::uniform_real_distribution<double> a(0.1, 1.1), w(0.2, 2.0);
  for (int k = 0; k < 40; ++k) {
    const std::size_t M = dim(rng), N = dim(rng);
    std::vector<UtilitySpec> specs;
    Vector weights(M), alpha(N);
    for (std::size_t i = 0; i < M; ++i) {
      specs.push_back(oracle::random_spec(N, rng));
      weights[i] = w(rng);
    }
    for (double& x : alpha) x = a(rng);
    const auto sol = solve_coordination(specs, weights, alpha);
    EXPECT_LE(sol.kkt_residual, kKktTolerance);
    EXPECT_LE(oracle::budget_used(alpha, sol.signals), 1.0 + 1e-9);
    EXPECT_NEAR(oracle::weighted_value(specs, weights, sol.signals), sol.value, 1e-9);
    for (int c = 0; c < 1000; ++c) {
      const auto x = oracle::random_feasible_allocation(M, alpha, rng);
      EXPECT_GE(sol.value, oracle::weighted_value(specs, weights, x) - 1e-9);
    }
  }
}

TEST(SolveCoordination, RejectsBadInput) {
  const std::vector<UtilitySpec> f{spec({{1.0, 1.0}, {1.0, 1.0}})};
  EXPECT_THROW(solve_coordination(f, Vector{1.0, 0.0}), std::invalid_argument);
  EXPECT_THROW(solve_coordination(f, Vector{1.0, 1.0, 1.0}), std::invalid_argument);
  const std::vector<UtilitySpec> bad{spec({{1.0, 1.5}, {1.0, 1.0}})};
  EXPECT_THROW(solve_coordination(bad, Vector{1.0, 1.0}), std::invalid_argument);
}

TEST(GenerateDataset, Deterministic) {
  const auto a = generate_dataset(paper_preset(99));
  const auto b = generate_dataset(paper_preset(99));
  EXPECT_EQ(a.clean, b.clean);
  EXPECT_EQ(a.noisy, b.noisy);
  EXPECT_NE(a.noisy, generate_dataset(paper_preset(100)).noisy);
}

TEST(GenerateDataset, PresetShapeAndInvariants) {
  const auto g = generate_dataset(paper_preset(4));
  const Dataset& c = g.clean;
  EXPECT_EQ(c.T, 5u);
  EXPECT_EQ(c.M, 3u);
  EXPECT_EQ(c.N, 2u);
  EXPECT_FALSE(c.noisy);
  EXPECT_TRUE(g.noisy.noisy);
  EXPECT_EQ(c.probes, g.noisy.probes);
  for (std::size_t t = 0; t < c.T; ++t) {
    for (double x : c.probes[t]) {
      EXPECT_GE(x, 0.1);
      EXPECT_LE(x, 1.1);
    }
    double budget = 0.0;
    for (std::size_t i = 0; i < c.M; ++i) budget += dot(c.probes[t], c.signals[i][t]);
    EXPECT_LE(budget, 1.0 + 1e-9);
  }
  for (const auto& agent : g.noisy.signals)
    for (const auto& b : agent)
      for (double x : b) EXPECT_GE(x, 0.01);
  EXPECT_LE(g.max_noise_norm, 3.0);
}

TEST(GenerateDataset, ZeroNoiseCopiesClean) {
  const auto g = generate_dataset(paper_preset(5, 0.0));
  EXPECT_EQ(g.clean, g.noisy);
  EXPECT_EQ(g.clamped, 0u);
}

TEST(GenerateDataset, CleanDataIsRationalizable) {
  for (std::uint64_t seed = 40; seed < 50; ++seed)
    EXPECT_LE(proximity(generate_dataset(paper_preset(seed, 0.0)).clean, AmbiguityConfig{}).phi, 1e-6);
}

TEST(GenerateDataset, RejectsBadConfig) {
  GenConfig cfg = paper_preset(1);
  cfg.sigma = -1.0;
  EXPECT_THROW(generate_dataset(cfg), std::invalid_argument);
  cfg = paper_preset(1);
  cfg.M = 2;
  EXPECT_THROW(generate_dataset(cfg), std::invalid_argument);
  cfg = paper_preset(1);
  cfg.weights = {1.0, 0.0, 1.0};
  EXPECT_THROW(generate_dataset(cfg), std::invalid_argument);
}

TEST(StreamSeed, DistinctStreams) {
  EXPECT_NE(stream_seed(1, 2, 3), stream_seed(1, 3, 2));
  EXPECT_NE(stream_seed(1, 2, 3), stream_seed(2, 2, 3));
  EXPECT_EQ(stream_seed(1, 2, 3), stream_seed(1, 2, 3));
}

}  // namespace
}  // namespace revpref
