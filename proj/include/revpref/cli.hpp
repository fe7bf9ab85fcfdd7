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

// Command-line front end: generate | detect | estimate | evaluate | montecarlo.
//
// Exit codes: 0 success, 2 configuration or input error, 3 numerical failure.
// Options may also come from a TOML/INI file given with --config; flags on the
// command line take precedence. Each command logs its resolved configuration
// to the error stream as a single JSON line.

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "revpref/afriat.hpp"
#include "revpref/eval.hpp"
#include "revpref/forward.hpp"
#include "revpref/io.hpp"
#include "revpref/robust.hpp"
#include "revpref/types.hpp"

namespace revpref::cli {

enum ExitCode : int { kOk = 0, kConfigError = 2, kNumericError = 3 };

struct GenerateArgs {
  std::string preset = "paper";
  std::uint64_t seed = 0;
  std::size_t T = 5, M = 3, N = 2;
  double sigma = 1.0;
  std::string out_clean, out_noisy;
};

struct AmbiguityArgs {
  double epsilon = 0.2;
  double delta = 0.1;
  double R = 3.0;
  double lambda_min = 1e-3;
  std::size_t max_iterations = 200;

  AmbiguityConfig config() const {
    AmbiguityConfig c;
    c.epsilon = epsilon;
    c.delta = delta;
    c.R = R;
    c.lambda_min = lambda_min;
    return c;
  }
};

struct DetectArgs {
  std::string data, report;
  double lambda_min = 1e-3;
};

struct EstimateArgs {
  std::string data, out, trace;
  std::string mode = "robust";
  AmbiguityArgs ambiguity;
};

struct EvaluateArgs {
  std::string data, estimate, out, preset = "paper";
  std::uint64_t seed = 0;
  std::size_t grid = 15;
  std::size_t test_probes = 5;
};

struct MonteCarloArgs {
  std::string preset = "paper", out, trace_dir;
  std::uint64_t seed = 0;
  std::size_t runs = 100;
  double sigma = 1.0;
  std::size_t grid = 15;
  std::size_t test_probes = 5;
  std::size_t threads = 0;
  AmbiguityArgs ambiguity;
};

namespace detail {

inline void add_ambiguity(CLI::App* cmd, AmbiguityArgs& a) {
  cmd->add_option("--epsilon", a.epsilon, "Wasserstein radius")->capture_default_str();
  cmd->add_option("--delta", a.delta, "stopping tolerance on the constraint violation")->capture_default_str();
  cmd->add_option("--R", a.R, "support radius around each observed signal")->capture_default_str();
  cmd->add_option("--lambda-min", a.lambda_min, "lower bound on the multipliers")->capture_default_str();
  cmd->add_option("--max-iterations", a.max_iterations, "exchange iteration cap")->capture_default_str();
}

inline GenConfig preset_config(const std::string& preset, std::uint64_t seed, double sigma) {
  if (preset != "paper") throw std::invalid_argument("unknown preset '" + preset + "'");
  return paper_preset(seed, sigma);
}

inline void log_config(std::ostream& err, const std::string& command, const json& config) {
  err << json{{"command", command}, {"config", config}}.dump() << '\n';
}

inline json envelope(const std::string& command, const json& config) {
  return json{{"schema_version", kSchemaVersion}, {"command", command}, {"config", config}};
}

inline json ambiguity_json(const AmbiguityArgs& a) {
  json j = a.config();
  j["max_iterations"] = a.max_iterations;
  return j;
}

inline std::string default_trace_path(const std::string& out) {
  std::filesystem::path p(out);
  p.replace_extension(".trace.csv");
  return p.string();
}

inline int cmd_generate(const GenerateArgs& a, std::ostream& out, std::ostream& err) {
  if (a.out_clean.empty() && a.out_noisy.empty()) {
    err << "generate: at least one of --out-clean or --out-noisy is required\n";
    return kConfigError;
  }
  GenConfig cfg = preset_config(a.preset, a.seed, a.sigma);
  if (a.M != cfg.M || a.N != cfg.N) throw std::invalid_argument("the paper preset fixes M = 3 and N = 2");
  cfg.T = a.T;
  cfg.validate();
  const json config = cfg;
  log_config(err, "generate", config);
  const GeneratedData data = generate_dataset(cfg);
  auto document = [&](const Dataset& d) {
    json j = d;
    j["schema_version"] = kSchemaVersion;
    j["config"] = config;
    return j;
  };
  if (!a.out_clean.empty()) write_json_file(a.out_clean, document(data.clean));
  if (!a.out_noisy.empty()) write_json_file(a.out_noisy, document(data.noisy));
  out << json{{"max_noise_norm", data.max_noise_norm}, {"clamped", data.clamped}}.dump() << '\n';
  return kOk;
}

inline int cmd_detect(const DetectArgs& a, std::ostream& out, std::ostream& err) {
  AmbiguityConfig cfg;
  cfg.lambda_min = a.lambda_min;
  const json config{{"data", a.data}, {"lambda_min", a.lambda_min}};
  log_config(err, "detect", config);
  const Dataset d = read_dataset(a.data);
  require_valid(d, cfg);
  const bool coordinated = coordination_test(d, cfg).has_value();
  const ProximityResult prox = proximity(d, cfg);
  out << json{{"coordinated", coordinated}, {"phi", prox.phi}}.dump() << '\n';
  if (!a.report.empty()) {
    json j = envelope("detect", config);
    j["coordinated"] = coordinated;
    j["phi"] = prox.phi;
    j["witness"] = prox.witness;
    write_json_file(a.report, j);
  }
  return kOk;
}

inline int cmd_estimate(const EstimateArgs& a, std::ostream& out, std::ostream& err) {
  if (a.mode != "naive" && a.mode != "robust") throw std::invalid_argument("mode must be naive or robust");
  const AmbiguityConfig cfg = a.ambiguity.config();
  cfg.validate();
  json config = ambiguity_json(a.ambiguity);
  config["data"] = a.data;
  config["mode"] = a.mode;
  log_config(err, "estimate", config);
  const Dataset d = read_dataset(a.data);
  require_valid(d, cfg);

  json j = envelope("estimate", config);
  j["mode"] = a.mode;
  if (a.mode == "naive") {
    double phi = 0.0;
    const ParameterVector psi = naive_estimate(d, cfg, &phi);
    j["phi"] = phi;
    j["psi"] = psi;
    j["utilities"] = reconstruct_utilities(psi, d);
    write_json_file(a.out, j);
    out << json{{"mode", "naive"}, {"phi", phi}}.dump() << '\n';
    return kOk;
  }

  const std::string trace = a.trace.empty() ? default_trace_path(a.out) : a.trace;
  ExchangeOptions opt;
  opt.max_iterations = a.ambiguity.max_iterations;
  try {
    const ExchangeState state = exchange_loop(d, cfg, opt);
    write_text_file(trace, trace_csv(state.objective_trace, state.cv_trace));
    j["psi"] = state.incumbent_psi;
    j["v"] = state.incumbent_v;
    j["objective"] = state.objective_trace.back();
    j["cv"] = state.cv_trace.back();
    j["iterations"] = state.iterations;
    j["utilities"] = reconstruct_utilities(state.incumbent_psi, d);
    write_json_file(a.out, j);
    out << json{{"mode", "robust"}, {"objective", state.objective_trace.back()}, {"iterations", state.iterations}}.dump()
        << '\n';
  } catch (const IterationCapExceeded& e) {
    write_text_file(trace, trace_csv(e.state.objective_trace, e.state.cv_trace));
    throw;
  }
  return kOk;
}

inline int cmd_evaluate(const EvaluateArgs& a, std::ostream& out, std::ostream& err) {
  if (a.grid < 1) throw std::invalid_argument("grid must be at least 1");
  const GenConfig gen = preset_config(a.preset, a.seed, 1.0);
  const json config{{"data", a.data},         {"estimate", a.estimate}, {"preset", a.preset},
                    {"seed", a.seed},         {"grid", a.grid},         {"test_probes", a.test_probes}};
  log_config(err, "evaluate", config);
  const Dataset d = read_dataset(a.data);
  const json est = read_json_file(a.estimate);
  if (!est.contains("psi")) throw FormatError(a.estimate + ": missing psi");
  const ParameterVector psi = est.at("psi").get<ParameterVector>();
  if (psi.agents() != d.M || psi.rounds() != d.T) throw FormatError("estimate does not match the dataset shape");
  if (gen.M != d.M || gen.N != d.N) throw std::invalid_argument("preset utilities do not match the dataset shape");

  const auto f = reconstruct_utilities(psi, d);
  const auto probes = evaluation_probes(gen, d, a.test_probes);
  std::vector<double> per_probe;
  double total = 0.0;
  for (const auto& alpha : probes) {
    const double e = hausdorff(pareto_surface(gen.utilities, alpha, a.grid).points, pareto_surface(f, alpha, a.grid).points);
    per_probe.push_back(e);
    total += e;
  }
  const double error = total / static_cast<double>(probes.size());
  json j = envelope("evaluate", config);
  j["error"] = error;
  j["per_probe"] = per_probe;
  if (!a.out.empty()) write_json_file(a.out, j);
  out << json{{"error", error}}.dump() << '\n';
  return kOk;
}

inline int cmd_montecarlo(const MonteCarloArgs& a, std::ostream& out, std::ostream& err) {
  MonteCarloConfig cfg;
  cfg.runs = a.runs;
  cfg.master_seed = a.seed;
  cfg.gen = preset_config(a.preset, 0, a.sigma);
  cfg.ambiguity = a.ambiguity.config();
  cfg.exchange.max_iterations = a.ambiguity.max_iterations;
  cfg.grid = a.grid;
  cfg.test_probes = a.test_probes;
  cfg.threads = a.threads;
  cfg.ambiguity.validate();
  cfg.gen.validate();
  if (a.runs < 1) throw std::invalid_argument("runs must be at least 1");
  if (a.grid < 1) throw std::invalid_argument("grid must be at least 1");

  json config = ambiguity_json(a.ambiguity);
  config["runs"] = a.runs;
  config["seed"] = a.seed;
  config["preset"] = a.preset;
  config["generator"] = cfg.gen;
  config["grid"] = a.grid;
  config["test_probes"] = a.test_probes;
  log_config(err, "montecarlo", config);

  const MonteCarloReport rep = monte_carlo(cfg);
  if (!a.trace_dir.empty()) {
    std::filesystem::create_directories(a.trace_dir);
    for (const auto& r : rep.records) {
      if (r.objective_trace.empty()) continue;
      const auto path = std::filesystem::path(a.trace_dir) / ("run_" + std::to_string(r.run) + ".csv");
      write_text_file(path.string(), trace_csv(r.objective_trace, r.cv_trace));
    }
  }
  if (!a.out.empty()) {
    json j = envelope("montecarlo", config);
    j["report"] = report_json(rep);
    write_json_file(a.out, j);
  }

  out << "method   average    worst\n";
  char line[96];
  std::snprintf(line, sizeof line, "naive    %.4f     %.4f\n", rep.avg_error_naive, rep.worst_error_naive);
  out << line;
  std::snprintf(line, sizeof line, "robust   %.4f     %.4f\n", rep.avg_error_robust, rep.worst_error_robust);
  out << line;
  out << "runs " << rep.runs << ", excluded " << rep.excluded << '\n';
  return kOk;
}

}  // namespace detail

/// Parses argv and dispatches. Never throws.
inline int run(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  CLI::App app{"Coordination detection and robust utility estimation from revealed preferences", "revpref"};
  app.set_config("--config", "", "read options from a TOML or INI file");
  app.require_subcommand(1);

  GenerateArgs gen;
  auto* generate = app.add_subcommand("generate", "simulate a clean and a noisy dataset");
  generate->add_option("--preset", gen.preset, "generator preset")->capture_default_str();
  generate->add_option("--seed", gen.seed, "random seed")->capture_default_str();
  generate->add_option("--T", gen.T, "number of probes")->capture_default_str();
  generate->add_option("--M", gen.M, "number of agents")->capture_default_str();
  generate->add_option("--N", gen.N, "signal dimension")->capture_default_str();
  generate->add_option("--sigma", gen.sigma, "noise standard deviation")->capture_default_str();
  generate->add_option("--out-clean", gen.out_clean, "clean dataset JSON");
  generate->add_option("--out-noisy", gen.out_noisy, "noisy dataset JSON");

  DetectArgs det;
  auto* detect = app.add_subcommand("detect", "test a dataset for coordination and compute its proximity statistic");
  detect->add_option("--data", det.data, "dataset JSON")->required();
  detect->add_option("--report", det.report, "full report JSON");
  detect->add_option("--lambda-min", det.lambda_min, "lower bound on the multipliers")->capture_default_str();

  EstimateArgs est;
  auto* estimate = app.add_subcommand("estimate", "recover utility parameters");
  estimate->add_option("--data", est.data, "dataset JSON")->required();
  estimate->add_option("--mode", est.mode, "naive or robust")->capture_default_str();
  estimate->add_option("--out", est.out, "estimate JSON")->required();
  estimate->add_option("--trace", est.trace, "convergence CSV (robust mode)");
  detail::add_ambiguity(estimate, est.ambiguity);

  EvaluateArgs ev;
  auto* evaluate = app.add_subcommand("evaluate", "reconstruction error of an estimate against the preset utilities");
  evaluate->add_option("--data", ev.data, "dataset JSON the estimate was fitted on")->required();
  evaluate->add_option("--estimate", ev.estimate, "estimate JSON")->required();
  evaluate->add_option("--preset", ev.preset, "true utilities")->capture_default_str();
  evaluate->add_option("--seed", ev.seed, "seed for the fresh test probes")->capture_default_str();
  evaluate->add_option("--grid", ev.grid, "simplex weight resolution")->capture_default_str();
  evaluate->add_option("--test-probes", ev.test_probes, "fresh probes beyond the observed ones")->capture_default_str();
  evaluate->add_option("--out", ev.out, "report JSON");

  MonteCarloArgs mc;
  auto* montecarlo = app.add_subcommand("montecarlo", "compare naive and robust estimates over simulated runs");
  montecarlo->add_option("--runs", mc.runs, "number of runs")->capture_default_str();
  montecarlo->add_option("--seed", mc.seed, "master seed")->capture_default_str();
  montecarlo->add_option("--preset", mc.preset, "generator preset")->capture_default_str();
  montecarlo->add_option("--sigma", mc.sigma, "noise standard deviation")->capture_default_str();
  montecarlo->add_option("--grid", mc.grid, "simplex weight resolution")->capture_default_str();
  montecarlo->add_option("--test-probes", mc.test_probes, "fresh probes per run")->capture_default_str();
  montecarlo->add_option("--threads", mc.threads, "worker threads (0 uses REVPREF_THREADS or all cores)")
      ->capture_default_str();
  montecarlo->add_option("--out", mc.out, "report JSON");
  montecarlo->add_option("--trace-dir", mc.trace_dir, "directory for per-run convergence CSVs");
  detail::add_ambiguity(montecarlo, mc.ambiguity);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n' << app.help();
    return kConfigError;
  }

  try {
    if (generate->parsed()) return detail::cmd_generate(gen, out, err);
    if (detect->parsed()) return detail::cmd_detect(det, out, err);
    if (estimate->parsed()) return detail::cmd_estimate(est, out, err);
    if (evaluate->parsed()) return detail::cmd_evaluate(ev, out, err);
    if (montecarlo->parsed()) return detail::cmd_montecarlo(mc, out, err);
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << '\n';
    return kConfigError;
  } catch (const std::exception& e) {
    err << "numerical failure: " << e.what() << '\n';
    return kNumericError;
  }
  return kConfigError;
}

}  // namespace revpref::cli
