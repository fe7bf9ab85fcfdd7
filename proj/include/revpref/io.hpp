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

// JSON and CSV serialization. Every document written here is a pure function
// of its input, so reruns with the same configuration are byte-identical.

#include <charconv>
#include <cstddef>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <system_error>
#include <vector>

#include "json.hpp"
#include "revpref/eval.hpp"
#include "revpref/forward.hpp"
#include "revpref/robust.hpp"
#include "revpref/types.hpp"

namespace revpref {

using json = nlohmann::json;

inline constexpr int kSchemaVersion = 1;

/// Malformed or inconsistent input document.
class FormatError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

inline void to_json(json& j, const Dataset& d) {
  j = json{{"T", d.T}, {"M", d.M}, {"N", d.N}, {"probes", d.probes}, {"signals", d.signals}, {"noisy", d.noisy}};
}

inline void from_json(const json& j, Dataset& d) {
  try {
    d.T = j.at("T").get<std::size_t>();
    d.M = j.at("M").get<std::size_t>();
    d.N = j.at("N").get<std::size_t>();
    d.probes = j.at("probes").get<std::vector<Vector>>();
    d.signals = j.at("signals").get<std::vector<std::vector<Vector>>>();
    d.noisy = j.value("noisy", false);
  } catch (const json::exception& e) {
    throw FormatError(std::string("dataset: ") + e.what());
  }
  if (d.probes.size() != d.T) throw FormatError("dataset: probes must hold T rows");
  if (d.signals.size() != d.M) throw FormatError("dataset: signals must hold M agents");
  for (const auto& a : d.probes)
    if (a.size() != d.N) throw FormatError("dataset: probe length must be N");
  for (const auto& agent : d.signals) {
    if (agent.size() != d.T) throw FormatError("dataset: each agent needs T signals");
    for (const auto& b : agent)
      if (b.size() != d.N) throw FormatError("dataset: signal length must be N");
  }
}

inline void to_json(json& j, const ParameterVector& p) { j = json{{"u", p.u}, {"lambda", p.lambda}}; }

inline void from_json(const json& j, ParameterVector& p) {
  try {
    p.u = j.at("u").get<std::vector<Vector>>();
    p.lambda = j.at("lambda").get<std::vector<Vector>>();
  } catch (const json::exception& e) {
    throw FormatError(std::string("parameters: ") + e.what());
  }
  if (p.u.size() != p.lambda.size()) throw FormatError("parameters: u and lambda disagree in shape");
  for (std::size_t i = 0; i < p.u.size(); ++i)
    if (p.u[i].size() != p.lambda[i].size()) throw FormatError("parameters: u and lambda disagree in shape");
}

inline void to_json(json& j, const DualPair& v) { j = json{{"v1", v.v1}, {"v2", v.v2}}; }

inline void to_json(json& j, const UtilityPiece& p) {
  j = json{{"u", p.u}, {"lambda", p.lambda}, {"probe", p.probe}, {"anchor", p.anchor}};
}

inline void to_json(json& j, const UtilityFunction& f) { j = json{{"pieces", f.pieces}}; }

inline void to_json(json& j, const AmbiguityConfig& c) {
  j = json{{"epsilon", c.epsilon}, {"R", c.R}, {"delta", c.delta}, {"lambda_min", c.lambda_min}, {"alpha_min", c.alpha_min}};
}

inline void to_json(json& j, const UtilityTerm& t) { j = json{{"coefficient", t.coefficient}, {"exponent", t.exponent}}; }

inline void to_json(json& j, const UtilitySpec& s) { j = json{{"terms", s.terms}}; }

inline void to_json(json& j, const GenConfig& c) {
  j = json{{"T", c.T},
           {"M", c.M},
           {"N", c.N},
           {"utilities", c.utilities},
           {"weights", c.resolved_weights()},
           {"probe_low", c.probe_low},
           {"probe_high", c.probe_high},
           {"sigma", c.sigma},
           {"floor", c.floor},
           {"truncate", c.truncate},
           {"seed", c.seed}};
}

inline json record_json(const RunRecord& r) {
  json j{{"run", r.run}, {"seed", r.seed}, {"ok", r.ok}};
  if (!r.ok) {
    j["failure"] = r.failure;
    return j;
  }
  j["phi"] = r.phi;
  j["iterations"] = r.iterations;
  j["error_naive"] = r.error_naive;
  j["error_robust"] = r.error_robust;
  j["robust_objective"] = r.robust_objective;
  j["v"] = r.v;
  return j;
}

inline json report_json(const MonteCarloReport& rep) {
  json records = json::array();
  for (const auto& r : rep.records) records.push_back(record_json(r));
  return json{{"runs", rep.runs},
              {"excluded", rep.excluded},
              {"naive", {{"average", rep.avg_error_naive}, {"worst", rep.worst_error_naive}}},
              {"robust", {{"average", rep.avg_error_robust}, {"worst", rep.worst_error_robust}}},
              {"records", std::move(records)}};
}

inline json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open " + path);
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw FormatError(path + ": " + e.what());
  }
}

inline Dataset read_dataset(const std::string& path) { return read_json_file(path).get<Dataset>(); }

inline void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << text;
  if (!out) throw std::runtime_error("write failed for " + path);
}

inline void write_json_file(const std::string& path, const json& j) { write_text_file(path, j.dump(2) + "\n"); }

/// Shortest decimal form that round-trips to the same double.
inline std::string format_double(double x) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, x);
  if (res.ec != std::errc{}) throw std::runtime_error("format_double: conversion failed");
  return std::string(buf, res.ptr);
}

/// Convergence trace with header `iteration,objective,cv`. Row k pairs the
/// k-th master objective with the violation certified at that incumbent.
inline std::string trace_csv(const std::vector<double>& objective, const std::vector<double>& cv) {
  std::ostringstream out;
  out << "iteration,objective,cv\n";
  const std::size_t rows = std::min(objective.size(), cv.size());
  for (std::size_t k = 0; k < rows; ++k) out << k << ',' << format_double(objective[k]) << ',' << format_double(cv[k]) << '\n';
  return out.str();
}

}  // namespace revpref
