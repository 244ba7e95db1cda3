// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "stormdist/algorithms.hpp"
#include "stormdist/problems.hpp"
#include "stormdist/schedule.hpp"

namespace stormdist::harness {

struct ScheduleConfig {
  double b = 0.5;
  double alpha = 2.0 / 3.0;
  std::optional<double> kappa_bar;
  std::optional<double> c;
  std::optional<double> w0;
  /// G (adstorm) or sigma (dstorm/dsgd) used by the schedule. Defaults to the
  /// problem's declared G or sigma.
  std::optional<double> noise_scale;
  /// Constant D-SGD step. Without it D-SGD follows the non-adaptive schedule.
  std::optional<double> eta;
  bool force_a_one = false;
  bool fresh_sample_step5 = false;
};

struct RunConfig {
  ProblemConfig problem;
  std::vector<Algorithm> algos;
  std::vector<std::uint64_t> rounds;  // T values
  std::vector<std::size_t> workers;   // K values
  std::vector<std::uint64_t> seeds;
  ScheduleConfig schedule;
  std::string output_dir = "out";
  std::size_t reservoir_cap = 4096;
  std::optional<double> epsilon;
};

/// Strict: unknown keys raise ConfigKeyError with the dotted key path,
/// missing required keys too; bad values raise ValidationError.
ProblemConfig parse_problem(const nlohmann::json& j, const std::string& path = "problem");
nlohmann::json problem_to_json(const ProblemConfig& config);

RunConfig parse_run_config(const nlohmann::json& j);
RunConfig parse_run_config_text(const std::string& text);
RunConfig load_run_config(const std::string& path);

/// Checks every (algo, K) combination against the problem and schedule
/// rules so bad configs fail before any cell runs.
void validate_run_config(const RunConfig& config);

/// Schedule parameters for one cell, with overrides applied and validated.
ScheduleParams resolve_schedule(const RunConfig& config, const ProblemSpec& spec, Algorithm algo);

}  // namespace stormdist::harness
