// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "stormdist/param_vector.hpp"
#include "stormdist/problems.hpp"
#include "stormdist/rng.hpp"
#include "stormdist/runtime.hpp"
#include "stormdist/schedule.hpp"

namespace stormdist {

enum class Algorithm { kAdStorm, kDStorm, kDSgd };

std::string_view to_string(Algorithm algo);
std::optional<Algorithm> parse_algorithm(std::string_view name);

struct RunOptions {
  std::uint64_t rounds = 1;  // T
  std::uint64_t master_seed = 0;
  /// Pin a_t = 1 (pure SGD branch of the direction recursion).
  bool force_a_one = false;
  /// AD-STORM: draw a fresh sample for the gradient-norm feedback instead of
  /// reusing the cached gradient (+1 oracle call per worker per round).
  bool fresh_sample_step5 = false;
  std::size_t reservoir_cap = 4096;
  unsigned threads = 1;
  std::string trace_path;
  /// Keep every iterate x_1..x_T, not just the reservoir.
  bool record_trajectory = false;
  /// AD-STORM: replace the measured Gbar_t^2 by this constant after the
  /// exchange. Used to check the adaptive/non-adaptive equivalence.
  std::optional<double> forced_gbar_sq;
};

struct MetricsRecord {
  std::uint64_t t = 0;
  double eta = 0.0;
  double a = 0.0;  // a_{t+1} produced this round
  double grad_norm = 0.0;
  double f_val = 0.0;
  double err_norm = 0.0;
  double potential = 0.0;
  std::uint64_t ifo_per_worker = 0;
  std::uint64_t bytes_up = 0;
  std::uint64_t bytes_down = 0;
  bool clamped = false;
  bool out_of_region = false;
};

struct SampledIterate {
  std::uint64_t t = 0;
  ParamVector x;
};

/// Uniform reservoir (Algorithm R) over the iterates seen so far.
class IterateReservoir {
 public:
  IterateReservoir(std::size_t capacity, std::uint64_t master_seed);
  void offer(std::uint64_t t, const ParamVector& x);
  std::span<const SampledIterate> items() const noexcept { return items_; }
  std::uint64_t seen() const noexcept { return seen_; }

 private:
  std::size_t capacity_;
  std::uint64_t master_seed_;
  std::uint64_t seen_ = 0;
  std::vector<SampledIterate> items_;
};

/// Uniform choice among the stored iterates.
const SampledIterate& select_output(std::span<const SampledIterate> iterates, SplitMixRng& rng);

struct RunResult {
  Algorithm algo = Algorithm::kDStorm;
  ScheduleParams params;
  std::vector<MetricsRecord> metrics;
  std::vector<SampledIterate> iterates_sampled;
  std::vector<ParamVector> trajectory;
  ParamVector x_a;
  std::uint64_t x_a_index = 0;
  RoundAccounting accounting;
  RoundAccounting init_accounting;
  /// Set when the run stopped early (divergence or non-finite iterate).
  std::optional<std::string> abort_reason;
};

RunResult run_adstorm(const ProblemSpec& spec, const ScheduleParams& params,
                      const RunOptions& options);
RunResult run_dstorm(const ProblemSpec& spec, const ScheduleParams& params,
                     const RunOptions& options);

/// Distributed SGD: the server averages K stochastic gradients each round.
/// etas[t] is the step for round t; etas[0] only feeds the potential.
RunResult run_dsgd(const ProblemSpec& spec, std::span<const double> etas,
                   const RunOptions& options);

/// eta_0..eta_T of the non-adaptive schedule.
std::vector<double> nonadaptive_etas(const ScheduleParams& params, std::uint64_t rounds);

}  // namespace stormdist
