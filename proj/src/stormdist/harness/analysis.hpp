// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "stormdist/algorithms.hpp"

namespace stormdist::harness {

/// Per-run reductions of the metrics stream.
struct RunStats {
  double min_grad_norm = 0.0;
  double mean_grad_norm = 0.0;  // (1/T) sum |grad f(x_t)|
  double sum_grad_sq = 0.0;     // sum |grad f(x_t)|^2
  /// First t with |grad f(x_t)| <= epsilon.
  std::optional<std::uint64_t> first_t_below_eps;
};

RunStats summarize(std::span<const MetricsRecord> metrics, std::optional<double> epsilon);

/// Oracle calls per worker after t rounds: init + 2 per round.
constexpr std::uint64_t ifo_after_rounds(std::uint64_t t) { return 1 + 2 * t; }

/// Least-squares slope of log(metric) against log(T).
/// Needs >= 4 points, positive values and a non-degenerate spread in T.
double fit_slope(std::span<const double> t_values, std::span<const double> metric_values);

struct MeanStderr {
  double mean = 0.0;
  double stderr_ = 0.0;
};

MeanStderr mean_stderr(std::span<const double> values);

struct SweepCell {
  Algorithm algo = Algorithm::kDStorm;
  std::size_t workers = 1;
  std::uint64_t rounds = 1;
  std::uint64_t seed = 0;
  RunStats stats;
  bool aborted = false;
};

/// One row per (algo, K, T).
struct SummaryRow {
  Algorithm algo = Algorithm::kDStorm;
  std::size_t workers = 1;
  std::uint64_t rounds = 1;
  std::size_t seeds = 0;
  MeanStderr min_grad_norm;
  MeanStderr mean_grad_norm;
  /// Fitted over all T values of this (algo, K); only with >= 4 T values
  /// spanning >= 2 decades.
  std::optional<double> slope_vs_t;
  std::size_t reached_eps = 0;
  std::optional<double> mean_ifo_to_eps;
};

std::vector<SummaryRow> summarize_sweep(std::span<const SweepCell> cells);

struct SpeedupRow {
  std::size_t workers = 1;
  double metric = 0.0;
  /// metric(K) / metric(K_max)
  double ratio = 0.0;
  /// (K_max / K)^{1/3}: the ratio a K^{-1/3} law predicts.
  double reference = 0.0;
};

/// Rows must share one (algo, T) and have at least two distinct K.
std::vector<SpeedupRow> speedup_table(std::span<const std::size_t> workers,
                                      std::span<const double> metric);

}  // namespace stormdist::harness
