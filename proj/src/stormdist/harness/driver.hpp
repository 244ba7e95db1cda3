// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "stormdist/algorithms.hpp"
#include "stormdist/harness/analysis.hpp"
#include "stormdist/harness/config.hpp"

namespace stormdist::harness {

struct ExecOptions {
  /// 1 runs everything inline; more runs cells and worker compute on TBB.
  unsigned threads = 1;
  std::string trace_path;
};

/// STORMDIST_THREADS if set and positive, else `fallback`.
unsigned threads_from_env(unsigned fallback = 1);

std::string make_run_id(Algorithm algo, std::size_t workers, std::uint64_t rounds,
                        std::uint64_t seed);

/// Runs one (algo, K, T, seed) cell of a config without writing anything.
RunResult run_cell(const RunConfig& config, Algorithm algo, std::size_t workers,
                   std::uint64_t rounds, std::uint64_t seed, unsigned threads = 1,
                   const std::string& trace_path = {});

nlohmann::json run_metadata(const RunConfig& config, const std::string& run_id,
                            const ProblemSpec& spec, const RunResult& result,
                            std::uint64_t rounds, std::uint64_t seed, const RunStats& stats);

struct CellOutcome {
  SweepCell cell;
  std::string run_id;
  std::optional<std::string> abort_reason;
};

struct ExecReport {
  std::vector<CellOutcome> cells;
  std::vector<SummaryRow> summary;
  bool any_aborted = false;
};

/// Executes every (algo, K, T, seed) cell and writes <run_id>.csv and
/// <run_id>.json under config.output_dir.
ExecReport execute_run(const RunConfig& config, const ExecOptions& options);

/// execute_run plus summary.csv, summary.json and per-(algo, T) speedup tables.
ExecReport execute_sweep(const RunConfig& config, const ExecOptions& options);

struct GradCheckReport {
  std::size_t points = 0;
  double worst_fd_error = 0.0;
  std::optional<double> grad_norm_at_minimizer;
};

GradCheckReport check_grad(const ProblemSpec& spec, std::size_t points, std::uint64_t seed,
                           double h = 1e-5);

}  // namespace stormdist::harness
