// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <span>
#include <string>
#include <string_view>

#include <json.hpp>

#include "stormdist/algorithms.hpp"
#include "stormdist/harness/analysis.hpp"

namespace stormdist::harness {

inline constexpr std::array<std::string_view, 16> kMetricsColumns = {
    "run_id", "algo",      "K",         "d",              "t",        "eta",
    "a",      "grad_norm", "f_val",     "err_norm",       "potential", "ifo_per_worker",
    "bytes_up", "bytes_down", "clamped", "out_of_region"};

/// Shortest round-trip decimal form.
std::string format_double(double v);

std::string metrics_csv(std::string_view run_id, Algorithm algo, std::size_t workers,
                        std::size_t dim, std::span<const MetricsRecord> metrics);

std::string summary_csv(std::span<const SummaryRow> rows);
std::string speedup_csv(std::string_view algo, std::uint64_t rounds, std::string_view metric_name,
                        std::span<const SpeedupRow> rows);

/// Writes to a sibling temp file and renames over the target.
void write_file_atomic(const std::string& path, std::string_view content);

}  // namespace stormdist::harness
