// SPDX-License-Identifier: Apache-2.0
#include "stormdist/harness/output.hpp"

#include <charconv>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <system_error>

#include "stormdist/errors.hpp"

namespace stormdist::harness {

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

namespace {

void append_row(std::string& out, std::initializer_list<std::string_view> fields) {
  bool first = true;
  for (auto f : fields) {
    if (!first) out += ',';
    out += f;
    first = false;
  }
  out += '\n';
}

}  // namespace

std::string metrics_csv(std::string_view run_id, Algorithm algo, std::size_t workers,
                        std::size_t dim, std::span<const MetricsRecord> metrics) {
  std::string out;
  out.reserve(160 * (metrics.size() + 1));
  bool first = true;
  for (auto c : kMetricsColumns) {
    if (!first) out += ',';
    out += c;
    first = false;
  }
  out += '\n';
  const std::string algo_name(to_string(algo));
  const std::string k = std::to_string(workers);
  const std::string d = std::to_string(dim);
  for (const auto& r : metrics) {
    append_row(out, {run_id, algo_name, k, d, std::to_string(r.t), format_double(r.eta),
                     format_double(r.a), format_double(r.grad_norm), format_double(r.f_val),
                     format_double(r.err_norm), format_double(r.potential),
                     std::to_string(r.ifo_per_worker), std::to_string(r.bytes_up),
                     std::to_string(r.bytes_down), r.clamped ? "1" : "0",
                     r.out_of_region ? "1" : "0"});
  }
  return out;
}

std::string summary_csv(std::span<const SummaryRow> rows) {
  std::string out =
      "algo,K,T,seeds,min_grad_norm_mean,min_grad_norm_stderr,avg_grad_norm_mean,"
      "avg_grad_norm_stderr,slope_vs_T,reached_eps,mean_ifo_to_eps\n";
  for (const auto& r : rows) {
    append_row(out, {to_string(r.algo), std::to_string(r.workers), std::to_string(r.rounds),
                     std::to_string(r.seeds), format_double(r.min_grad_norm.mean),
                     format_double(r.min_grad_norm.stderr_), format_double(r.mean_grad_norm.mean),
                     format_double(r.mean_grad_norm.stderr_),
                     r.slope_vs_t ? format_double(*r.slope_vs_t) : "",
                     std::to_string(r.reached_eps),
                     r.mean_ifo_to_eps ? format_double(*r.mean_ifo_to_eps) : ""});
  }
  return out;
}

std::string speedup_csv(std::string_view algo, std::uint64_t rounds, std::string_view metric_name,
                        std::span<const SpeedupRow> rows) {
  std::string out = "algo,T,metric,K,value,ratio_to_kmax,reference_k_minus_third\n";
  for (const auto& r : rows) {
    append_row(out, {algo, std::to_string(rounds), metric_name, std::to_string(r.workers),
                     format_double(r.metric), format_double(r.ratio),
                     format_double(r.reference)});
  }
  return out;
}

void write_file_atomic(const std::string& path, std::string_view content) {
  namespace fs = std::filesystem;
  const fs::path target(path);
  if (target.has_parent_path()) fs::create_directories(target.parent_path());
  const fs::path tmp = fs::path(path + ".tmp");
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + tmp.string());
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw IoError("write failed: " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, target, ec);
  if (ec) throw IoError("cannot rename onto " + path + ": " + ec.message());
}

}  // namespace stormdist::harness
