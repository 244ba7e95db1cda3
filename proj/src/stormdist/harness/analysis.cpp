// SPDX-License-Identifier: Apache-2.0
#include "stormdist/harness/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <string>
#include <tuple>

#include "stormdist/errors.hpp"

namespace stormdist::harness {

RunStats summarize(std::span<const MetricsRecord> metrics, std::optional<double> epsilon) {
  RunStats s;
  if (metrics.empty()) return s;
  s.min_grad_norm = metrics.front().grad_norm;
  double sum = 0.0;
  for (const auto& r : metrics) {
    s.min_grad_norm = std::min(s.min_grad_norm, r.grad_norm);
    sum += r.grad_norm;
    s.sum_grad_sq += r.grad_norm * r.grad_norm;
    if (epsilon && !s.first_t_below_eps && r.grad_norm <= *epsilon) s.first_t_below_eps = r.t;
  }
  s.mean_grad_norm = sum / static_cast<double>(metrics.size());
  return s;
}

double fit_slope(std::span<const double> t_values, std::span<const double> metric_values) {
  if (t_values.size() != metric_values.size()) {
    throw ValidationError("fit_slope: T and metric lengths differ");
  }
  if (t_values.size() < 4) throw ValidationError("fit_slope: need at least 4 points");
  const auto n = static_cast<double>(t_values.size());
  double mx = 0.0;
  double my = 0.0;
  std::vector<double> lx;
  std::vector<double> ly;
  for (std::size_t i = 0; i < t_values.size(); ++i) {
    if (!(t_values[i] > 0.0) || !(metric_values[i] > 0.0)) {
      throw ValidationError("fit_slope: T and metric values must be positive");
    }
    lx.push_back(std::log(t_values[i]));
    ly.push_back(std::log(metric_values[i]));
    mx += lx.back();
    my += ly.back();
  }
  mx /= n;
  my /= n;
  double sxx = 0.0;
  double sxy = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    sxx += (lx[i] - mx) * (lx[i] - mx);
    sxy += (lx[i] - mx) * (ly[i] - my);
  }
  if (!(sxx > 1e-12)) throw ValidationError("fit_slope: degenerate spread in T");
  return sxy / sxx;
}

MeanStderr mean_stderr(std::span<const double> values) {
  MeanStderr out;
  if (values.empty()) return out;
  double sum = 0.0;
  for (double v : values) sum += v;
  out.mean = sum / static_cast<double>(values.size());
  if (values.size() > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - out.mean) * (v - out.mean);
    const double var = ss / static_cast<double>(values.size() - 1);
    out.stderr_ = std::sqrt(var / static_cast<double>(values.size()));
  }
  return out;
}

std::vector<SummaryRow> summarize_sweep(std::span<const SweepCell> cells) {
  using Key = std::tuple<int, std::size_t, std::uint64_t>;
  std::map<Key, std::vector<const SweepCell*>> groups;
  for (const auto& c : cells) {
    if (c.aborted) continue;
    groups[{static_cast<int>(c.algo), c.workers, c.rounds}].push_back(&c);
  }

  std::vector<SummaryRow> rows;
  for (const auto& [key, members] : groups) {
    SummaryRow row;
    row.algo = static_cast<Algorithm>(std::get<0>(key));
    row.workers = std::get<1>(key);
    row.rounds = std::get<2>(key);
    row.seeds = members.size();
    std::vector<double> mins;
    std::vector<double> means;
    double ifo_sum = 0.0;
    for (const SweepCell* c : members) {
      mins.push_back(c->stats.min_grad_norm);
      means.push_back(c->stats.mean_grad_norm);
      if (c->stats.first_t_below_eps) {
        ++row.reached_eps;
        ifo_sum += static_cast<double>(ifo_after_rounds(*c->stats.first_t_below_eps));
      }
    }
    row.min_grad_norm = mean_stderr(mins);
    row.mean_grad_norm = mean_stderr(means);
    if (row.reached_eps > 0) row.mean_ifo_to_eps = ifo_sum / static_cast<double>(row.reached_eps);
    rows.push_back(row);
  }

  // Slope across T within each (algo, K).
  std::map<std::pair<int, std::size_t>, std::vector<SummaryRow*>> by_cell;
  for (auto& r : rows) by_cell[{static_cast<int>(r.algo), r.workers}].push_back(&r);
  for (auto& [key, members] : by_cell) {
    if (members.size() < 4) continue;
    std::vector<double> ts;
    std::vector<double> ms;
    for (const SummaryRow* r : members) {
      ts.push_back(static_cast<double>(r->rounds));
      ms.push_back(r->mean_grad_norm.mean);
    }
    const auto [lo, hi] = std::minmax_element(ts.begin(), ts.end());
    if (*hi / *lo < 100.0) continue;
    bool positive = std::all_of(ms.begin(), ms.end(), [](double v) { return v > 0.0; });
    if (!positive) continue;
    const double slope = fit_slope(ts, ms);
    for (SummaryRow* r : members) r->slope_vs_t = slope;
  }
  return rows;
}

std::vector<SpeedupRow> speedup_table(std::span<const std::size_t> workers,
                                      std::span<const double> metric) {
  if (workers.size() != metric.size()) throw ValidationError("speedup_table: length mismatch");
  std::set<std::size_t> distinct(workers.begin(), workers.end());
  if (distinct.size() < 2) throw ValidationError("speedup_table: need at least two K values");
  std::size_t kmax_index = 0;
  for (std::size_t i = 1; i < workers.size(); ++i) {
    if (workers[i] > workers[kmax_index]) kmax_index = i;
  }
  const double base = metric[kmax_index];
  const auto kmax = static_cast<double>(workers[kmax_index]);
  std::vector<SpeedupRow> rows;
  for (std::size_t i = 0; i < workers.size(); ++i) {
    SpeedupRow r;
    r.workers = workers[i];
    r.metric = metric[i];
    r.ratio = metric[i] / base;
    r.reference = std::cbrt(kmax / static_cast<double>(workers[i]));
    rows.push_back(r);
  }
  std::sort(rows.begin(), rows.end(),
            [](const SpeedupRow& a, const SpeedupRow& b) { return a.workers < b.workers; });
  return rows;
}

}  // namespace stormdist::harness
