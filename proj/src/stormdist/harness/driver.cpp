// SPDX-License-Identifier: Apache-2.0
#include "stormdist/harness/driver.hpp"

#include <cstdlib>
#include <filesystem>
#include <map>

#include <tbb/parallel_for.h>
#include <tbb/task_arena.h>

#include "stormdist/errors.hpp"
#include "stormdist/harness/output.hpp"
#include "stormdist/rng.hpp"

namespace stormdist::harness {

using nlohmann::json;

namespace {

struct CellSpec {
  Algorithm algo;
  std::size_t workers;
  std::uint64_t rounds;
  std::uint64_t seed;
};

std::vector<CellSpec> enumerate_cells(const RunConfig& config) {
  std::vector<CellSpec> cells;
  for (auto algo : config.algos) {
    for (auto k : config.workers) {
      for (auto t : config.rounds) {
        for (auto s : config.seeds) cells.push_back({algo, k, t, s});
      }
    }
  }
  return cells;
}

json accounting_json(const RoundAccounting& a) {
  return json{{"ifo_per_worker", a.ifo_per_worker},
              {"bytes_up", a.bytes_up},
              {"bytes_down", a.bytes_down},
              {"rounds", a.rounds}};
}

std::string cell_trace_path(const ExecOptions& options, const std::string& run_id,
                            std::size_t cell_count) {
  if (options.trace_path.empty()) return {};
  return cell_count == 1 ? options.trace_path : options.trace_path + "." + run_id;
}

}  // namespace

unsigned threads_from_env(unsigned fallback) {
  if (const char* env = std::getenv("STORMDIST_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && v > 0) return static_cast<unsigned>(v);
  }
  return fallback;
}

std::string make_run_id(Algorithm algo, std::size_t workers, std::uint64_t rounds,
                        std::uint64_t seed) {
  return std::string(to_string(algo)) + "_K" + std::to_string(workers) + "_T" +
         std::to_string(rounds) + "_s" + std::to_string(seed);
}

RunResult run_cell(const RunConfig& config, Algorithm algo, std::size_t workers,
                   std::uint64_t rounds, std::uint64_t seed, unsigned threads,
                   const std::string& trace_path) {
  const ProblemSpec spec = with_workers(config.problem, workers);
  RunOptions options;
  options.rounds = rounds;
  options.master_seed = seed;
  options.force_a_one = config.schedule.force_a_one;
  options.fresh_sample_step5 = config.schedule.fresh_sample_step5;
  options.reservoir_cap = config.reservoir_cap;
  options.threads = threads;
  options.trace_path = trace_path;

  switch (algo) {
    case Algorithm::kAdStorm:
      return run_adstorm(spec, resolve_schedule(config, spec, algo), options);
    case Algorithm::kDStorm:
      return run_dstorm(spec, resolve_schedule(config, spec, algo), options);
    case Algorithm::kDSgd: {
      std::vector<double> etas;
      ScheduleParams params;
      if (config.schedule.eta) {
        etas.assign(rounds + 1, *config.schedule.eta);
      } else {
        params = resolve_schedule(config, spec, Algorithm::kDStorm);
        etas = nonadaptive_etas(params, rounds);
      }
      RunResult r = run_dsgd(spec, etas, options);
      r.params = params;
      return r;
    }
  }
  throw ContractViolation("unknown algorithm");
}

json run_metadata(const RunConfig& config, const std::string& run_id, const ProblemSpec& spec,
                  const RunResult& result, std::uint64_t rounds, std::uint64_t seed,
                  const RunStats& stats) {
  ProblemConfig problem = config.problem;
  problem.workers = spec.workers;
  json j;
  j["run_id"] = run_id;
  j["algo"] = std::string(to_string(result.algo));
  j["K"] = spec.workers;
  j["d"] = spec.dim;
  j["T"] = rounds;
  j["master_seed"] = seed;
  j["problem"] = problem_to_json(problem);
  j["declared_constants"] = {{"L", spec.smoothness},
                             {"sigma_sq", spec.sigma_sq},
                             {"G", spec.gradient_bound},
                             {"region_radius", spec.region_radius},
                             {"f_star", spec.f_star ? json(*spec.f_star) : json(nullptr)}};
  const ScheduleParams& p = result.params;
  json schedule = {{"b", p.b},
                   {"alpha", p.alpha},
                   {"kappa_bar", p.kappa_bar},
                   {"c", p.c},
                   {"w0", p.w0},
                   {"noise_scale", p.noise_scale},
                   {"force_a_one", config.schedule.force_a_one},
                   {"fresh_sample_step5", config.schedule.fresh_sample_step5}};
  if (result.algo == Algorithm::kDSgd && config.schedule.eta) schedule["eta"] = *config.schedule.eta;
  j["schedule"] = schedule;
  j["x_a_index"] = result.x_a_index;
  j["x_a"] = result.x_a.values();
  j["reservoir_size"] = result.iterates_sampled.size();
  j["accounting"] = accounting_json(result.accounting);
  j["init_accounting"] = accounting_json(result.init_accounting);
  std::uint64_t clamped = 0;
  std::uint64_t outside = 0;
  for (const auto& r : result.metrics) {
    clamped += r.clamped ? 1 : 0;
    outside += r.out_of_region ? 1 : 0;
  }
  j["clamped_rounds"] = clamped;
  j["out_of_region_rounds"] = outside;
  json s = {{"min_grad_norm", stats.min_grad_norm},
            {"mean_grad_norm", stats.mean_grad_norm},
            {"sum_grad_sq", stats.sum_grad_sq},
            {"epsilon", config.epsilon ? json(*config.epsilon) : json(nullptr)}};
  if (stats.first_t_below_eps) {
    s["first_t_below_eps"] = *stats.first_t_below_eps;
    s["ifo_to_eps"] = ifo_after_rounds(*stats.first_t_below_eps);
  } else {
    s["first_t_below_eps"] = nullptr;
    s["ifo_to_eps"] = nullptr;
  }
  j["stats"] = s;
  j["aborted"] = result.abort_reason ? json(*result.abort_reason) : json(nullptr);
  return j;
}

ExecReport execute_run(const RunConfig& config, const ExecOptions& options) {
  validate_run_config(config);
  const auto specs = enumerate_cells(config);
  ExecReport report;
  report.cells.resize(specs.size());

  const unsigned threads = std::max(1u, options.threads);
  const auto body = [&](std::size_t i) {
    const CellSpec& c = specs[i];
    const std::string run_id = make_run_id(c.algo, c.workers, c.rounds, c.seed);
    const RunResult result =
        run_cell(config, c.algo, c.workers, c.rounds, c.seed, threads,
                 cell_trace_path(options, run_id, specs.size()));
    const ProblemSpec spec = with_workers(config.problem, c.workers);
    const RunStats stats = summarize(result.metrics, config.epsilon);
    const std::filesystem::path dir(config.output_dir);
    write_file_atomic((dir / (run_id + ".csv")).string(),
                      metrics_csv(run_id, c.algo, c.workers, spec.dim, result.metrics));
    write_file_atomic((dir / (run_id + ".json")).string(),
                      run_metadata(config, run_id, spec, result, c.rounds, c.seed, stats).dump(2) +
                          "\n");
    CellOutcome& out = report.cells[i];
    out.run_id = run_id;
    out.cell = SweepCell{c.algo, c.workers, c.rounds, c.seed, stats, result.abort_reason.has_value()};
    out.abort_reason = result.abort_reason;
  };

  if (threads == 1 || specs.size() < 2) {
    for (std::size_t i = 0; i < specs.size(); ++i) body(i);
  } else {
    tbb::task_arena arena(static_cast<int>(threads));
    arena.execute([&] { tbb::parallel_for(std::size_t{0}, specs.size(), body); });
  }

  std::vector<SweepCell> cells;
  for (const auto& c : report.cells) {
    cells.push_back(c.cell);
    report.any_aborted = report.any_aborted || c.abort_reason.has_value();
  }
  report.summary = summarize_sweep(cells);
  return report;
}

ExecReport execute_sweep(const RunConfig& config, const ExecOptions& options) {
  ExecReport report = execute_run(config, options);
  const std::filesystem::path dir(config.output_dir);
  write_file_atomic((dir / "summary.csv").string(), summary_csv(report.summary));

  json summary = json::array();
  for (const auto& r : report.summary) {
    summary.push_back({{"algo", std::string(to_string(r.algo))},
                       {"K", r.workers},
                       {"T", r.rounds},
                       {"seeds", r.seeds},
                       {"min_grad_norm", {{"mean", r.min_grad_norm.mean},
                                          {"stderr", r.min_grad_norm.stderr_}}},
                       {"avg_grad_norm", {{"mean", r.mean_grad_norm.mean},
                                          {"stderr", r.mean_grad_norm.stderr_}}},
                       {"slope_vs_T", r.slope_vs_t ? json(*r.slope_vs_t) : json(nullptr)},
                       {"reached_eps", r.reached_eps},
                       {"mean_ifo_to_eps",
                        r.mean_ifo_to_eps ? json(*r.mean_ifo_to_eps) : json(nullptr)}});
  }
  write_file_atomic((dir / "summary.json").string(), summary.dump(2) + "\n");

  // Speedup tables per (algo, T) whenever two or more K are present.
  std::map<std::pair<int, std::uint64_t>, std::vector<const SummaryRow*>> groups;
  for (const auto& r : report.summary) groups[{static_cast<int>(r.algo), r.rounds}].push_back(&r);
  for (const auto& [key, rows] : groups) {
    if (rows.size() < 2) continue;
    std::vector<std::size_t> ks;
    std::vector<double> mins;
    for (const SummaryRow* r : rows) {
      ks.push_back(r->workers);
      mins.push_back(r->min_grad_norm.mean);
    }
    const auto algo = to_string(static_cast<Algorithm>(key.first));
    const auto table = speedup_table(ks, mins);
    write_file_atomic(
        (dir / ("speedup_" + std::string(algo) + "_T" + std::to_string(key.second) + ".csv"))
            .string(),
        speedup_csv(algo, key.second, "min_grad_norm", table));
  }
  return report;
}

GradCheckReport check_grad(const ProblemSpec& spec, std::size_t points, std::uint64_t seed,
                           double h) {
  if (points == 0) throw ContractViolation("check_grad: need at least one point");
  GradCheckReport report;
  report.points = points;
  for (std::size_t i = 0; i < points; ++i) {
    const ParamVector x =
        sample_in_ball(spec.dim, spec.region_radius, seed, streams::kEstimatePoints, i);
    report.worst_fd_error = std::max(report.worst_fd_error, fd_check(spec, x, h));
  }
  if (spec.x_star) report.grad_norm_at_minimizer = norm(full_gradient(spec, *spec.x_star));
  return report;
}

}  // namespace stormdist::harness
