// SPDX-License-Identifier: Apache-2.0
//
// stormdist command line. Talks to the simulator only through the C API.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "stormdist/stormdist.h"

namespace {

int report(sd_status status) {
  if (status != SD_OK) std::cerr << "stormdist: " << sd_last_error() << "\n";
  return static_cast<int>(status);
}

// --problem takes inline JSON or a path to a JSON file.
std::string read_problem_arg(const std::string& arg) {
  std::ifstream in(arg);
  if (!in) return arg;
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct ConfigHandle {
  sd_config* ptr = nullptr;
  ~ConfigHandle() { sd_config_destroy(ptr); }
};

struct ProblemHandle {
  sd_problem* ptr = nullptr;
  ~ProblemHandle() { sd_problem_destroy(ptr); }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"stormdist: distributed STORM optimizers on a simulated parameter server"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(sd_version()));

  std::string config_path;
  std::string out_dir;
  std::string trace_path;
  unsigned threads = 0;

  auto* run = app.add_subcommand("run", "execute every (algo, K, T, seed) cell of a config");
  run->add_option("--config", config_path, "run config JSON")->required();
  run->add_option("--out", out_dir, "output directory (overrides output_dir)");
  run->add_option("--trace", trace_path, "binary dump of every exchanged message");
  run->add_option("--threads", threads, "worker threads (default: STORMDIST_THREADS or 1)");

  std::vector<std::uint32_t> sweep_k;
  std::size_t sweep_seeds = 0;
  auto* sweep = app.add_subcommand("sweep", "seed/K sweep with summary and speedup tables");
  sweep->add_option("--config", config_path, "run config JSON")->required();
  sweep->add_option("--k", sweep_k, "comma-separated K values")->delimiter(',');
  sweep->add_option("--seeds", sweep_seeds, "number of seeds, starting at the config's first");
  sweep->add_option("--out", out_dir, "output directory (overrides output_dir)");
  sweep->add_option("--threads", threads, "threads (default: STORMDIST_THREADS or 1)");

  std::string problem_arg;
  std::size_t points = 100;
  std::uint64_t seed = 0;
  double tol = 1e-5;
  auto* check = app.add_subcommand("check-grad", "finite-difference check of the exact gradient");
  check->add_option("--problem", problem_arg, "problem JSON (inline or file path)")->required();
  check->add_option("--points", points, "random points in the region")->check(CLI::PositiveNumber);
  check->add_option("--seed", seed, "point seed");
  check->add_option("--tol", tol, "maximum accepted relative error");

  std::size_t samples = 10000;
  std::size_t est_points = 8;
  auto* estimate = app.add_subcommand("estimate", "Monte-Carlo estimates of sigma^2, G and L");
  estimate->add_option("--problem", problem_arg, "problem JSON (inline or file path)")->required();
  estimate->add_option("--samples", samples, "samples per point and worker")
      ->check(CLI::Range(std::size_t{2}, std::size_t{1} << 40));
  estimate->add_option("--points", est_points, "points in the region")
      ->check(CLI::Range(std::size_t{2}, std::size_t{1} << 30));
  estimate->add_option("--seed", seed, "sampling seed");

  CLI11_PARSE(app, argc, argv);

  if (*run || *sweep) {
    ConfigHandle cfg;
    if (sd_status s = sd_config_load_file(config_path.c_str(), &cfg.ptr); s != SD_OK) {
      return report(s);
    }
    if (!out_dir.empty()) sd_config_set_output_dir(cfg.ptr, out_dir.c_str());
    if (*run) {
      return report(sd_execute_run(cfg.ptr, threads, trace_path.empty() ? nullptr : trace_path.c_str()));
    }
    if (!sweep_k.empty()) {
      if (sd_status s = sd_config_set_workers(cfg.ptr, sweep_k.data(), sweep_k.size()); s != SD_OK) {
        return report(s);
      }
    }
    if (sweep_seeds > 0) {
      if (sd_status s = sd_config_set_seed_count(cfg.ptr, sweep_seeds); s != SD_OK) {
        return report(s);
      }
    }
    return report(sd_execute_sweep(cfg.ptr, threads));
  }

  ProblemHandle problem;
  if (sd_status s = sd_problem_create(read_problem_arg(problem_arg).c_str(), &problem.ptr);
      s != SD_OK) {
    return report(s);
  }

  if (*check) {
    sd_grad_check r{};
    if (sd_status s = sd_problem_check_grad(problem.ptr, points, seed, &r); s != SD_OK) {
      return report(s);
    }
    std::printf("{\"points\": %zu, \"worst_fd_rel_error\": %.6e", r.points, r.worst_fd_error);
    if (r.has_minimizer) std::printf(", \"grad_norm_at_minimizer\": %.6e", r.grad_norm_at_minimizer);
    std::printf(", \"tolerance\": %.1e, \"pass\": %s}\n", tol,
                r.worst_fd_error <= tol ? "true" : "false");
    return r.worst_fd_error <= tol ? 0 : 1;
  }

  sd_estimates est{};
  if (sd_status s = sd_problem_estimate(problem.ptr, samples, est_points, seed, &est); s != SD_OK) {
    return report(s);
  }
  sd_constants declared{};
  sd_problem_constants(problem.ptr, &declared);
  std::printf(
      "{\"sigma_sq_hat\": %.6g, \"sigma_sq\": %.6g, \"G_hat\": %.6g, \"G\": %.6g, "
      "\"L_hat\": %.6g, \"L\": %.6g}\n",
      est.sigma_sq_hat, declared.sigma_sq, est.gradient_bound_hat, declared.gradient_bound,
      est.smoothness_hat, declared.smoothness);
  return 0;
}
