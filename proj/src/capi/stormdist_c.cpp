// SPDX-License-Identifier: Apache-2.0
#include "stormdist/stormdist.h"

#include <exception>
#include <filesystem>
#include <memory>
#include <new>
#include <string>

#include <json.hpp>

#include "stormdist/algorithms.hpp"
#include "stormdist/errors.hpp"
#include "stormdist/harness/config.hpp"
#include "stormdist/harness/driver.hpp"
#include "stormdist/problems.hpp"

struct sd_problem {
  stormdist::ProblemSpec spec;
};

struct sd_config {
  stormdist::harness::RunConfig config;
};

struct sd_run {
  stormdist::RunResult result;
};

namespace {

thread_local std::string g_last_error;

sd_status fail(sd_status status, std::string message) {
  g_last_error = std::move(message);
  return status;
}

// Maps the core's exception types onto status codes.
template <typename Fn>
sd_status guarded(Fn&& fn) noexcept {
  try {
    g_last_error.clear();
    return fn();
  } catch (const stormdist::ConfigKeyError& e) {
    return fail(SD_ERR_CONFIG_KEY, e.what());
  } catch (const stormdist::ValidationError& e) {
    return fail(SD_ERR_VALIDATION, e.what());
  } catch (const stormdist::ProtocolError& e) {
    return fail(SD_ERR_PROTOCOL, e.what());
  } catch (const stormdist::ContractViolation& e) {
    return fail(SD_ERR_INVALID_ARGUMENT, e.what());
  } catch (const stormdist::IoError& e) {
    return fail(SD_ERR_IO, e.what());
  } catch (const std::filesystem::filesystem_error& e) {
    return fail(SD_ERR_IO, e.what());
  } catch (const std::bad_alloc&) {
    return fail(SD_ERR_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return fail(SD_ERR_INTERNAL, e.what());
  } catch (...) {
    return fail(SD_ERR_INTERNAL, "unknown error");
  }
}

#define SD_REQUIRE(cond, msg) \
  do {                        \
    if (!(cond)) return fail(SD_ERR_INVALID_ARGUMENT, msg); \
  } while (0)

stormdist::ParamVector to_vector(const sd_problem* p, const double* x, size_t n) {
  if (n != p->spec.dim) {
    throw stormdist::ContractViolation("expected " + std::to_string(p->spec.dim) +
                                       " coordinates, got " + std::to_string(n));
  }
  return stormdist::ParamVector(std::vector<double>(x, x + n));
}

void copy_out(const stormdist::ParamVector& v, double* out) {
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = v[i];
}

stormdist::Algorithm to_algorithm(sd_algorithm a) {
  switch (a) {
    case SD_ADSTORM:
      return stormdist::Algorithm::kAdStorm;
    case SD_DSTORM:
      return stormdist::Algorithm::kDStorm;
    case SD_DSGD:
      return stormdist::Algorithm::kDSgd;
  }
  throw stormdist::ContractViolation("unknown algorithm id");
}

sd_status report_status(const stormdist::harness::ExecReport& report) {
  if (!report.any_aborted) return SD_OK;
  std::string msg = "aborted cells:";
  for (const auto& c : report.cells) {
    if (c.abort_reason) msg += " " + c.run_id + " (" + *c.abort_reason + ")";
  }
  return fail(SD_ERR_ABORTED, msg);
}

}  // namespace

extern "C" {

const char* sd_version(void) { return "0.1.0"; }

const char* sd_last_error(void) { return g_last_error.c_str(); }

sd_status sd_problem_create(const char* json, sd_problem** out) {
  SD_REQUIRE(json != nullptr && out != nullptr, "null argument");
  return guarded([&] {
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(json);
    } catch (const nlohmann::json::parse_error& e) {
      return fail(SD_ERR_VALIDATION, std::string("problem is not valid JSON: ") + e.what());
    }
    auto p = std::make_unique<sd_problem>();
    p->spec = stormdist::make_problem(stormdist::harness::parse_problem(j));
    *out = p.release();
    return SD_OK;
  });
}

void sd_problem_destroy(sd_problem* problem) { delete problem; }

size_t sd_problem_dimension(const sd_problem* problem) {
  return problem ? problem->spec.dim : 0;
}

size_t sd_problem_workers(const sd_problem* problem) {
  return problem ? problem->spec.workers : 0;
}

sd_status sd_problem_constants(const sd_problem* problem, sd_constants* out) {
  SD_REQUIRE(problem != nullptr && out != nullptr, "null argument");
  const auto& s = problem->spec;
  out->smoothness = s.smoothness;
  out->sigma_sq = s.sigma_sq;
  out->gradient_bound = s.gradient_bound;
  out->region_radius = s.region_radius;
  out->has_f_star = s.f_star.has_value() ? 1 : 0;
  out->f_star = s.f_star.value_or(0.0);
  return SD_OK;
}

sd_status sd_problem_value(const sd_problem* problem, const double* x, size_t n, double* out) {
  SD_REQUIRE(problem != nullptr && x != nullptr && out != nullptr, "null argument");
  return guarded([&] {
    *out = stormdist::full_value(problem->spec, to_vector(problem, x, n));
    return SD_OK;
  });
}

sd_status sd_problem_gradient(const sd_problem* problem, const double* x, size_t n, double* out) {
  SD_REQUIRE(problem != nullptr && x != nullptr && out != nullptr, "null argument");
  return guarded([&] {
    copy_out(stormdist::full_gradient(problem->spec, to_vector(problem, x, n)), out);
    return SD_OK;
  });
}

sd_status sd_problem_stoch_gradient(const sd_problem* problem, uint32_t worker, uint64_t seed,
                                    uint64_t draw_index, const double* x, size_t n, double* out) {
  SD_REQUIRE(problem != nullptr && x != nullptr && out != nullptr, "null argument");
  return guarded([&] {
    const auto sample = stormdist::draw_sample(problem->spec, seed, worker, draw_index);
    copy_out(stormdist::stoch_gradient(problem->spec, worker, to_vector(problem, x, n), sample),
             out);
    return SD_OK;
  });
}

sd_status sd_problem_fd_check(const sd_problem* problem, const double* x, size_t n, double h,
                              double* max_rel_error) {
  SD_REQUIRE(problem != nullptr && x != nullptr && max_rel_error != nullptr, "null argument");
  return guarded([&] {
    *max_rel_error = stormdist::fd_check(problem->spec, to_vector(problem, x, n), h);
    return SD_OK;
  });
}

sd_status sd_problem_check_grad(const sd_problem* problem, size_t points, uint64_t seed,
                                sd_grad_check* out) {
  SD_REQUIRE(problem != nullptr && out != nullptr, "null argument");
  return guarded([&] {
    const auto r = stormdist::harness::check_grad(problem->spec, points, seed);
    out->points = r.points;
    out->worst_fd_error = r.worst_fd_error;
    out->has_minimizer = r.grad_norm_at_minimizer.has_value() ? 1 : 0;
    out->grad_norm_at_minimizer = r.grad_norm_at_minimizer.value_or(0.0);
    return SD_OK;
  });
}

sd_status sd_problem_estimate(const sd_problem* problem, size_t samples, size_t points,
                              uint64_t seed, sd_estimates* out) {
  SD_REQUIRE(problem != nullptr && out != nullptr, "null argument");
  return guarded([&] {
    const auto e = stormdist::estimate_constants(problem->spec, samples, points, seed);
    out->sigma_sq_hat = e.sigma_sq_hat;
    out->gradient_bound_hat = e.gradient_bound_hat;
    out->smoothness_hat = e.smoothness_hat;
    return SD_OK;
  });
}

sd_status sd_config_load_file(const char* path, sd_config** out) {
  SD_REQUIRE(path != nullptr && out != nullptr, "null argument");
  if (!std::filesystem::exists(path)) {
    return fail(SD_ERR_IO, std::string("cannot read config file: ") + path);
  }
  return guarded([&] {
    auto c = std::make_unique<sd_config>();
    c->config = stormdist::harness::load_run_config(path);
    *out = c.release();
    return SD_OK;
  });
}

sd_status sd_config_load_string(const char* json, sd_config** out) {
  SD_REQUIRE(json != nullptr && out != nullptr, "null argument");
  return guarded([&] {
    auto c = std::make_unique<sd_config>();
    c->config = stormdist::harness::parse_run_config_text(json);
    *out = c.release();
    return SD_OK;
  });
}

void sd_config_destroy(sd_config* config) { delete config; }

sd_status sd_config_set_output_dir(sd_config* config, const char* dir) {
  SD_REQUIRE(config != nullptr && dir != nullptr, "null argument");
  config->config.output_dir = dir;
  return SD_OK;
}

sd_status sd_config_set_workers(sd_config* config, const uint32_t* ks, size_t n) {
  SD_REQUIRE(config != nullptr && ks != nullptr, "null argument");
  SD_REQUIRE(n > 0, "K list must be non-empty");
  return guarded([&] {
    std::vector<std::size_t> workers;
    for (size_t i = 0; i < n; ++i) {
      if (ks[i] == 0) throw stormdist::ValidationError("K: must be >= 1");
      (void)stormdist::with_workers(config->config.problem, ks[i]);
      workers.push_back(ks[i]);
    }
    config->config.workers = std::move(workers);
    return SD_OK;
  });
}

sd_status sd_config_set_seed_count(sd_config* config, size_t n) {
  SD_REQUIRE(config != nullptr, "null argument");
  SD_REQUIRE(n > 0, "seed count must be >= 1");
  const uint64_t first = config->config.seeds.empty() ? 0 : config->config.seeds.front();
  config->config.seeds.clear();
  for (size_t i = 0; i < n; ++i) config->config.seeds.push_back(first + i);
  return SD_OK;
}

size_t sd_config_cell_count(const sd_config* config) {
  if (config == nullptr) return 0;
  const auto& c = config->config;
  return c.algos.size() * c.workers.size() * c.rounds.size() * c.seeds.size();
}

sd_status sd_execute_run(const sd_config* config, unsigned threads, const char* trace_path) {
  SD_REQUIRE(config != nullptr, "null argument");
  return guarded([&] {
    stormdist::harness::ExecOptions opts;
    opts.threads = threads == 0 ? stormdist::harness::threads_from_env() : threads;
    if (trace_path) opts.trace_path = trace_path;
    return report_status(stormdist::harness::execute_run(config->config, opts));
  });
}

sd_status sd_execute_sweep(const sd_config* config, unsigned threads) {
  SD_REQUIRE(config != nullptr, "null argument");
  return guarded([&] {
    stormdist::harness::ExecOptions opts;
    opts.threads = threads == 0 ? stormdist::harness::threads_from_env() : threads;
    return report_status(stormdist::harness::execute_sweep(config->config, opts));
  });
}

sd_status sd_run_create(const sd_config* config, sd_algorithm algo, uint32_t workers,
                        uint64_t rounds, uint64_t seed, unsigned threads, sd_run** out) {
  SD_REQUIRE(config != nullptr && out != nullptr, "null argument");
  SD_REQUIRE(workers > 0 && rounds > 0, "K and T must be >= 1");
  return guarded([&] {
    auto r = std::make_unique<sd_run>();
    r->result = stormdist::harness::run_cell(config->config, to_algorithm(algo), workers, rounds,
                                             seed, threads == 0 ? 1 : threads);
    *out = r.release();
    return SD_OK;
  });
}

void sd_run_destroy(sd_run* run) { delete run; }

size_t sd_run_record_count(const sd_run* run) { return run ? run->result.metrics.size() : 0; }

sd_status sd_run_record(const sd_run* run, size_t index, sd_metrics_record* out) {
  SD_REQUIRE(run != nullptr && out != nullptr, "null argument");
  SD_REQUIRE(index < run->result.metrics.size(), "record index out of range");
  const auto& r = run->result.metrics[index];
  *out = sd_metrics_record{r.t,         r.eta,        r.a,
                           r.grad_norm, r.f_val,      r.err_norm,
                           r.potential, r.ifo_per_worker, r.bytes_up,
                           r.bytes_down, r.clamped ? 1 : 0, r.out_of_region ? 1 : 0};
  return SD_OK;
}

sd_status sd_run_output_point(const sd_run* run, double* out, size_t n, uint64_t* iterate_index) {
  SD_REQUIRE(run != nullptr && out != nullptr, "null argument");
  SD_REQUIRE(n == run->result.x_a.size(), "output buffer length must equal d");
  copy_out(run->result.x_a, out);
  if (iterate_index) *iterate_index = run->result.x_a_index;
  return SD_OK;
}

int sd_run_aborted(const sd_run* run) {
  return run && run->result.abort_reason.has_value() ? 1 : 0;
}

}  // extern "C"
