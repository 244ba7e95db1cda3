// SPDX-License-Identifier: Apache-2.0
#include "stormdist/problems.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "stormdist/errors.hpp"
#include "stormdist/rng.hpp"

namespace stormdist {

namespace {

// max over z of |d/dz z^2/(1+z^2)| = |2z/(1+z^2)^2|, attained at z^2 = 1/3.
const double kPenaltySlopeMax = 3.0 * std::sqrt(3.0) / 8.0;

double penalty(double z) { return z * z / (1.0 + z * z); }

double penalty_slope(double z) {
  const double q = 1.0 + z * z;
  return 2.0 * z / (q * q);
}

void check_worker(const ProblemSpec& spec, std::size_t worker_id) {
  if (worker_id >= spec.workers) {
    throw ContractViolation("worker id " + std::to_string(worker_id) + " out of range [0," +
                            std::to_string(spec.workers) + ")");
  }
}

void check_dim(const ProblemSpec& spec, const ParamVector& x, const char* what) {
  if (x.size() != spec.dim) {
    throw ContractViolation(std::string(what) + ": expected dimension " +
                            std::to_string(spec.dim) + ", got " + std::to_string(x.size()));
  }
}

// Global minimizer of 1/2 (z - m)^2 + lambda * z^2/(1+z^2). Every stationary
// point lies between 0 and m, so a grid scan plus bisection on the
// derivative finds the global one.
double minimize_coordinate(double m, double lambda) {
  if (lambda == 0.0 || m == 0.0) return m;
  const auto psi = [&](double z) { return 0.5 * (z - m) * (z - m) + lambda * penalty(z); };
  const auto dpsi = [&](double z) { return z - m + lambda * penalty_slope(z); };
  const double lo = std::min(0.0, m);
  const double hi = std::max(0.0, m);
  constexpr int kGrid = 4096;
  const double step = (hi - lo) / kGrid;
  int best = 0;
  double best_val = psi(lo);
  for (int i = 1; i <= kGrid; ++i) {
    const double v = psi(lo + step * i);
    if (v < best_val) {
      best_val = v;
      best = i;
    }
  }
  double a = lo + step * std::max(0, best - 1);
  double b = lo + step * std::min(kGrid, best + 1);
  if (dpsi(a) > 0.0 || dpsi(b) < 0.0) {
    // Minimum sits on the boundary of the scan interval.
    return lo + step * best;
  }
  for (int it = 0; it < 200 && b - a > 0.0; ++it) {
    const double mid = 0.5 * (a + b);
    if (mid == a || mid == b) break;
    if (dpsi(mid) < 0.0) {
      a = mid;
    } else {
      b = mid;
    }
  }
  return std::abs(dpsi(a)) <= std::abs(dpsi(b)) ? a : b;
}

std::vector<ParamVector> generate_centers(std::size_t dim, std::size_t workers,
                                          std::uint64_t seed) {
  std::vector<ParamVector> centers;
  centers.reserve(workers);
  for (std::size_t k = 0; k < workers; ++k) {
    SplitMixRng rng(seed, streams::kCenters, k);
    ParamVector c(dim);
    for (auto& v : c) v = rng.normal();
    centers.push_back(std::move(c));
  }
  return centers;
}

}  // namespace

std::string_view to_string(ProblemFamily family) {
  switch (family) {
    case ProblemFamily::kHetQuadratic:
      return "het_quadratic";
    case ProblemFamily::kSigmoidQuadratic:
      return "sigmoid_quadratic";
  }
  return "unknown";
}

std::optional<ProblemFamily> parse_family(std::string_view name) {
  if (name == "het_quadratic") return ProblemFamily::kHetQuadratic;
  if (name == "sigmoid_quadratic") return ProblemFamily::kSigmoidQuadratic;
  return std::nullopt;
}

ProblemSpec make_problem(const ProblemConfig& config) {
  if (config.dim == 0) throw ValidationError("problem dimension d must be >= 1");
  if (config.workers == 0) throw ValidationError("worker count k must be >= 1");
  if (!(config.sigma >= 0.0) || !std::isfinite(config.sigma)) {
    throw ValidationError("sigma must be finite and >= 0");
  }
  if (!(config.lambda >= 0.0) || !std::isfinite(config.lambda)) {
    throw ValidationError("lambda must be finite and >= 0");
  }
  if (config.family == ProblemFamily::kHetQuadratic && config.lambda != 0.0) {
    throw ValidationError("het_quadratic requires lambda == 0");
  }

  ProblemSpec spec;
  spec.family = config.family;
  spec.dim = config.dim;
  spec.workers = config.workers;
  spec.noise_std = config.sigma;
  spec.nonconvex_weight = config.lambda;
  spec.seed = config.seed;
  spec.homogeneous = config.homogeneous;

  if (config.centers.empty()) {
    spec.centers = generate_centers(config.dim, config.workers, config.seed);
  } else {
    if (config.centers.size() != config.workers) {
      throw ValidationError("centers: expected " + std::to_string(config.workers) +
                            " entries, got " + std::to_string(config.centers.size()));
    }
    for (const auto& c : config.centers) {
      if (c.size() != config.dim) {
        throw ValidationError("centers: every center must have length d = " +
                              std::to_string(config.dim));
      }
      if (!c.all_finite()) throw ValidationError("centers: non-finite entry");
    }
    spec.centers = config.centers;
  }
  if (config.homogeneous) {
    for (auto& c : spec.centers) c = spec.centers.front();
  }

  spec.mean_center = ParamVector(config.dim);
  for (const auto& c : spec.centers) axpy(1.0, c, spec.mean_center);
  spec.mean_center = (1.0 / static_cast<double>(spec.workers)) * spec.mean_center;

  if (config.x_init.empty()) {
    spec.x_init = ParamVector(config.dim);
  } else {
    if (config.x_init.size() != config.dim) {
      throw ValidationError("x_init: expected length d = " + std::to_string(config.dim));
    }
    spec.x_init = ParamVector(config.x_init);
    if (!spec.x_init.all_finite()) throw ValidationError("x_init: non-finite entry");
  }

  double max_center_norm = 0.0;
  for (const auto& c : spec.centers) max_center_norm = std::max(max_center_norm, norm(c));
  spec.region_radius =
      config.region_radius > 0.0 ? config.region_radius : 10.0 * max_center_norm + 10.0;

  spec.sigma_sq = config.sigma * config.sigma;
  spec.smoothness = 1.0 + 2.0 * spec.nonconvex_weight;
  // sup of |grad f_k| over the ball, plus the RMS noise magnitude.
  spec.gradient_bound = spec.region_radius + max_center_norm +
                        spec.nonconvex_weight * kPenaltySlopeMax *
                            std::sqrt(static_cast<double>(spec.dim)) +
                        config.sigma;

  ParamVector x_star(spec.dim);
  for (std::size_t i = 0; i < spec.dim; ++i) {
    x_star[i] = spec.family == ProblemFamily::kHetQuadratic
                    ? spec.mean_center[i]
                    : minimize_coordinate(spec.mean_center[i], spec.nonconvex_weight);
  }
  spec.f_star = full_value(spec, x_star);
  spec.x_star = std::move(x_star);
  return spec;
}

ProblemSpec with_workers(const ProblemConfig& config, std::size_t workers) {
  ProblemConfig copy = config;
  if (copy.workers != workers) {
    if (!copy.centers.empty()) {
      throw ValidationError("explicit centers given for k = " + std::to_string(copy.workers) +
                            " cannot be reused for k = " + std::to_string(workers));
    }
    copy.workers = workers;
  }
  return make_problem(copy);
}

Sample draw_sample(const ProblemSpec& spec, std::uint64_t master_seed, std::size_t worker_id,
                   std::uint64_t draw_index, std::uint64_t stream_offset) {
  check_worker(spec, worker_id);
  Sample s{worker_id, draw_index, ParamVector(spec.dim)};
  if (spec.noise_std == 0.0) return s;
  const double scale = spec.noise_std / std::sqrt(static_cast<double>(spec.dim));
  SplitMixRng rng(master_seed, stream_offset + worker_id, draw_index);
  for (auto& v : s.noise) v = scale * rng.normal();
  return s;
}

double local_value(const ProblemSpec& spec, std::size_t worker_id, const ParamVector& x) {
  check_worker(spec, worker_id);
  check_dim(spec, x, "local_value");
  const ParamVector& mu = spec.centers[worker_id];
  double quad = 0.0;
  double pen = 0.0;
  for (std::size_t i = 0; i < spec.dim; ++i) {
    const double r = x[i] - mu[i];
    quad += r * r;
    if (spec.nonconvex_weight != 0.0) pen += penalty(x[i]);
  }
  return 0.5 * quad + spec.nonconvex_weight * pen;
}

ParamVector local_gradient(const ProblemSpec& spec, std::size_t worker_id, const ParamVector& x) {
  check_worker(spec, worker_id);
  check_dim(spec, x, "local_gradient");
  const ParamVector& mu = spec.centers[worker_id];
  ParamVector g(spec.dim);
  for (std::size_t i = 0; i < spec.dim; ++i) {
    g[i] = x[i] - mu[i];
    if (spec.nonconvex_weight != 0.0) g[i] += spec.nonconvex_weight * penalty_slope(x[i]);
  }
  return g;
}

double full_value(const ProblemSpec& spec, const ParamVector& x) {
  check_dim(spec, x, "full_value");
  double acc = 0.0;
  for (std::size_t k = 0; k < spec.workers; ++k) acc += local_value(spec, k, x);
  return acc / static_cast<double>(spec.workers);
}

ParamVector full_gradient(const ProblemSpec& spec, const ParamVector& x) {
  check_dim(spec, x, "full_gradient");
  ParamVector g(spec.dim);
  for (std::size_t i = 0; i < spec.dim; ++i) {
    g[i] = x[i] - spec.mean_center[i];
    if (spec.nonconvex_weight != 0.0) g[i] += spec.nonconvex_weight * penalty_slope(x[i]);
  }
  return g;
}

ParamVector stoch_gradient(const ProblemSpec& spec, std::size_t worker_id, const ParamVector& x,
                           const Sample& sample) {
  if (sample.worker_id != worker_id) {
    throw ContractViolation("sample drawn for worker " + std::to_string(sample.worker_id) +
                            " used by worker " + std::to_string(worker_id));
  }
  ParamVector g = local_gradient(spec, worker_id, x);
  require_same_size(g, sample.noise, "stoch_gradient");
  axpy(1.0, sample.noise, g);
  return g;
}

bool in_region(const ProblemSpec& spec, const ParamVector& x) {
  return norm(x) <= spec.region_radius;
}

ParamVector sample_in_ball(std::size_t dim, double radius, std::uint64_t seed,
                           std::uint64_t stream, std::uint64_t index) {
  SplitMixRng rng(seed, stream, index);
  ParamVector p(dim);
  double n2 = 0.0;
  do {
    for (auto& v : p) v = rng.normal();
    n2 = squared_norm(p);
  } while (n2 == 0.0);
  const double r = radius * std::pow(rng.uniform(), 1.0 / static_cast<double>(dim));
  return (r / std::sqrt(n2)) * p;
}

ConstantEstimates estimate_constants(const ProblemSpec& spec, std::size_t n_samples,
                                     std::size_t n_points, std::uint64_t seed) {
  if (n_samples < 2) throw ContractViolation("estimate_constants: n_samples must be >= 2");
  if (n_points < 2) throw ContractViolation("estimate_constants: n_points must be >= 2");

  std::vector<ParamVector> points;
  points.reserve(n_points);
  for (std::size_t p = 0; p < n_points; ++p) {
    points.push_back(sample_in_ball(spec.dim, spec.region_radius, seed, streams::kEstimatePoints, p));
  }

  ConstantEstimates est;
  double dev_sum = 0.0;
  std::uint64_t draws = 0;
  for (std::size_t p = 0; p < n_points; ++p) {
    for (std::size_t k = 0; k < spec.workers; ++k) {
      const ParamVector exact = local_gradient(spec, k, points[p]);
      for (std::size_t s = 0; s < n_samples; ++s) {
        const Sample sample = draw_sample(spec, seed ^ streams::kEstimateSamples, k, draws);
        const ParamVector g = stoch_gradient(spec, k, points[p], sample);
        dev_sum += squared_norm(g - exact);
        est.gradient_bound_hat = std::max(est.gradient_bound_hat, norm(g));
        ++draws;
      }
    }
  }
  est.sigma_sq_hat = dev_sum / static_cast<double>(draws);

  std::vector<ParamVector> grads;
  grads.reserve(n_points);
  for (const auto& p : points) grads.push_back(full_gradient(spec, p));
  for (std::size_t i = 0; i < n_points; ++i) {
    for (std::size_t j = i + 1; j < n_points; ++j) {
      const double dx = norm(points[i] - points[j]);
      if (dx == 0.0) continue;
      est.smoothness_hat = std::max(est.smoothness_hat, norm(grads[i] - grads[j]) / dx);
    }
  }
  return est;
}

double fd_check(const ProblemSpec& spec, const ParamVector& x, double h) {
  if (!(h > 0.0)) throw ContractViolation("fd_check: step h must be > 0");
  const ParamVector g = full_gradient(spec, x);
  double worst = 0.0;
  ParamVector probe = x;
  for (std::size_t i = 0; i < spec.dim; ++i) {
    probe[i] = x[i] + h;
    const double up = full_value(spec, probe);
    probe[i] = x[i] - h;
    const double down = full_value(spec, probe);
    probe[i] = x[i];
    const double fd = (up - down) / (2.0 * h);
    worst = std::max(worst, std::abs(fd - g[i]) / std::max(1.0, std::abs(g[i])));
  }
  return worst;
}

}  // namespace stormdist
