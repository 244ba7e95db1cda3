// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

#include "stormdist/param_vector.hpp"

namespace stormdist {

enum class ProblemFamily { kHetQuadratic, kSigmoidQuadratic };

std::string_view to_string(ProblemFamily family);
std::optional<ProblemFamily> parse_family(std::string_view name);

/// User-facing description of a problem, as read from config.
struct ProblemConfig {
  ProblemFamily family = ProblemFamily::kHetQuadratic;
  std::size_t dim = 1;
  std::size_t workers = 1;
  /// Explicit centers, one per worker. Empty means "generate from seed".
  std::vector<ParamVector> centers;
  double sigma = 1.0;
  double lambda = 0.0;
  /// Non-positive means "use the default 10 * max_k |mu_k| + 10".
  double region_radius = 0.0;
  std::uint64_t seed = 0;
  /// Force every worker onto the same center (iid data).
  bool homogeneous = false;
  /// Starting iterate. Empty means the origin.
  std::vector<double> x_init;
};

/// A fully resolved distributed objective with its known constants.
///
/// het_quadratic:     f_k(x) = 1/2 |x - mu_k|^2
/// sigmoid_quadratic: f_k(x) = 1/2 |x - mu_k|^2 + lambda * sum_i x_i^2 / (1 + x_i^2)
///
/// Stochastic gradients add isotropic Gaussian noise with per-coordinate
/// standard deviation sigma / sqrt(d), so E|noise|^2 = sigma^2 exactly.
struct ProblemSpec {
  ProblemFamily family = ProblemFamily::kHetQuadratic;
  std::size_t dim = 0;
  std::size_t workers = 0;
  std::vector<ParamVector> centers;
  ParamVector mean_center;
  double noise_std = 0.0;
  double nonconvex_weight = 0.0;
  std::uint64_t seed = 0;
  bool homogeneous = false;
  ParamVector x_init;

  double smoothness = 1.0;      // L
  double sigma_sq = 0.0;        // variance bound
  double gradient_bound = 0.0;  // G, valid on |x| <= region_radius
  double region_radius = 0.0;
  std::optional<double> f_star;
  std::optional<ParamVector> x_star;
};

/// Validates the config and derives centers, constants and the minimizer.
ProblemSpec make_problem(const ProblemConfig& config);

/// Same problem with a different worker count; generated centers are redrawn
/// for the new count, explicit centers must already match.
ProblemSpec with_workers(const ProblemConfig& config, std::size_t workers);

struct Sample {
  std::size_t worker_id = 0;
  std::uint64_t draw_index = 0;
  ParamVector noise;
};

Sample draw_sample(const ProblemSpec& spec, std::uint64_t master_seed, std::size_t worker_id,
                   std::uint64_t draw_index, std::uint64_t stream_offset = 0);

double local_value(const ProblemSpec& spec, std::size_t worker_id, const ParamVector& x);
ParamVector local_gradient(const ProblemSpec& spec, std::size_t worker_id, const ParamVector& x);

double full_value(const ProblemSpec& spec, const ParamVector& x);
/// Exact average gradient; used for metrics only.
ParamVector full_gradient(const ProblemSpec& spec, const ParamVector& x);

/// Local gradient plus the sample's additive noise.
ParamVector stoch_gradient(const ProblemSpec& spec, std::size_t worker_id, const ParamVector& x,
                           const Sample& sample);

bool in_region(const ProblemSpec& spec, const ParamVector& x);

struct ConstantEstimates {
  double sigma_sq_hat = 0.0;
  double gradient_bound_hat = 0.0;
  double smoothness_hat = 0.0;
};

/// Monte-Carlo check of the declared constants at points drawn uniformly
/// from the region ball.
ConstantEstimates estimate_constants(const ProblemSpec& spec, std::size_t n_samples,
                                     std::size_t n_points, std::uint64_t seed);

/// Worst coordinate-wise |fd - g| / max(1, |g|) of central differences of
/// full_value against full_gradient.
double fd_check(const ProblemSpec& spec, const ParamVector& x, double h);

/// Uniform point in the ball of the given radius.
ParamVector sample_in_ball(std::size_t dim, double radius, std::uint64_t seed,
                           std::uint64_t stream, std::uint64_t index);

}  // namespace stormdist
