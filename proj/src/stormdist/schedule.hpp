// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>

namespace stormdist {

/// Lower bound on b^3 required for the step-size guarantees: 2^{2/3} / 84.
double min_b_cubed();

/// Step-size constants shared by the adaptive and non-adaptive schedules.
///
/// noise_scale is the gradient bound G for the adaptive schedule and the
/// noise standard deviation sigma for the non-adaptive one.
struct ScheduleParams {
  double kappa_bar = 0.0;
  double c = 0.0;
  double b = 0.5;
  double alpha = 2.0 / 3.0;
  double smoothness = 1.0;  // L
  double noise_scale = 1.0;
  std::size_t workers = 1;  // K
  /// Initial w; the t = 0 instance of the w_t rule unless overridden.
  double w0 = 0.0;
};

struct ScheduleOverrides {
  std::optional<double> kappa_bar;
  std::optional<double> c;
  std::optional<double> w0;
};

/// kappa_bar = b K^alpha s^{2/3} / L,  c = 28 L^2 / K + 2^{2/3} s^2 / (3 L kappa_bar^3).
/// Throws ValidationError naming the violated inequality.
ScheduleParams derive_params(std::size_t workers, double smoothness, double noise_scale,
                             double b = 0.5, double alpha = 2.0 / 3.0,
                             const ScheduleOverrides& overrides = {});

/// Server-side schedule state after t rounds.
struct ScheduleState {
  std::uint64_t t = 0;
  double w = 0.0;
  /// Running total of the feedback terms in iteration order: sum of
  /// Gbar_i^2 (adaptive) or sigma^2 per round (non-adaptive).
  double feedback_sum = 0.0;
  double eta = 0.0;
  double a_next = 1.0;
  bool clamped = false;
};

/// t = 0 state: w = w0, eta_0 = kappa_bar / w0^{1/3}.
ScheduleState initial_state(const ScheduleParams& params);

/// Mean of squares in index order.
double aggregate_gradnorm(std::span<const double> g_norms, std::size_t expected_workers);

/// One adaptive step:
///   sum += gbar_sq;  w = max{2G^2, kb^3 L^3 - sum, kb^3 c^3 / L^3};  eta = kb / (w + sum)^{1/3}
ScheduleState adaptive_step(const ScheduleState& state, const ScheduleParams& params,
                            double gbar_sq);

/// One non-adaptive step; identical to adaptive_step with gbar_sq = sigma_sq.
ScheduleState nonadaptive_step(const ScheduleState& state, const ScheduleParams& params,
                               double sigma_sq);

struct Momentum {
  double a = 1.0;
  bool clamped = false;
};

/// a = min(1, c eta^2); clamped is set only when c eta^2 > 1.
Momentum momentum(const ScheduleParams& params, double eta);

}  // namespace stormdist
