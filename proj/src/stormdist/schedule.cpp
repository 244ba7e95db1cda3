// SPDX-License-Identifier: Apache-2.0
#include "stormdist/schedule.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <string>

#include "stormdist/errors.hpp"

namespace stormdist {

namespace {

const double kTwoPow23 = std::cbrt(4.0);  // 2^{2/3}

std::string fmt_double(double v) {
  std::ostringstream os;
  os.precision(6);
  os << v;
  return os.str();
}

ScheduleState step_with_feedback(const ScheduleState& state, const ScheduleParams& params,
                                 double feedback) {
  const double kb3 = params.kappa_bar * params.kappa_bar * params.kappa_bar;
  const double L = params.smoothness;
  const double L3 = L * L * L;
  const double c3 = params.c * params.c * params.c;

  const double two_g2 = 2.0 * params.noise_scale * params.noise_scale;
  const double floor_term = kb3 * c3 / L3;

  ScheduleState next;
  next.t = state.t + 1;
  next.feedback_sum = state.feedback_sum + feedback;
  next.w = std::max({two_g2, kb3 * L3 - next.feedback_sum, floor_term});
  // w + sum, distributed over the max so it is exactly non-decreasing in
  // floating point ((A - s) + s need not round back to A).
  const double denom =
      std::max({two_g2 + next.feedback_sum, kb3 * L3, floor_term + next.feedback_sum});
  next.eta = params.kappa_bar / std::cbrt(denom);
  const Momentum m = momentum(params, next.eta);
  next.a_next = m.a;
  next.clamped = m.clamped;
  return next;
}

}  // namespace

double min_b_cubed() { return kTwoPow23 / 84.0; }

ScheduleParams derive_params(std::size_t workers, double smoothness, double noise_scale,
                             double b, double alpha, const ScheduleOverrides& overrides) {
  if (workers == 0) throw ValidationError("K >= 1 required");
  if (!(smoothness > 0.0)) throw ValidationError("L > 0 required");
  if (!(alpha > 0.0 && alpha <= 1.0)) throw ValidationError("alpha in (0, 1] required");
  if (!(b > 0.0) || b * b * b < min_b_cubed()) {
    throw ValidationError("b^3 >= 2^{2/3}/84 violated: b = " + fmt_double(b) + " gives b^3 = " +
                          fmt_double(b * b * b) + " < " + fmt_double(min_b_cubed()));
  }
  const auto K = static_cast<double>(workers);
  const double L = smoothness;

  ScheduleParams p;
  p.b = b;
  p.alpha = alpha;
  p.smoothness = L;
  p.noise_scale = noise_scale;
  p.workers = workers;

  if (overrides.kappa_bar) {
    if (!(*overrides.kappa_bar > 0.0)) throw ValidationError("kappa_bar > 0 required");
    p.kappa_bar = *overrides.kappa_bar;
  } else {
    if (!(noise_scale > 0.0)) {
      throw ValidationError(
          "noise_scale > 0 required to derive kappa_bar (set schedule.noise_scale or "
          "schedule.kappa_bar)");
    }
    p.kappa_bar = b * std::pow(K, alpha) * std::cbrt(noise_scale * noise_scale) / L;
  }
  const double kb3 = p.kappa_bar * p.kappa_bar * p.kappa_bar;

  if (overrides.c) {
    if (!(*overrides.c > 0.0)) throw ValidationError("c > 0 required");
    p.c = *overrides.c;
  } else {
    p.c = 28.0 * L * L / K + kTwoPow23 * noise_scale * noise_scale / (3.0 * L * kb3);
  }
  const double c_max = 56.0 * L * L / K;
  if (p.c > c_max) {
    throw ValidationError("c <= 56 L^2/K violated: c = " + fmt_double(p.c) + " > " +
                          fmt_double(c_max));
  }

  const double L3 = L * L * L;
  const double c3 = p.c * p.c * p.c;
  if (overrides.w0) {
    if (!(*overrides.w0 > 0.0)) throw ValidationError("w0 > 0 required");
    p.w0 = *overrides.w0;
  } else {
    p.w0 = std::max({2.0 * noise_scale * noise_scale, kb3 * L3, kb3 * c3 / L3});
  }
  return p;
}

ScheduleState initial_state(const ScheduleParams& params) {
  ScheduleState s;
  s.t = 0;
  s.w = params.w0;
  s.feedback_sum = 0.0;
  s.eta = params.kappa_bar / std::cbrt(params.w0);
  const Momentum m = momentum(params, s.eta);
  s.a_next = m.a;
  s.clamped = m.clamped;
  return s;
}

double aggregate_gradnorm(std::span<const double> g_norms, std::size_t expected_workers) {
  if (g_norms.size() != expected_workers) {
    throw ContractViolation("aggregate_gradnorm: expected " + std::to_string(expected_workers) +
                            " norms, got " + std::to_string(g_norms.size()));
  }
  double acc = 0.0;
  for (double g : g_norms) {
    if (!(g >= 0.0)) throw ContractViolation("aggregate_gradnorm: negative or NaN norm");
    acc += g * g;
  }
  return acc / static_cast<double>(g_norms.size());
}

ScheduleState adaptive_step(const ScheduleState& state, const ScheduleParams& params,
                            double gbar_sq) {
  if (!(gbar_sq >= 0.0)) throw ContractViolation("adaptive_step: Gbar^2 must be >= 0");
  return step_with_feedback(state, params, gbar_sq);
}

ScheduleState nonadaptive_step(const ScheduleState& state, const ScheduleParams& params,
                               double sigma_sq) {
  return step_with_feedback(state, params, sigma_sq);
}

Momentum momentum(const ScheduleParams& params, double eta) {
  const double raw = params.c * eta * eta;
  if (raw > 1.0) return {1.0, true};
  return {raw, false};
}

}  // namespace stormdist
