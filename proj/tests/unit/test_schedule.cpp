// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <cmath>
#include <string>
#include <vector>

#include "stormdist/errors.hpp"
#include "stormdist/rng.hpp"
#include "stormdist/schedule.hpp"

namespace stormdist {
namespace {

TEST(DeriveParams, KappaBarForEightWorkers) {
  const auto p = derive_params(8, 1.0, 1.0, 1.0, 2.0 / 3.0);
  EXPECT_NEAR(p.kappa_bar, 4.0, 1e-14);
}

// Frozen from an independent evaluation: 28/8 + 2^{2/3}/(3*64).
TEST(DeriveParams, MomentumConstantForEightWorkers) {
  const auto p = derive_params(8, 1.0, 1.0, 1.0, 2.0 / 3.0);
  EXPECT_NEAR(p.c, 3.508267713812334, 1e-12);
  EXPECT_LE(p.c, 7.0);
}

TEST(DeriveParams, SmallBRejectedWithInequality) {
  EXPECT_NEAR(min_b_cubed(), 0.018897631571049994, 1e-15);
  try {
    derive_params(8, 1.0, 1.0, 0.2);
    FAIL() << "expected rejection";
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("b^3 >= 2^{2/3}/84"), std::string::npos);
  }
  // Just above the bound is accepted.
  EXPECT_NO_THROW(derive_params(8, 1.0, 1.0, std::cbrt(min_b_cubed()) * (1.0 + 1e-12)));
}

TEST(DeriveParams, MomentumCeilingEnforced) {
  ScheduleOverrides o;
  o.c = 8.0;
  try {
    derive_params(8, 1.0, 1.0, 1.0, 2.0 / 3.0, o);
    FAIL() << "expected rejection";
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("c <= 56 L^2/K"), std::string::npos);
  }
}

TEST(DeriveParams, ZeroNoiseNeedsExplicitScale) {
  EXPECT_THROW(derive_params(4, 1.0, 0.0), ValidationError);
  ScheduleOverrides o;
  o.kappa_bar = 1.0;
  EXPECT_NO_THROW(derive_params(4, 1.0, 0.0, 0.5, 2.0 / 3.0, o));
}

TEST(DeriveParams, DefaultW0IsEmptySumInstance) {
  const auto p = derive_params(3, 2.0, 1.5);
  const double kb3 = p.kappa_bar * p.kappa_bar * p.kappa_bar;
  const double expected = std::max({2.0 * 1.5 * 1.5, kb3 * 8.0, kb3 * p.c * p.c * p.c / 8.0});
  EXPECT_DOUBLE_EQ(p.w0, expected);
}

TEST(AggregateGradnorm, Examples) {
  const std::vector<double> two{3.0, 4.0};
  EXPECT_DOUBLE_EQ(aggregate_gradnorm(two, 2), 12.5);
  const std::vector<double> zeros(5, 0.0);
  EXPECT_EQ(aggregate_gradnorm(zeros, 5), 0.0);
  const std::vector<double> one{1.7};
  EXPECT_DOUBLE_EQ(aggregate_gradnorm(one, 1), 1.7 * 1.7);
  EXPECT_THROW(aggregate_gradnorm(two, 3), ContractViolation);
}

ScheduleParams manual_params(double kappa_bar, double c, double L, double noise_scale) {
  ScheduleParams p;
  p.kappa_bar = kappa_bar;
  p.c = c;
  p.smoothness = L;
  p.noise_scale = noise_scale;
  const double kb3 = kappa_bar * kappa_bar * kappa_bar;
  p.w0 = std::max({2.0 * noise_scale * noise_scale, kb3 * L * L * L, kb3 * c * c * c / (L * L * L)});
  return p;
}

TEST(AdaptiveStep, ThreeWayMax) {
  // kb^3 L^3 = 10, 2G^2 = 2, kb^3 c^3 / L^3 = 0.5.
  const auto p = manual_params(std::cbrt(10.0), std::cbrt(0.05), 1.0, 1.0);
  ScheduleState s = initial_state(p);
  s = adaptive_step(s, p, 1.0);
  s = adaptive_step(s, p, 2.0);
  EXPECT_DOUBLE_EQ(s.feedback_sum, 3.0);
  EXPECT_NEAR(s.w, 7.0, 1e-14);
  EXPECT_NEAR(s.eta, 1.0, 1e-15);
  EXPECT_LE(s.eta * p.smoothness, 1.0 + 1e-15);
}

TEST(AdaptiveStep, CubeRootOfEight) {
  const auto p = manual_params(1.0, 0.01, 2.0, 1.0);
  const ScheduleState s = adaptive_step(initial_state(p), p, 0.0);
  EXPECT_DOUBLE_EQ(s.w, 8.0);
  EXPECT_DOUBLE_EQ(s.eta, 0.5);
  EXPECT_THROW(adaptive_step(s, p, -1.0), ContractViolation);
}

TEST(NonadaptiveStep, SaturatesAtTwoSigmaSq) {
  const auto p = manual_params(1.0, 0.1, 1.0, 1.0);
  ScheduleState s = initial_state(p);
  for (int t = 0; t < 5; ++t) s = nonadaptive_step(s, p, 1.0);
  EXPECT_DOUBLE_EQ(s.w, 2.0);
  EXPECT_DOUBLE_EQ(s.eta, 1.0 / std::cbrt(7.0));
}

TEST(NonadaptiveStep, EmptySumInitialStep) {
  ScheduleOverrides o;
  o.kappa_bar = 1.0;
  const auto p = derive_params(1, 1.0, 1.0, 0.5, 2.0 / 3.0, o);
  const double c3 = p.c * p.c * p.c;
  EXPECT_DOUBLE_EQ(p.w0, std::max({2.0, 1.0, c3}));
  const auto s = initial_state(p);
  EXPECT_EQ(s.t, 0u);
  EXPECT_DOUBLE_EQ(s.eta, 1.0 / std::cbrt(p.w0));
}

TEST(NonadaptiveStep, EightWorkerScanIsMonotone) {
  const auto p = derive_params(8, 1.0, 1.0, 1.0);
  ScheduleState s = initial_state(p);
  for (int t = 1; t <= 100; ++t) {
    const ScheduleState next = nonadaptive_step(s, p, 1.0);
    EXPECT_LE(next.eta, s.eta) << "t=" << t;
    EXPECT_LE(next.w, s.w) << "t=" << t;
    s = next;
  }
}

TEST(Momentum, Examples) {
  ScheduleParams p;
  p.c = 4.0;
  auto m = momentum(p, 0.5);
  EXPECT_EQ(m.a, 1.0);
  EXPECT_FALSE(m.clamped);
  p.c = 1.0;
  m = momentum(p, 0.5);
  EXPECT_EQ(m.a, 0.25);
  EXPECT_FALSE(m.clamped);
  p.c = 56.0;
  m = momentum(p, 1.0);
  EXPECT_EQ(m.a, 1.0);
  EXPECT_TRUE(m.clamped);
}

TEST(Equivalence, AdaptiveMatchesNonadaptiveUnderConstantFeedback) {
  const double sigma = 1.3;
  const auto p = derive_params(4, 1.0, sigma);
  ScheduleState a = initial_state(p);
  ScheduleState n = a;
  for (int t = 0; t < 500; ++t) {
    a = adaptive_step(a, p, sigma * sigma);
    n = nonadaptive_step(n, p, sigma * sigma);
    ASSERT_EQ(a.eta, n.eta);
    ASSERT_EQ(a.w, n.w);
    ASSERT_EQ(a.a_next, n.a_next);
  }
}

// Random parameter draws that satisfy the validity conditions; alpha >= 1/3
// keeps the default c within its ceiling.
TEST(Properties, SafetyUnderRandomFeedback) {
  SplitMixRng rng(2024);
  std::size_t violations = 0;
  for (int draw = 0; draw < 200; ++draw) {
    const std::size_t K = 1 + rng.below(64);
    const double L = 0.1 + 10.0 * rng.uniform();
    const double G = 0.1 + 10.0 * rng.uniform();
    const double b = std::cbrt(min_b_cubed() * (1.0 + 100.0 * rng.uniform()));
    const double alpha = 1.0 / 3.0 + (2.0 / 3.0) * rng.uniform();
    const auto p = derive_params(K, L, G, b, alpha);
    for (int seq = 0; seq < 5; ++seq) {
      ScheduleState s = initial_state(p);
      const std::size_t len = 1 + rng.below(300);
      for (std::size_t t = 0; t < len; ++t) {
        const double fb = rng.uniform() < 0.1 ? 0.0 : G * G * 4.0 * rng.uniform();
        const ScheduleState next = adaptive_step(s, p, fb);
        if (next.eta > s.eta || next.w > s.w) ++violations;
        if (next.eta > (1.0 / L) * (1.0 + 1e-12)) ++violations;
        if (next.eta > (L / p.c) * (1.0 + 1e-12)) ++violations;
        if (!(next.a_next > 0.0 && next.a_next <= 1.0)) ++violations;
        s = next;
      }
    }
  }
  EXPECT_EQ(violations, 0u);
}

}  // namespace
}  // namespace stormdist
