// SPDX-License-Identifier: Apache-2.0
#include "stormdist/algorithms.hpp"

#include <cmath>
#include <string>

#include "stormdist/errors.hpp"
#include "stormdist/estimator.hpp"

namespace stormdist {

namespace {

constexpr double kDivergenceFactor = 1e3;

struct LoopConfig {
  Algorithm algo;
  RoundHooks hooks;
  double eta0 = 0.0;
};

MetricsRecord make_record(const ProblemSpec& spec, const RoundSnapshot& snap, double prev_eta,
                          const RoundAccounting& acct) {
  MetricsRecord r;
  r.t = snap.t;
  r.eta = snap.step.eta;
  r.a = snap.step.a;
  r.clamped = snap.step.clamped;
  const ParamVector grad = full_gradient(spec, snap.x);
  r.grad_norm = norm(grad);
  r.f_val = full_value(spec, snap.x);
  const double err_sq = squared_norm(error_vector(snap.d_bar, grad));
  r.err_norm = std::sqrt(err_sq);
  const double L = spec.smoothness;
  r.potential =
      r.f_val + static_cast<double>(spec.workers) / (48.0 * L * L * prev_eta) * err_sq;
  r.ifo_per_worker = acct.ifo_per_worker;
  r.bytes_up = acct.bytes_up;
  r.bytes_down = acct.bytes_down;
  r.out_of_region = !in_region(spec, snap.x);
  return r;
}

RunResult run_loop(const ProblemSpec& spec, const RunOptions& options, const LoopConfig& loop) {
  if (options.rounds == 0) throw ContractViolation("T must be >= 1");
  if (options.reservoir_cap == 0) throw ContractViolation("reservoir capacity must be >= 1");

  RunResult result;
  result.algo = loop.algo;
  result.metrics.reserve(options.rounds);

  Cluster cluster(spec, options.master_seed,
                  ClusterOptions{options.threads, options.trace_path});
  cluster.initialize();
  result.init_accounting = cluster.accounting();

  IterateReservoir reservoir(options.reservoir_cap, options.master_seed);
  const double limit = kDivergenceFactor * spec.region_radius;
  double prev_eta = loop.eta0;

  for (std::uint64_t t = 1; t <= options.rounds; ++t) {
    RoundSnapshot snap;
    try {
      snap = cluster.run_round(loop.hooks);
    } catch (const ContractViolation& e) {
      result.abort_reason = "round " + std::to_string(t) + ": " + e.what();
      break;
    }
    reservoir.offer(snap.t, snap.x);
    if (options.record_trajectory) result.trajectory.push_back(snap.x);
    result.metrics.push_back(make_record(spec, snap, prev_eta, cluster.accounting()));
    prev_eta = snap.step.eta;

    const ParamVector& x_next = cluster.x();
    if (!x_next.all_finite()) {
      result.abort_reason = "round " + std::to_string(t) + ": non-finite iterate";
      break;
    }
    if (norm(x_next) > limit) {
      result.abort_reason = "round " + std::to_string(t) + ": |x| = " +
                            std::to_string(norm(x_next)) + " exceeds divergence limit " +
                            std::to_string(limit);
      break;
    }
  }

  result.accounting = cluster.accounting();
  result.iterates_sampled.assign(reservoir.items().begin(), reservoir.items().end());
  if (!result.iterates_sampled.empty()) {
    SplitMixRng rng(options.master_seed, streams::kOutputSelect, 0);
    const SampledIterate& chosen = select_output(result.iterates_sampled, rng);
    result.x_a = chosen.x;
    result.x_a_index = chosen.t;
  }
  return result;
}

// Workers derive a_{t+1} = c eta_t^2 from the step they hold.
StepDecision finish_step(const ScheduleParams& params, double eta, bool force_a_one) {
  if (force_a_one) return {eta, 1.0, false};
  const Momentum m = momentum(params, eta);
  return {eta, m.a, m.clamped};
}

}  // namespace

std::string_view to_string(Algorithm algo) {
  switch (algo) {
    case Algorithm::kAdStorm:
      return "adstorm";
    case Algorithm::kDStorm:
      return "dstorm";
    case Algorithm::kDSgd:
      return "dsgd";
  }
  return "unknown";
}

std::optional<Algorithm> parse_algorithm(std::string_view name) {
  if (name == "adstorm") return Algorithm::kAdStorm;
  if (name == "dstorm") return Algorithm::kDStorm;
  if (name == "dsgd") return Algorithm::kDSgd;
  return std::nullopt;
}

IterateReservoir::IterateReservoir(std::size_t capacity, std::uint64_t master_seed)
    : capacity_(capacity), master_seed_(master_seed) {}

void IterateReservoir::offer(std::uint64_t t, const ParamVector& x) {
  ++seen_;
  if (items_.size() < capacity_) {
    items_.push_back({t, x});
    return;
  }
  SplitMixRng rng(master_seed_, streams::kReservoir, seen_);
  const std::uint64_t j = rng.below(seen_);
  if (j < capacity_) items_[j] = {t, x};
}

const SampledIterate& select_output(std::span<const SampledIterate> iterates, SplitMixRng& rng) {
  if (iterates.empty()) throw ContractViolation("select_output: no iterates stored");
  return iterates[rng.below(iterates.size())];
}

std::vector<double> nonadaptive_etas(const ScheduleParams& params, std::uint64_t rounds) {
  std::vector<double> etas;
  etas.reserve(rounds + 1);
  ScheduleState state = initial_state(params);
  etas.push_back(state.eta);
  const double sigma_sq = params.noise_scale * params.noise_scale;
  for (std::uint64_t t = 1; t <= rounds; ++t) {
    state = nonadaptive_step(state, params, sigma_sq);
    etas.push_back(state.eta);
  }
  return etas;
}

RunResult run_adstorm(const ProblemSpec& spec, const ScheduleParams& params,
                      const RunOptions& options) {
  ScheduleState state = initial_state(params);
  LoopConfig loop{Algorithm::kAdStorm, {}, state.eta};
  loop.hooks.rule = DirectionRule::kStorm;
  loop.hooks.decide_step = [&](Cluster& cluster, std::uint64_t) {
    const auto norms = cluster.local_grad_norms(options.fresh_sample_step5);
    double gbar_sq = cluster.exchange_grad_norms(norms);
    if (options.forced_gbar_sq) gbar_sq = *options.forced_gbar_sq;
    state = adaptive_step(state, params, gbar_sq);
    const double eta = cluster.broadcast_scalar(MessageKind::kEtaDown, state.eta);
    return finish_step(params, eta, options.force_a_one);
  };
  RunResult r = run_loop(spec, options, loop);
  r.params = params;
  return r;
}

RunResult run_dstorm(const ProblemSpec& spec, const ScheduleParams& params,
                     const RunOptions& options) {
  ScheduleState state = initial_state(params);
  const double sigma_sq = params.noise_scale * params.noise_scale;
  LoopConfig loop{Algorithm::kDStorm, {}, state.eta};
  loop.hooks.rule = DirectionRule::kStorm;
  loop.hooks.decide_step = [&](Cluster&, std::uint64_t) {
    state = nonadaptive_step(state, params, sigma_sq);
    return finish_step(params, state.eta, options.force_a_one);
  };
  RunResult r = run_loop(spec, options, loop);
  r.params = params;
  return r;
}

RunResult run_dsgd(const ProblemSpec& spec, std::span<const double> etas,
                   const RunOptions& options) {
  if (etas.size() < options.rounds + 1) {
    throw ContractViolation("run_dsgd: need T + 1 step sizes, got " +
                            std::to_string(etas.size()));
  }
  for (double e : etas) {
    if (!(e > 0.0) || !std::isfinite(e)) throw ValidationError("dsgd step sizes must be > 0");
  }
  LoopConfig loop{Algorithm::kDSgd, {}, etas[0]};
  loop.hooks.rule = DirectionRule::kSgd;
  loop.hooks.decide_step = [&](Cluster&, std::uint64_t t) {
    return StepDecision{etas[t], 1.0, false};
  };
  return run_loop(spec, options, loop);
}

}  // namespace stormdist
