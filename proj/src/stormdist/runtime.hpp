// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <fstream>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "stormdist/estimator.hpp"
#include "stormdist/param_vector.hpp"
#include "stormdist/problems.hpp"

namespace stormdist {

enum class MessageKind : std::uint32_t {
  kGradNormUp = 1,
  kGbarDown = 2,
  kDirectionUp = 3,
  kDirectionDown = 4,
  kEtaDown = 5,
};

bool is_scalar_kind(MessageKind kind) noexcept;

/// Wire layout, little-endian:
///   kind u32 | worker_id u32 | iteration u64 | payload f64 * n
inline constexpr std::size_t kMessageHeaderBytes = 16;

struct Message {
  MessageKind kind = MessageKind::kDirectionUp;
  std::uint32_t worker_id = 0;
  std::uint64_t iteration = 0;
  std::vector<double> payload;

  std::size_t byte_size() const noexcept { return kMessageHeaderBytes + 8 * payload.size(); }
};

/// Throws ProtocolError unless scalar kinds carry one real and direction
/// kinds carry exactly `dim` reals.
void validate_payload(const Message& msg, std::size_t dim);

std::vector<std::uint8_t> encode(const Message& msg);
/// Decodes one message from the front of `bytes`; `payload_len` reals follow the header.
/// Returns the number of bytes consumed.
std::size_t decode(std::span<const std::uint8_t> bytes, std::size_t payload_len, Message& out);

/// Appends every exchanged message to a binary file.
class TraceSink {
 public:
  explicit TraceSink(const std::string& path);
  void write(const Message& msg);

 private:
  std::ofstream out_;
};

struct RoundAccounting {
  std::uint64_t ifo_per_worker = 0;
  std::uint64_t bytes_up = 0;
  std::uint64_t bytes_down = 0;
  std::uint64_t rounds = 0;
};

/// Receives payloads in ascending worker order.
using Reducer = std::function<std::vector<double>(std::span<const std::span<const double>>)>;

/// Coordinate-wise mean, summed in ascending worker order then divided by K.
Reducer mean_reducer();

/// Server side of a gather: checks one message per worker, all of `kind`
/// and `iteration`, reduces in worker-id order and charges bytes_up.
std::vector<double> gather_reduce(std::span<const Message> messages, std::size_t workers,
                                  MessageKind kind, std::uint64_t iteration,
                                  const Reducer& reducer, RoundAccounting& accounting,
                                  TraceSink* trace = nullptr);

/// One copy per worker link; charges bytes_down K times.
std::vector<Message> broadcast(MessageKind kind, std::uint64_t iteration,
                               std::span<const double> payload, std::size_t workers,
                               RoundAccounting& accounting, TraceSink* trace = nullptr);

/// Runs per-worker work either inline (reference semantics) or on a TBB
/// arena. Bodies must only touch their own worker's slot.
class WorkerExecutor {
 public:
  explicit WorkerExecutor(unsigned threads);
  ~WorkerExecutor();
  WorkerExecutor(const WorkerExecutor&) = delete;
  WorkerExecutor& operator=(const WorkerExecutor&) = delete;

  unsigned threads() const noexcept { return threads_; }
  void for_each(std::size_t count, const std::function<void(std::size_t)>& body);

 private:
  struct Arena;
  unsigned threads_;
  std::unique_ptr<Arena> arena_;
};

struct WorkerState {
  std::uint32_t id = 0;
  ParamVector x;
  DirectionState dir;
  /// Rounds completed by this worker.
  std::uint64_t iteration = 0;
  std::uint64_t ifo = 0;
};

enum class DirectionRule { kStorm, kSgd };

struct StepDecision {
  double eta = 0.0;
  double a = 1.0;
  bool clamped = false;
};

class Cluster;

struct RoundHooks {
  /// Produces eta_t and a_{t+1}; may exchange scalar messages via the cluster.
  std::function<StepDecision(Cluster&, std::uint64_t t)> decide_step;
  DirectionRule rule = DirectionRule::kStorm;
};

/// Server view of the round just executed: the iterate and averaged
/// direction the step was taken from.
struct RoundSnapshot {
  std::uint64_t t = 0;
  ParamVector x;
  ParamVector d_bar;
  StepDecision step;
};

struct ClusterOptions {
  unsigned threads = 1;
  std::string trace_path;
};

/// K simulated workers plus the logical server, advanced in lockstep.
class Cluster {
 public:
  Cluster(const ProblemSpec& spec, std::uint64_t master_seed, ClusterOptions options = {});
  ~Cluster();

  /// Round 0: every worker evaluates one stochastic gradient at x_1 and the
  /// server averages them into d_bar_1.
  void initialize();

  /// One synchronous round t: step, fresh sample, direction update, average.
  RoundSnapshot run_round(const RoundHooks& hooks);

  /// Norms of the stochastic gradient at the current iterate, one per worker.
  /// With fresh_sample the gradient is re-drawn on a separate stream and
  /// costs one oracle call per worker; otherwise the cached one is reused.
  std::vector<double> local_grad_norms(bool fresh_sample);

  /// Workers send their scalar up; the server reduces with aggregate_gradnorm.
  double exchange_grad_norms(std::span<const double> norms);
  /// Server sends a scalar to every worker; returns the value each worker holds.
  double broadcast_scalar(MessageKind kind, double value);

  const ProblemSpec& spec() const noexcept { return spec_; }
  std::uint64_t master_seed() const noexcept { return master_seed_; }
  std::uint64_t iteration() const noexcept { return iteration_; }
  const RoundAccounting& accounting() const noexcept { return accounting_; }
  std::span<const WorkerState> workers() const noexcept { return workers_; }
  const ParamVector& x() const { return workers_.front().x; }
  const ParamVector& d_bar() const { return workers_.front().dir.direction; }

  /// Test hook: mutate one worker to provoke protocol errors.
  WorkerState& mutable_worker(std::size_t k) { return workers_.at(k); }

 private:
  void check_barrier() const;
  void check_consistency() const;
  void sync_ifo();

  ProblemSpec spec_;
  std::uint64_t master_seed_;
  std::vector<WorkerState> workers_;
  RoundAccounting accounting_;
  WorkerExecutor executor_;
  std::unique_ptr<TraceSink> trace_;
  std::uint64_t iteration_ = 0;
  bool initialized_ = false;
};

}  // namespace stormdist
