// SPDX-License-Identifier: Apache-2.0
#include "stormdist/runtime.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <string>

#include <tbb/parallel_for.h>
#include <tbb/task_arena.h>

#include "stormdist/errors.hpp"
#include "stormdist/rng.hpp"
#include "stormdist/schedule.hpp"

namespace stormdist {

namespace {

static_assert(std::endian::native == std::endian::little,
              "message encoding assumes a little-endian host");

template <typename T>
void put(std::vector<std::uint8_t>& out, T value) {
  std::uint8_t raw[sizeof(T)];
  std::memcpy(raw, &value, sizeof(T));
  out.insert(out.end(), raw, raw + sizeof(T));
}

template <typename T>
T get(std::span<const std::uint8_t> bytes, std::size_t offset) {
  T value;
  std::memcpy(&value, bytes.data() + offset, sizeof(T));
  return value;
}

std::string kind_name(MessageKind kind) {
  switch (kind) {
    case MessageKind::kGradNormUp:
      return "GRAD_NORM_UP";
    case MessageKind::kGbarDown:
      return "GBAR_DOWN";
    case MessageKind::kDirectionUp:
      return "DIRECTION_UP";
    case MessageKind::kDirectionDown:
      return "DIRECTION_DOWN";
    case MessageKind::kEtaDown:
      return "ETA_DOWN";
  }
  return "UNKNOWN(" + std::to_string(static_cast<std::uint32_t>(kind)) + ")";
}

}  // namespace

bool is_scalar_kind(MessageKind kind) noexcept {
  return kind == MessageKind::kGradNormUp || kind == MessageKind::kGbarDown ||
         kind == MessageKind::kEtaDown;
}

void validate_payload(const Message& msg, std::size_t dim) {
  const std::size_t expected = is_scalar_kind(msg.kind) ? 1 : dim;
  if (msg.payload.size() != expected) {
    throw ProtocolError(kind_name(msg.kind) + " from worker " + std::to_string(msg.worker_id) +
                        " in round " + std::to_string(msg.iteration) + " carries " +
                        std::to_string(msg.payload.size()) + " reals, expected " +
                        std::to_string(expected));
  }
}

std::vector<std::uint8_t> encode(const Message& msg) {
  std::vector<std::uint8_t> out;
  out.reserve(msg.byte_size());
  put(out, static_cast<std::uint32_t>(msg.kind));
  put(out, msg.worker_id);
  put(out, msg.iteration);
  for (double v : msg.payload) put(out, v);
  return out;
}

std::size_t decode(std::span<const std::uint8_t> bytes, std::size_t payload_len, Message& out) {
  const std::size_t total = kMessageHeaderBytes + 8 * payload_len;
  if (bytes.size() < total) throw ProtocolError("decode: truncated message");
  out.kind = static_cast<MessageKind>(get<std::uint32_t>(bytes, 0));
  out.worker_id = get<std::uint32_t>(bytes, 4);
  out.iteration = get<std::uint64_t>(bytes, 8);
  out.payload.resize(payload_len);
  for (std::size_t i = 0; i < payload_len; ++i) {
    out.payload[i] = get<double>(bytes, kMessageHeaderBytes + 8 * i);
  }
  return total;
}

TraceSink::TraceSink(const std::string& path) : out_(path, std::ios::binary | std::ios::trunc) {
  if (!out_) throw IoError("cannot open trace file: " + path);
}

void TraceSink::write(const Message& msg) {
  const auto bytes = encode(msg);
  out_.write(reinterpret_cast<const char*>(bytes.data()),
             static_cast<std::streamsize>(bytes.size()));
}

Reducer mean_reducer() {
  return [](std::span<const std::span<const double>> payloads) {
    std::vector<double> acc(payloads.front().size(), 0.0);
    for (const auto& p : payloads) {
      for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += p[i];
    }
    const auto n = static_cast<double>(payloads.size());
    for (auto& v : acc) v /= n;
    return acc;
  };
}

std::vector<double> gather_reduce(std::span<const Message> messages, std::size_t workers,
                                  MessageKind kind, std::uint64_t iteration,
                                  const Reducer& reducer, RoundAccounting& accounting,
                                  TraceSink* trace) {
  std::vector<const Message*> by_worker(workers, nullptr);
  for (const Message& m : messages) {
    if (m.kind != kind) {
      throw ProtocolError("round " + std::to_string(iteration) + ": expected " +
                          kind_name(kind) + " but worker " + std::to_string(m.worker_id) +
                          " sent " + kind_name(m.kind));
    }
    if (m.iteration != iteration) {
      throw ProtocolError("worker " + std::to_string(m.worker_id) + " sent round " +
                          std::to_string(m.iteration) + " during round " +
                          std::to_string(iteration));
    }
    if (m.worker_id >= workers) {
      throw ProtocolError("round " + std::to_string(iteration) + ": unknown worker " +
                          std::to_string(m.worker_id));
    }
    if (by_worker[m.worker_id] != nullptr) {
      throw ProtocolError("round " + std::to_string(iteration) + ": duplicate message from worker " +
                          std::to_string(m.worker_id));
    }
    by_worker[m.worker_id] = &m;
  }
  std::vector<std::span<const double>> payloads;
  payloads.reserve(workers);
  for (std::size_t k = 0; k < workers; ++k) {
    if (by_worker[k] == nullptr) {
      throw ProtocolError("round " + std::to_string(iteration) + ": missing message from worker " +
                          std::to_string(k));
    }
    if (by_worker[k]->payload.size() != by_worker[0]->payload.size()) {
      throw ProtocolError("round " + std::to_string(iteration) + ": worker " + std::to_string(k) +
                          " payload length differs");
    }
    payloads.emplace_back(by_worker[k]->payload);
    accounting.bytes_up += by_worker[k]->byte_size();
    if (trace) trace->write(*by_worker[k]);
  }
  return reducer(payloads);
}

std::vector<Message> broadcast(MessageKind kind, std::uint64_t iteration,
                               std::span<const double> payload, std::size_t workers,
                               RoundAccounting& accounting, TraceSink* trace) {
  for (double v : payload) {
    if (!std::isfinite(v)) throw ContractViolation("broadcast: non-finite payload");
  }
  std::vector<Message> out;
  out.reserve(workers);
  for (std::size_t k = 0; k < workers; ++k) {
    Message m{kind, static_cast<std::uint32_t>(k), iteration,
              std::vector<double>(payload.begin(), payload.end())};
    accounting.bytes_down += m.byte_size();
    if (trace) trace->write(m);
    out.push_back(std::move(m));
  }
  return out;
}

struct WorkerExecutor::Arena {
  explicit Arena(unsigned threads) : arena(static_cast<int>(threads)) {}
  tbb::task_arena arena;
};

WorkerExecutor::WorkerExecutor(unsigned threads) : threads_(std::max(1u, threads)) {
  if (threads_ > 1) arena_ = std::make_unique<Arena>(threads_);
}

WorkerExecutor::~WorkerExecutor() = default;

void WorkerExecutor::for_each(std::size_t count, const std::function<void(std::size_t)>& body) {
  if (!arena_ || count < 2) {
    for (std::size_t k = 0; k < count; ++k) body(k);
    return;
  }
  arena_->arena.execute([&] {
    tbb::parallel_for(std::size_t{0}, count, [&](std::size_t k) { body(k); });
  });
}

Cluster::Cluster(const ProblemSpec& spec, std::uint64_t master_seed, ClusterOptions options)
    : spec_(spec), master_seed_(master_seed), executor_(options.threads) {
  if (!options.trace_path.empty()) trace_ = std::make_unique<TraceSink>(options.trace_path);
  workers_.resize(spec_.workers);
  for (std::size_t k = 0; k < spec_.workers; ++k) {
    workers_[k].id = static_cast<std::uint32_t>(k);
    workers_[k].x = spec_.x_init;
  }
}

Cluster::~Cluster() = default;

void Cluster::initialize() {
  if (initialized_) throw ProtocolError("cluster already initialized");
  const std::size_t K = workers_.size();
  std::vector<Message> up(K);
  executor_.for_each(K, [&](std::size_t k) {
    WorkerState& w = workers_[k];
    const Sample s = draw_sample(spec_, master_seed_, k, 0);
    const ParamVector g = stoch_gradient(spec_, k, w.x, s);
    w.ifo += 1;
    w.dir = init_direction(g);
    up[k] = Message{MessageKind::kDirectionUp, w.id, 0, w.dir.direction.values()};
  });
  const auto d_bar =
      gather_reduce(up, K, MessageKind::kDirectionUp, 0, mean_reducer(), accounting_, trace_.get());
  const auto down = broadcast(MessageKind::kDirectionDown, 0, d_bar, K, accounting_, trace_.get());
  for (std::size_t k = 0; k < K; ++k) {
    validate_payload(down[k], spec_.dim);
    workers_[k].dir.direction = ParamVector(down[k].payload);
  }
  sync_ifo();
  check_consistency();
  initialized_ = true;
}

std::vector<double> Cluster::local_grad_norms(bool fresh_sample) {
  std::vector<double> norms(workers_.size());
  executor_.for_each(workers_.size(), [&](std::size_t k) {
    WorkerState& w = workers_[k];
    if (fresh_sample) {
      const Sample s =
          draw_sample(spec_, master_seed_, k, iteration_ + 1, streams::kStep5Offset);
      norms[k] = norm(stoch_gradient(spec_, k, w.x, s));
      w.ifo += 1;
    } else {
      norms[k] = norm(w.dir.cached_grad_new);
    }
  });
  sync_ifo();
  return norms;
}

double Cluster::exchange_grad_norms(std::span<const double> norms) {
  const std::size_t K = workers_.size();
  std::vector<Message> up;
  up.reserve(K);
  for (std::size_t k = 0; k < K; ++k) {
    up.push_back(Message{MessageKind::kGradNormUp, static_cast<std::uint32_t>(k), iteration_ + 1,
                         {norms[k]}});
    validate_payload(up.back(), spec_.dim);
  }
  const Reducer mean_sq = [K](std::span<const std::span<const double>> payloads) {
    std::vector<double> g(payloads.size());
    for (std::size_t k = 0; k < payloads.size(); ++k) g[k] = payloads[k][0];
    return std::vector<double>{aggregate_gradnorm(g, K)};
  };
  return gather_reduce(up, K, MessageKind::kGradNormUp, iteration_ + 1, mean_sq, accounting_,
                       trace_.get())
      .front();
}

double Cluster::broadcast_scalar(MessageKind kind, double value) {
  const double payload[1] = {value};
  const auto down =
      broadcast(kind, iteration_ + 1, payload, workers_.size(), accounting_, trace_.get());
  for (const auto& m : down) validate_payload(m, spec_.dim);
  return down.front().payload.front();
}

RoundSnapshot Cluster::run_round(const RoundHooks& hooks) {
  if (!initialized_) throw ProtocolError("run_round before initialize");
  check_barrier();
  const std::uint64_t t = iteration_ + 1;
  const std::size_t K = workers_.size();

  RoundSnapshot snap;
  snap.t = t;
  snap.x = x();
  snap.d_bar = d_bar();
  snap.step = hooks.decide_step(*this, t);
  const StepDecision step = snap.step;

  std::vector<Message> up(K);
  executor_.for_each(K, [&](std::size_t k) {
    WorkerState& w = workers_[k];
    ParamVector x_new = w.x;
    axpy(-step.eta, w.dir.direction, x_new);
    const Sample s = draw_sample(spec_, master_seed_, k, t);
    const ParamVector g_new = stoch_gradient(spec_, k, x_new, s);
    if (hooks.rule == DirectionRule::kStorm) {
      const ParamVector g_old = stoch_gradient(spec_, k, w.x, s);
      w.dir = update_direction(w.dir, g_new, g_old, step.a);
      w.ifo += 2;
    } else {
      const std::uint64_t it = w.dir.iteration;
      w.dir = init_direction(g_new);
      w.dir.iteration = it + 1;
      w.ifo += 1;
    }
    w.x = std::move(x_new);
    up[k] = Message{MessageKind::kDirectionUp, w.id, t, w.dir.direction.values()};
  });

  const auto d_next =
      gather_reduce(up, K, MessageKind::kDirectionUp, t, mean_reducer(), accounting_, trace_.get());
  const auto down = broadcast(MessageKind::kDirectionDown, t, d_next, K, accounting_, trace_.get());
  for (std::size_t k = 0; k < K; ++k) {
    validate_payload(down[k], spec_.dim);
    workers_[k].dir.direction = ParamVector(down[k].payload);
    workers_[k].iteration = t;
  }
  iteration_ = t;
  accounting_.rounds = t;
  sync_ifo();
  check_consistency();
  return snap;
}

void Cluster::check_barrier() const {
  for (const auto& w : workers_) {
    if (w.iteration != iteration_) {
      throw ProtocolError("worker " + std::to_string(w.id) + " is at round " +
                          std::to_string(w.iteration) + ", server at round " +
                          std::to_string(iteration_));
    }
  }
}

void Cluster::check_consistency() const {
  const WorkerState& ref = workers_.front();
  for (const auto& w : workers_) {
    if (!w.x.bitwise_equal(ref.x) || !w.dir.direction.bitwise_equal(ref.dir.direction)) {
      throw ProtocolError("worker " + std::to_string(w.id) + " diverged from worker 0 after round " +
                          std::to_string(iteration_));
    }
  }
}

void Cluster::sync_ifo() {
  const std::uint64_t ifo = workers_.front().ifo;
  for (const auto& w : workers_) {
    if (w.ifo != ifo) throw ProtocolError("oracle counters differ across workers");
  }
  accounting_.ifo_per_worker = ifo;
}

}  // namespace stormdist
