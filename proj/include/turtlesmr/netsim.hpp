// Copyright 2026 The turtlesmr Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <queue>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "turtlesmr/codec.hpp"
#include "turtlesmr/quorum.hpp"
#include "turtlesmr/trace.hpp"

namespace turtlesmr {

using SimTime = std::int64_t;
using TimerId = std::uint64_t;

inline constexpr SimTime kTimeCap = SimTime{1} << 62;

inline SimTime saturating_add(SimTime a, SimTime b) {
  return a > kTimeCap - b ? kTimeCap : a + b;
}

// Deterministic RNG. mt19937_64 is bit-exact across standard libraries; the
// distributions below are written out so their output is too.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  std::uint64_t next() { return gen_(); }

  // Uniform integer in [lo, hi].
  std::int64_t uniform(std::int64_t lo, std::int64_t hi) {
    const std::uint64_t span = static_cast<std::uint64_t>(hi - lo) + 1;
    if (span == 0) return static_cast<std::int64_t>(next());
    const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % span);
    std::uint64_t v;
    do {
      v = next();
    } while (v >= limit);
    return lo + static_cast<std::int64_t>(v % span);
  }

  // Uniform double in (0, 1].
  double unit() { return static_cast<double>((next() >> 11) + 1) * 0x1.0p-53; }

  bool chance(double p) { return unit() <= p; }

 private:
  std::mt19937_64 gen_;
};

// Pareto-tailed integer delay: 1 + min(cap, floor(scale * (U^(-1/alpha) - 1))).
struct AsyncDelays {
  SimTime scale{5};
  double alpha{1.5};
  SimTime cap{1000};

  static AsyncDelays reorder_heavy() { return {20, 1.1, 5000}; }
};

struct SyncMode {
  enum class Kind { kAsync, kPartial };

  Kind kind{Kind::kAsync};
  AsyncDelays async;  // also used before GST in partial mode
  SimTime gst{0};
  SimTime delta{5};

  static SyncMode asynchronous(AsyncDelays d = {}) { return {Kind::kAsync, d, 0, 0}; }
  static SyncMode partial(SimTime gst, SimTime delta, AsyncDelays d = {}) { return {Kind::kPartial, d, gst, delta}; }
};

inline SimTime async_delay(const AsyncDelays& d, Rng& rng) {
  const double tail = std::pow(rng.unit(), -1.0 / d.alpha) - 1.0;
  const double scaled = std::floor(static_cast<double>(d.scale) * tail);
  const SimTime extra = scaled >= static_cast<double>(d.cap) ? d.cap : static_cast<SimTime>(scaled);
  return 1 + extra;
}

// Arrival time of a message sent at `sent` to another processor. Always
// finite; in partial synchrony never later than max(sent, gst) + delta.
inline SimTime deliver_policy(SimTime sent, const SyncMode& mode, Rng& rng) {
  if (mode.kind == SyncMode::Kind::kAsync) return sent + async_delay(mode.async, rng);
  if (sent >= mode.gst) return sent + rng.uniform(1, mode.delta);
  const SimTime bound = mode.gst + mode.delta;
  return std::min(sent + async_delay(mode.async, rng), bound);
}

// A message in flight. The payload is shared between all recipients of a
// broadcast.
struct Packet {
  std::uint64_t id{0};
  ProcessorId from;
  ProcessorId to;
  std::uint64_t instance{0};
  std::uint8_t round_tag{0};
  std::shared_ptr<const Bytes> payload;
  std::uint64_t digest{0};
};

// Digest of the envelope encoding without materializing it.
inline std::uint64_t envelope_digest(std::uint64_t instance, std::uint8_t round_tag, std::uint16_t sender,
                                     std::span<const std::uint8_t> payload) {
  ByteWriter w;
  w.u64(instance);
  w.u8(round_tag);
  w.u16(sender);
  w.u32(static_cast<std::uint32_t>(payload.size()));
  Fnv1a h;
  h.update(w.view());
  h.update(payload);
  return h.digest();
}

class NodeContext {
 public:
  virtual ~NodeContext() = default;

  virtual SimTime now() const = 0;
  virtual ProcessorId self() const = 0;
  virtual int n() const = 0;
  virtual void send(ProcessorId to, std::uint64_t instance, std::uint8_t round_tag,
                    std::shared_ptr<const Bytes> payload) = 0;
  // To every processor, including the sender.
  virtual void broadcast(std::uint64_t instance, std::uint8_t round_tag, std::shared_ptr<const Bytes> payload) {
    for (int p = 0; p < n(); ++p) send(ProcessorId{static_cast<std::uint16_t>(p)}, instance, round_tag, payload);
  }
  virtual TimerId set_timer(SimTime delay) = 0;
  // The simulator fills in t, seq and proc.
  virtual void record(TraceEvent e) = 0;
};

class Node {
 public:
  virtual ~Node() = default;

  virtual void on_start(NodeContext& ctx) = 0;
  virtual void on_message(NodeContext& ctx, const Packet& packet) = 0;
  virtual void on_timer(NodeContext& ctx, TimerId timer) = 0;
};

struct FaultPlan {
  std::map<int, SimTime> crashes;
  std::map<int, std::string> byzantine;  // strategy names

  int faulty() const { return static_cast<int>(crashes.size() + byzantine.size()); }
};

struct RunStatus {
  bool quiescent{false};
  bool truncated{false};
  std::uint64_t events{0};
  SimTime end_time{0};
};

// Discrete-event loop. Events run in (time, scheduling sequence) order on
// one thread; identical inputs give identical traces.
class Simulator {
 public:
  Simulator(int n, SyncMode mode, std::map<int, SimTime> crashes, std::uint64_t seed, std::uint64_t max_events,
            std::vector<std::unique_ptr<Node>> nodes, Trace& trace)
      : n_(n),
        mode_(mode),
        crashes_(std::move(crashes)),
        rng_(seed),
        max_events_(max_events),
        nodes_(std::move(nodes)),
        crashed_(static_cast<std::size_t>(n), false),
        trace_(trace) {
    if (static_cast<int>(nodes_.size()) != n) throw UsageError("one node per processor");
  }

  RunStatus run() {
    for (const auto& [p, t] : crashes_) push(t, Event{Event::Kind::kCrash, ProcessorId{static_cast<std::uint16_t>(p)}});
    for (int p = 0; p < n_; ++p) push(0, Event{Event::Kind::kStart, ProcessorId{static_cast<std::uint16_t>(p)}});
    RunStatus status;
    while (!queue_.empty()) {
      if (status.events >= max_events_) {
        status.truncated = true;
        break;
      }
      Queued q = queue_.top();
      queue_.pop();
      now_ = q.time;
      ++status.events;
      dispatch(q.event);
    }
    status.quiescent = queue_.empty();
    status.end_time = now_;
    return status;
  }

  bool crashed(ProcessorId p) const { return crashed_[p.index]; }
  SimTime now() const { return now_; }

 private:
  struct Event {
    enum class Kind { kStart, kDeliver, kTimer, kCrash };
    Kind kind;
    ProcessorId proc;
    Packet packet{};
    TimerId timer{0};
  };
  struct Queued {
    SimTime time;
    std::uint64_t seq;
    Event event;
  };
  struct Later {
    bool operator()(const Queued& a, const Queued& b) const {
      return a.time != b.time ? a.time > b.time : a.seq > b.seq;
    }
  };

  class Context final : public NodeContext {
   public:
    Context(Simulator& sim, ProcessorId self) : sim_(sim), self_(self) {}
    SimTime now() const override { return sim_.now_; }
    ProcessorId self() const override { return self_; }
    int n() const override { return sim_.n_; }
    void send(ProcessorId to, std::uint64_t instance, std::uint8_t tag, std::shared_ptr<const Bytes> payload) override {
      sim_.send(self_, to, instance, tag, std::move(payload));
    }
    void broadcast(std::uint64_t instance, std::uint8_t tag, std::shared_ptr<const Bytes> payload) override {
      const std::uint64_t digest = envelope_digest(instance, tag, self_.index, *payload);
      for (int p = 0; p < sim_.n_; ++p)
        sim_.send(self_, ProcessorId{static_cast<std::uint16_t>(p)}, instance, tag, payload, digest);
    }
    TimerId set_timer(SimTime delay) override { return sim_.set_timer(self_, delay); }
    void record(TraceEvent e) override {
      e.proc = self_.index;
      sim_.record(std::move(e));
    }

   private:
    Simulator& sim_;
    ProcessorId self_;
  };

  void push(SimTime t, Event e) { queue_.push(Queued{t, next_seq_++, std::move(e)}); }

  void record(TraceEvent e) {
    e.t = now_;
    e.seq = trace_.size();
    trace_.push_back(std::move(e));
  }

  void send(ProcessorId from, ProcessorId to, std::uint64_t instance, std::uint8_t tag,
            std::shared_ptr<const Bytes> payload, std::optional<std::uint64_t> digest = std::nullopt) {
    if (to.index >= n_) throw UsageError("send to unknown processor");
    Packet p{next_msg_++, from, to, instance, tag, std::move(payload), 0};
    p.digest = digest ? *digest : envelope_digest(instance, tag, from.index, *p.payload);
    TraceEvent e;
    e.kind = EventKind::kSend;
    e.proc = from.index;
    e.peer = to.index;
    e.msg = p.id;
    e.instance = instance;
    e.round = tag;
    e.payload_digest = p.digest;
    record(std::move(e));
    const SimTime at = from == to ? now_ : deliver_policy(now_, mode_, rng_);
    push(at, Event{Event::Kind::kDeliver, to, std::move(p)});
  }

  TimerId set_timer(ProcessorId who, SimTime delay) {
    const TimerId id = next_timer_++;
    Event e{Event::Kind::kTimer, who};
    e.timer = id;
    push(saturating_add(now_, delay), std::move(e));
    return id;
  }

  void dispatch(Event& e) {
    const auto idx = e.proc.index;
    switch (e.kind) {
      case Event::Kind::kCrash: {
        if (crashed_[idx]) return;
        crashed_[idx] = true;
        TraceEvent t;
        t.kind = EventKind::kCrash;
        t.proc = idx;
        record(std::move(t));
        return;
      }
      case Event::Kind::kStart: {
        if (crashed_[idx]) return;
        Context ctx(*this, e.proc);
        nodes_[idx]->on_start(ctx);
        return;
      }
      case Event::Kind::kTimer: {
        if (crashed_[idx]) return;
        Context ctx(*this, e.proc);
        nodes_[idx]->on_timer(ctx, e.timer);
        return;
      }
      case Event::Kind::kDeliver: {
        TraceEvent t;
        t.kind = crashed_[idx] ? EventKind::kDrop : EventKind::kDeliver;
        t.proc = idx;
        t.peer = e.packet.from.index;
        t.msg = e.packet.id;
        t.payload_digest = e.packet.digest;
        record(std::move(t));
        if (crashed_[idx]) return;
        Context ctx(*this, e.proc);
        nodes_[idx]->on_message(ctx, e.packet);
        return;
      }
    }
  }

  int n_;
  SyncMode mode_;
  std::map<int, SimTime> crashes_;
  Rng rng_;
  std::uint64_t max_events_;
  std::vector<std::unique_ptr<Node>> nodes_;
  std::vector<bool> crashed_;
  Trace& trace_;
  std::priority_queue<Queued, std::vector<Queued>, Later> queue_;
  SimTime now_{0};
  std::uint64_t next_seq_{0};
  std::uint64_t next_msg_{0};
  TimerId next_timer_{0};
};

}  // namespace turtlesmr
