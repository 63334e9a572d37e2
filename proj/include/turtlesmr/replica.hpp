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

#include <deque>
#include <map>
#include <memory>
#include <optional>
#include <utility>
#include <variant>
#include <vector>

#include "turtlesmr/bft.hpp"
#include "turtlesmr/leader.hpp"
#include "turtlesmr/lowerbound.hpp"
#include "turtlesmr/netsim.hpp"
#include "turtlesmr/onestep.hpp"
#include "turtlesmr/smr.hpp"
#include "turtlesmr/trace.hpp"

namespace turtlesmr {

struct ReplicaConfig {
  std::shared_ptr<const QuorumSystem> system;
  TurtleSchedule schedule = TurtleSchedule::single(TurtleKind::kOneStep);
  LeaderConfig leader;
  InstanceId instances{10};
  CodecMode codec{CodecMode::kRelative};
  int arrivals{1};
  int batch_max{8};
  WorkloadMode workload{WorkloadMode::kMixed};
  std::shared_ptr<SignatureLedger> ledger;  // Byzantine schedules only
  ProcessorSet traced_accepts;              // senders whose accepted inputs are logged
  CandidateResolution resolution{CandidateResolution::kStrict};
};

// One honest processor: runs instances 1..instances back to back, with the
// optional leader wait in front of each.
class Replica final : public Node {
 public:
  Replica(ReplicaConfig cfg, ProcessorId self)
      : cfg_(std::move(cfg)), self_(self), source_(std::make_shared<WorkloadSource>(self.index, cfg_.arrivals, cfg_.batch_max, cfg_.workload)) {
    if (cfg_.schedule.bft()) {
      if (!cfg_.ledger) throw UsageError("Byzantine schedules need a signature ledger");
      bft_engine_.emplace(source_);
    } else {
      engine_.emplace(source_);
    }
  }

  void on_start(NodeContext& ctx) override {
    if (bft_engine_) {
      BftInput in = bft_engine_->first_input();
      enter(ctx, 1, std::move(in.chain), std::move(in.evidence));
    } else {
      TurtleInput in = engine_->first_input();
      enter(ctx, 1, std::move(in.chain), BftOutput::genesis());
    }
    pump(ctx);
  }

  void on_message(NodeContext& ctx, const Packet& packet) override {
    inbox_.push_back(packet);
    pump(ctx);
  }

  void on_timer(NodeContext& ctx, TimerId id) override {
    if (!phase_ || !timer_ || *timer_ != id) return;
    auto decision = phase_->on_timeout();
    if (!decision) return;
    record(ctx, EventKind::kTimerExpire);
    start_turtle(ctx, decision->input);
    pump(ctx);
  }

  InstanceId current_instance() const { return current_; }
  bool finished() const { return finished_; }
  const std::vector<Decision>& decision_log() const {
    return bft_engine_ ? bft_engine_->decision_log() : engine_->decision_log();
  }
  // Codec state for the running instance.
  const ChainCodec& codec() const { return codec_; }

 private:
  struct Running {
    std::unique_ptr<TurtleStateMachine> crash;
    std::unique_ptr<BftTurtleStateMachine> bft;
  };

  void record(NodeContext& ctx, EventKind kind, std::optional<Chain> chain = std::nullopt) {
    TraceEvent e;
    e.kind = kind;
    e.instance = current_;
    e.chain = std::move(chain);
    ctx.record(std::move(e));
  }

  void enter(NodeContext& ctx, InstanceId instance, Chain own, BftOutput evidence) {
    current_ = instance;
    turtle_ = Running{};
    phase_.reset();
    timer_.reset();
    evidence_ = std::move(evidence);
    if (instance > cfg_.instances) {
      finished_ = true;
      buffer_.clear();
      return;
    }
    codec_ = ChainCodec{cfg_.codec, prev_decided_, prev_upper_};
    if (!cfg_.leader.enabled) {
      start_turtle(ctx, own);
    } else if (leader_for(instance, ctx.n()) == self_) {
      ByteWriter w;
      codec_.write(w, own);
      ctx.broadcast(instance, round_tag::kLeaderPropose, share(w.take()));
      record(ctx, EventKind::kLeaderPropose, own);
      start_turtle(ctx, own);
    } else {
      phase_.emplace(instance, prev_upper_, own);
      timer_ = ctx.set_timer(leader_timer(instance, cfg_.leader.t0));
    }
    release_buffered();
  }

  // Messages held back for the running instance go first, in arrival order.
  void release_buffered() {
    auto it = buffer_.find(current_);
    if (it == buffer_.end()) return;
    for (auto p = it->second.rbegin(); p != it->second.rend(); ++p) inbox_.push_front(std::move(*p));
    buffer_.erase(it);
  }

  void start_turtle(NodeContext& ctx, const Chain& input) {
    const TurtleKind kind = cfg_.schedule.kind_of(current_);
    TraceEvent e;
    e.kind = EventKind::kPropose;
    e.instance = current_;
    e.chain = input;
    if (is_bft(kind)) {
      e.ev_instance = evidence_.turtle_index;
      e.ev_decided = evidence_.decided;
      e.ev_upper = evidence_.upper;
    }
    ctx.record(std::move(e));
    if (is_bft(kind)) {
      auto schedule = cfg_.schedule;
      BftContext bctx{cfg_.system, Signer(cfg_.ledger, self_), codec_,
                      [schedule](InstanceId i) { return schedule.kind_of(i); }};
      if (kind == TurtleKind::kBftOneStep)
        turtle_.bft = std::make_unique<BftOneStepTurtle>(std::move(bctx));
      else
        turtle_.bft = std::make_unique<BftLowerBoundTurtle>(std::move(bctx));
      apply(ctx, turtle_.bft->start(BftInput{current_, input, evidence_}));
    } else {
      if (kind == TurtleKind::kOneStep)
        turtle_.crash = std::make_unique<OneStepTurtle>(cfg_.system, codec_, cfg_.resolution);
      else
        turtle_.crash = std::make_unique<LowerBoundTurtle>(cfg_.system, codec_);
      apply(ctx, turtle_.crash->start(TurtleInput{current_, input}));
    }
    release_buffered();
  }

  bool turtle_started() const { return turtle_.crash || turtle_.bft; }

  // Handles queued deliveries one at a time; an output may move the replica
  // to the next instance and release buffered messages into the queue.
  void pump(NodeContext& ctx) {
    while (!inbox_.empty()) {
      Packet p = std::move(inbox_.front());
      inbox_.pop_front();
      if (finished_ || p.instance < current_) continue;
      if (p.instance > current_) {
        if (p.instance <= cfg_.instances) buffer_[p.instance].push_back(std::move(p));
        continue;
      }
      if (p.round_tag == round_tag::kLeaderPropose) {
        on_leader_message(ctx, p);
        continue;
      }
      if (!turtle_started()) {
        buffer_[p.instance].push_back(std::move(p));
        continue;
      }
      if (turtle_.bft)
        apply(ctx, turtle_.bft->on_message(p.from, p.round_tag, *p.payload));
      else
        apply(ctx, turtle_.crash->on_message(p.from, p.round_tag, *p.payload));
    }
  }

  void on_leader_message(NodeContext& ctx, const Packet& p) {
    if (!phase_ || p.from != leader_for(current_, ctx.n())) return;
    std::optional<Chain> chain;
    try {
      ByteReader r(*p.payload);
      chain = codec_.read(r);
      r.expect_done();
    } catch (const ParseError&) {
      chain.reset();
    }
    if (!chain) {
      discard(ctx, Discard{p.from, p.round_tag, reason::kMalformed});
      return;
    }
    auto decision = phase_->on_leader_message(*chain);
    if (!decision) return;
    if (decision->outcome == LeaderPhase::Outcome::kAdopted) {
      TraceEvent e;
      e.kind = EventKind::kAdopt;
      e.instance = current_;
      e.peer = p.from.index;
      ctx.record(std::move(e));
    }
    start_turtle(ctx, decision->input);
  }

  void discard(NodeContext& ctx, const Discard& d) {
    TraceEvent e;
    e.kind = EventKind::kDiscard;
    e.instance = current_;
    e.peer = d.sender.index;
    e.round = d.round_tag;
    e.reason = d.reason;
    ctx.record(std::move(e));
  }

  void apply(NodeContext& ctx, TurtleActions actions) {
    for (TurtleAction& a : actions) {
      if (auto* b = std::get_if<Broadcast>(&a)) {
        ctx.broadcast(current_, b->round_tag, b->payload);
      } else if (auto* d = std::get_if<Discard>(&a)) {
        discard(ctx, *d);
      } else if (auto* o = std::get_if<ProduceOutput>(&a)) {
        finish_crash(ctx, o->output);
        return;
      }
    }
  }

  void apply(NodeContext& ctx, BftActions actions) {
    for (BftAction& a : actions) {
      if (auto* b = std::get_if<Broadcast>(&a)) {
        ctx.broadcast(current_, b->round_tag, b->payload);
      } else if (auto* d = std::get_if<Discard>(&a)) {
        discard(ctx, *d);
      } else if (auto* acc = std::get_if<AcceptInput>(&a)) {
        if (!cfg_.traced_accepts.contains(acc->sender)) continue;
        TraceEvent e;
        e.kind = EventKind::kAccept;
        e.instance = current_;
        e.peer = acc->sender.index;
        e.chain = acc->input.chain;
        e.ev_instance = acc->input.evidence.turtle_index;
        e.ev_decided = acc->input.evidence.decided;
        e.ev_upper = acc->input.evidence.upper;
        ctx.record(std::move(e));
      } else if (auto* o = std::get_if<ProduceBftOutput>(&a)) {
        finish_bft(ctx, o->output);
        return;
      }
    }
  }

  void record_output(NodeContext& ctx, const Chain& d, const Chain& u) {
    TraceEvent e;
    e.kind = EventKind::kOutput;
    e.instance = current_;
    e.chain = d;
    e.upper = u;
    ctx.record(std::move(e));
  }

  void finish_crash(NodeContext& ctx, const TurtleOutput& out) {
    record_output(ctx, out.decided(), out.upper());
    SmrEngine::Step step = engine_->on_turtle_output(out);
    record(ctx, EventKind::kDecide, step.decision);
    prev_decided_ = out.decided();
    prev_upper_ = out.upper();
    enter(ctx, step.next.turtle_index, std::move(step.next.chain), BftOutput::genesis());
  }

  void finish_bft(NodeContext& ctx, const BftOutput& out) {
    record_output(ctx, out.decided, out.upper);
    BftSmrEngine::Step step = bft_engine_->on_turtle_output(out);
    if (step.decision) record(ctx, EventKind::kDecide, *step.decision);
    prev_decided_ = out.decided;
    prev_upper_ = out.upper;
    enter(ctx, step.next.turtle_index, std::move(step.next.chain), std::move(step.next.evidence));
  }

  ReplicaConfig cfg_;
  ProcessorId self_;
  std::shared_ptr<WorkloadSource> source_;
  std::optional<SmrEngine> engine_;
  std::optional<BftSmrEngine> bft_engine_;

  InstanceId current_{0};
  bool finished_{false};
  Chain prev_decided_;
  Chain prev_upper_;
  BftOutput evidence_;
  ChainCodec codec_;
  Running turtle_;
  std::optional<LeaderPhase> phase_;
  std::optional<TimerId> timer_;
  std::deque<Packet> inbox_;
  std::map<InstanceId, std::vector<Packet>> buffer_;
};

}  // namespace turtlesmr
