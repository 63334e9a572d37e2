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

#include <memory>
#include <optional>
#include <vector>

#include "turtlesmr/chain.hpp"
#include "turtlesmr/codec.hpp"
#include "turtlesmr/onestep.hpp"
#include "turtlesmr/quorum.hpp"
#include "turtlesmr/turtle.hpp"

namespace turtlesmr {

// x: the meet over the first-round quorum.
inline Chain lowerbound_round1_complete(const ReceivedChains& received, const QuorumSystem& system) {
  if (!system.is_quorum(senders_of(received)))
    throw UsageError("round 1 needs chains from a quorum");
  return meet_over(received, senders_of(received));
}

// d = min and u = max over the second-round chains, which must agree.
inline TurtleOutput lowerbound_round2_complete(InstanceId index, const ReceivedChains& received,
                                               const QuorumSystem& system) {
  if (!system.is_quorum(senders_of(received)))
    throw UsageError("round 2 needs chains from a quorum");
  std::vector<Chain> xs;
  for (const auto& [p, x] : received) xs.push_back(x);
  try {
    return TurtleOutput(index, min_agreeing(xs), max_agreeing(xs));
  } catch (const AgreementViolation&) {
    throw InvariantError("round-2 chains do not agree; quorum system lacks 2-intersection");
  }
}

// Two broadcast rounds. Requires only 2-intersection.
class LowerBoundTurtle final : public TurtleStateMachine {
 public:
  LowerBoundTurtle(std::shared_ptr<const QuorumSystem> system, ChainCodec codec)
      : system_(std::move(system)), codec_(std::move(codec)) {}

  TurtleActions start(const TurtleInput& input) override {
    if (started_) throw UsageError("turtle instance started twice");
    started_ = true;
    index_ = input.turtle_index;
    return {broadcast(round_tag::kProposal, input.chain)};
  }

  TurtleActions on_message(ProcessorId sender, std::uint8_t tag,
                           std::span<const std::uint8_t> payload) override {
    if (!started_) throw UsageError("message delivered to an unstarted turtle");
    if (done_) return {};
    if (tag != round_tag::kProposal && tag != round_tag::kSecond)
      return {Discard{sender, tag, "unexpected-round"}};
    ReceivedChains& slot = tag == round_tag::kProposal ? round1_ : round2_;
    if (slot.contains(sender)) return {};
    if (tag == round_tag::kProposal && x_) return {};
    std::optional<Chain> chain;
    try {
      ByteReader r(payload);
      chain = codec_.read(r);
      r.expect_done();
    } catch (const ParseError&) {
      return {Discard{sender, tag, "malformed"}};
    }
    if (!chain) return {Discard{sender, tag, "deferred"}};
    // Second-round chains that arrive early are kept in arrival order.
    if (tag == round_tag::kSecond) {
      round2_.emplace(sender, std::move(*chain));
      round2_order_.push_back(sender);
      return try_finish();
    }
    round1_.emplace(sender, std::move(*chain));
    if (!system_->is_quorum(senders_of(round1_))) return {};
    x_ = lowerbound_round1_complete(round1_, *system_);
    TurtleActions out{broadcast(round_tag::kSecond, *x_)};
    for (TurtleAction& a : try_finish()) out.push_back(std::move(a));
    return out;
  }

  bool started() const override { return started_; }
  bool done() const override { return done_; }
  const std::optional<Chain>& round1_result() const { return x_; }

 private:
  Broadcast broadcast(std::uint8_t tag, const Chain& c) const {
    ByteWriter w;
    codec_.write(w, c);
    return Broadcast{tag, share(w.take())};
  }

  // Q2 is the first quorum of second-round senders in arrival order.
  TurtleActions try_finish() {
    if (!x_) return {};
    ReceivedChains quorum;
    for (ProcessorId p : round2_order_) {
      quorum.emplace(p, round2_.at(p));
      if (system_->is_quorum(senders_of(quorum))) {
        done_ = true;
        return {ProduceOutput{lowerbound_round2_complete(index_, quorum, *system_)}};
      }
    }
    return {};
  }

  std::shared_ptr<const QuorumSystem> system_;
  ChainCodec codec_;
  InstanceId index_{0};
  ReceivedChains round1_;
  std::optional<Chain> x_;
  ReceivedChains round2_;
  std::vector<ProcessorId> round2_order_;
  bool started_{false};
  bool done_{false};
};

}  // namespace turtlesmr
