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

#include <map>
#include <memory>
#include <set>
#include <vector>

#include "turtlesmr/chain.hpp"
#include "turtlesmr/codec.hpp"
#include "turtlesmr/quorum.hpp"
#include "turtlesmr/turtle.hpp"

namespace turtlesmr {

// Chains received in the first round, keyed by sender.
using ReceivedChains = std::map<ProcessorId, Chain>;

inline ProcessorSet senders_of(const ReceivedChains& received) {
  ProcessorSet s;
  for (const auto& [p, c] : received) s.insert(p);
  return s;
}

inline Chain meet_over(const ReceivedChains& received, ProcessorSet subset) {
  std::vector<Chain> chains;
  for (const auto& [p, c] : received)
    if (subset.contains(p)) chains.push_back(c);
  if (chains.empty()) throw InvariantError("meet over an empty quorum intersection");
  return meet(chains);
}

// Elements of C_p computed literally: the meet over Q_p ∩ Q_1 ∩ ... ∩ Q_depth
// for every depth-tuple of quorums (every quorum, not only minimal ones).
// Exponential in n; used as the reference for the threshold shortcut.
inline std::vector<Chain> intersection_meets_literal(const ReceivedChains& received,
                                                     const QuorumSystem& system, int depth) {
  if (system.n() > kMaxEnumerableProcessors)
    throw CapacityError("literal quorum enumeration is limited to n <= 12");
  std::vector<ProcessorSet> quorums;
  const std::uint64_t limit = std::uint64_t{1} << system.n();
  for (std::uint64_t bits = 0; bits < limit; ++bits)
    if (system.is_quorum(ProcessorSet(bits))) quorums.push_back(ProcessorSet(bits));

  std::set<std::uint64_t> frontier{senders_of(received).bits()};
  for (int d = 0; d < depth; ++d) {
    std::set<std::uint64_t> next;
    for (std::uint64_t bits : frontier)
      for (ProcessorSet q : quorums) next.insert(bits & q.bits());
    frontier = std::move(next);
  }
  std::vector<Chain> out;
  for (std::uint64_t bits : frontier) out.push_back(meet_over(received, ProcessorSet(bits)));
  return out;
}

// Threshold shortcut for C_p. A threshold quorum misses at most f processors,
// so the intersections are exactly the subsets of Q_p with at least
// |Q_p| - depth*f members. Meets only grow as subsets shrink, so the
// smallest subsets carry every maximal candidate and every disagreement.
inline std::vector<Chain> intersection_meets(const ReceivedChains& received,
                                             const QuorumSystem& system, int depth) {
  if (system.kind() != QuorumKind::kThreshold)
    return intersection_meets_literal(received, system, depth);
  const ProcessorSet qp = senders_of(received);
  const int size = qp.size() - depth * system.f();
  if (size < 1) throw InvariantError("quorum intersections can be empty; k is too small");
  std::vector<Chain> out;
  for_each_subset_of_size(qp, size,
                          [&](ProcessorSet s) { out.push_back(meet_over(received, s)); });
  return out;
}

enum class CandidateResolution {
  kStrict,            // C_p must be totally ordered; anything else is an invariant error
  kLongestUnchecked,  // take a longest element without checking (misconfiguration demos only)
};

inline Chain resolve_upper(std::span<const Chain> candidates, CandidateResolution resolution) {
  if (resolution == CandidateResolution::kLongestUnchecked) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < candidates.size(); ++i)
      if (candidates[i].size() > candidates[best].size()) best = i;
    return candidates[best];
  }
  try {
    return max_agreeing(candidates);
  } catch (const AgreementViolation&) {
    throw InvariantError("intersection meets do not agree; quorum system lacks the required intersection");
  }
}

// d is the meet over Q_p; u is the maximum of the intersection meets.
inline TurtleOutput compute_onestep_output(InstanceId index, const ReceivedChains& received,
                                           const QuorumSystem& system, int depth = 1,
                                           CandidateResolution resolution = CandidateResolution::kStrict) {
  if (!system.is_quorum(senders_of(received)))
    throw UsageError("one-step output needs chains from a quorum");
  std::vector<Chain> all;
  for (const auto& [p, c] : received) all.push_back(c);
  Chain d = meet(all);
  std::vector<Chain> candidates = intersection_meets(received, system, depth);
  Chain u = resolve_upper(candidates, resolution);
  return TurtleOutput(index, std::move(d), std::move(u));
}

// Single broadcast round. Requires 3-intersection.
class OneStepTurtle final : public TurtleStateMachine {
 public:
  OneStepTurtle(std::shared_ptr<const QuorumSystem> system, ChainCodec codec,
                CandidateResolution resolution = CandidateResolution::kStrict)
      : system_(std::move(system)), codec_(std::move(codec)), resolution_(resolution) {}

  TurtleActions start(const TurtleInput& input) override {
    if (started_) throw UsageError("turtle instance started twice");
    started_ = true;
    index_ = input.turtle_index;
    ByteWriter w;
    codec_.write(w, input.chain);
    return {Broadcast{round_tag::kProposal, share(w.take())}};
  }

  TurtleActions on_message(ProcessorId sender, std::uint8_t tag,
                           std::span<const std::uint8_t> payload) override {
    if (!started_) throw UsageError("message delivered to an unstarted turtle");
    if (done_) return {};
    if (tag != round_tag::kProposal) return {Discard{sender, tag, "unexpected-round"}};
    if (received_.contains(sender)) return {};
    std::optional<Chain> chain;
    try {
      ByteReader r(payload);
      chain = codec_.read(r);
      r.expect_done();
    } catch (const ParseError&) {
      return {Discard{sender, tag, "malformed"}};
    }
    if (!chain) return {Discard{sender, tag, "deferred"}};
    received_.emplace(sender, std::move(*chain));
    if (!system_->is_quorum(senders_of(received_))) return {};
    done_ = true;
    return {ProduceOutput{compute_onestep_output(index_, received_, *system_, 1, resolution_)}};
  }

  bool started() const override { return started_; }
  bool done() const override { return done_; }
  const ReceivedChains& received() const { return received_; }

 private:
  std::shared_ptr<const QuorumSystem> system_;
  ChainCodec codec_;
  CandidateResolution resolution_;
  InstanceId index_{0};
  ReceivedChains received_;
  bool started_{false};
  bool done_{false};
};

}  // namespace turtlesmr
