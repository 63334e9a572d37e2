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

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "turtlesmr/chain.hpp"
#include "turtlesmr/lowerbound.hpp"
#include "turtlesmr/onestep.hpp"
#include "turtlesmr/quorum.hpp"
#include "turtlesmr/turtle.hpp"

namespace turtlesmr {

// Small chain universe for exhaustive runs: ⊥, [a], [a,b], [a,c], [b].
inline std::vector<Chain> small_chain_universe() {
  const Command a{{1, 0}, "a"};
  const Command b{{1, 1}, "b"};
  const Command c{{1, 2}, "c"};
  return {Chain{}, Chain{a}, Chain{a, b}, Chain{a, c}, Chain{b}};
}

// One exhaustively explored execution of a single turtle instance.
struct Execution {
  std::vector<TurtleInput> inputs;
  std::vector<TurtleOutput> outputs;
  std::vector<ProcessorSet> first_quorums;   // per processor
  std::vector<ProcessorSet> second_quorums;  // Lower-Bound only
  std::vector<std::optional<Chain>> round1;  // Lower-Bound x values
};

struct ExploreStats {
  std::uint64_t schedules{0};
  std::uint64_t violations{0};
  std::optional<Execution> first_violation;
};

namespace detail {

inline std::shared_ptr<const Bytes> encode_full(const Chain& c) {
  ByteWriter w;
  ChainCodec{CodecMode::kFull, {}, {}}.write(w, c);
  return share(w.take());
}

// Mixed-radix counter over `radices`.
inline bool next_index(std::vector<std::size_t>& idx, const std::vector<std::size_t>& radices) {
  for (std::size_t i = 0; i < idx.size(); ++i) {
    if (++idx[i] < radices[i]) return true;
    idx[i] = 0;
  }
  return false;
}

}  // namespace detail

// Every input assignment from `universe` times every choice of the quorum
// each processor hears from first. Because a One-Step processor's output
// depends only on its first quorum, this covers every reachable output
// combination. `check` returns false on a violation.
inline ExploreStats explore_onestep(const QuorumSystem& system, const std::vector<Chain>& universe,
                                    CandidateResolution resolution,
                                    const std::function<bool(const Execution&)>& check) {
  const int n = system.n();
  auto shared_system = std::shared_ptr<const QuorumSystem>(&system, [](const QuorumSystem*) {});
  const auto quorums = system.minimal_quorums();
  ExploreStats stats;
  std::vector<std::size_t> in_idx(static_cast<std::size_t>(n), 0), in_radix(static_cast<std::size_t>(n), universe.size());
  do {
    std::vector<std::size_t> q_idx(static_cast<std::size_t>(n), 0), q_radix(static_cast<std::size_t>(n), quorums.size());
    do {
      Execution ex;
      std::vector<std::shared_ptr<const Bytes>> payloads;
      for (int p = 0; p < n; ++p) {
        ex.inputs.push_back(TurtleInput{1, universe[in_idx[static_cast<std::size_t>(p)]]});
        payloads.push_back(detail::encode_full(ex.inputs.back().chain));
      }
      for (int p = 0; p < n; ++p) {
        OneStepTurtle t(shared_system, ChainCodec{CodecMode::kFull, {}, {}}, resolution);
        t.start(ex.inputs[static_cast<std::size_t>(p)]);
        const ProcessorSet q = quorums[q_idx[static_cast<std::size_t>(p)]];
        ex.first_quorums.push_back(q);
        for (ProcessorId s : q.members())
          for (TurtleAction& a : t.on_message(s, round_tag::kProposal, *payloads[s.index]))
            if (auto* o = std::get_if<ProduceOutput>(&a)) ex.outputs.push_back(o->output);
      }
      ++stats.schedules;
      if (!check(ex)) {
        ++stats.violations;
        if (!stats.first_violation) stats.first_violation = ex;
      }
    } while (detail::next_index(q_idx, q_radix));
  } while (detail::next_index(in_idx, in_radix));
  return stats;
}

// Lower-Bound: inputs times each processor's (first-round quorum,
// second-round quorum) pair.
inline ExploreStats explore_lowerbound(const QuorumSystem& system, const std::vector<Chain>& universe,
                                       const std::function<bool(const Execution&)>& check) {
  const int n = system.n();
  auto shared_system = std::shared_ptr<const QuorumSystem>(&system, [](const QuorumSystem*) {});
  const auto quorums = system.minimal_quorums();
  const std::size_t nq = quorums.size();
  ExploreStats stats;
  std::vector<std::size_t> in_idx(static_cast<std::size_t>(n), 0), in_radix(static_cast<std::size_t>(n), universe.size());
  do {
    std::vector<std::size_t> q_idx(static_cast<std::size_t>(2 * n), 0), q_radix(static_cast<std::size_t>(2 * n), nq);
    do {
      Execution ex;
      std::vector<std::shared_ptr<const Bytes>> payloads;
      std::vector<std::unique_ptr<LowerBoundTurtle>> turtles;
      std::vector<std::shared_ptr<const Bytes>> second(static_cast<std::size_t>(n));
      for (int p = 0; p < n; ++p) {
        ex.inputs.push_back(TurtleInput{1, universe[in_idx[static_cast<std::size_t>(p)]]});
        payloads.push_back(detail::encode_full(ex.inputs.back().chain));
        turtles.push_back(std::make_unique<LowerBoundTurtle>(shared_system, ChainCodec{CodecMode::kFull, {}, {}}));
        turtles.back()->start(ex.inputs.back());
      }
      for (int p = 0; p < n; ++p) {
        const ProcessorSet q1 = quorums[q_idx[static_cast<std::size_t>(p)]];
        ex.first_quorums.push_back(q1);
        for (ProcessorId s : q1.members())
          for (TurtleAction& a : turtles[static_cast<std::size_t>(p)]->on_message(s, round_tag::kProposal, *payloads[s.index]))
            if (auto* b = std::get_if<Broadcast>(&a)) second[static_cast<std::size_t>(p)] = b->payload;
        ex.round1.push_back(turtles[static_cast<std::size_t>(p)]->round1_result());
      }
      for (int p = 0; p < n; ++p) {
        const ProcessorSet q2 = quorums[q_idx[static_cast<std::size_t>(n + p)]];
        ex.second_quorums.push_back(q2);
        for (ProcessorId s : q2.members())
          for (TurtleAction& a : turtles[static_cast<std::size_t>(p)]->on_message(s, round_tag::kSecond, *second[s.index]))
            if (auto* o = std::get_if<ProduceOutput>(&a)) ex.outputs.push_back(o->output);
      }
      ++stats.schedules;
      if (!check(ex)) {
        ++stats.violations;
        if (!stats.first_violation) stats.first_violation = ex;
      }
    } while (detail::next_index(q_idx, q_radix));
  } while (detail::next_index(in_idx, in_radix));
  return stats;
}

// The four turtle properties on one explored execution (every processor
// is correct and started, so termination means n outputs).
inline bool turtle_spec_holds(const Execution& ex, std::size_t n) {
  return ex.outputs.size() == n && check_turtle_agreement(ex.outputs) &&
         check_turtle_unanimity(ex.inputs, ex.outputs, UnanimityMode::kCrash) &&
         check_turtle_validity(ex.inputs, ex.outputs);
}

}  // namespace turtlesmr
