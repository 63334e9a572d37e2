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
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "turtlesmr/chain.hpp"
#include "turtlesmr/codec.hpp"
#include "turtlesmr/quorum.hpp"

namespace turtlesmr {

using InstanceId = std::uint64_t;

// Round tags shared by every turtle protocol.
namespace round_tag {
inline constexpr std::uint8_t kProposal = 1;
inline constexpr std::uint8_t kSecond = 2;
inline constexpr std::uint8_t kLeaderPropose = 16;
}  // namespace round_tag

enum class TurtleKind { kOneStep, kLowerBound, kBftOneStep, kBftLowerBound };

inline constexpr bool is_bft(TurtleKind k) {
  return k == TurtleKind::kBftOneStep || k == TurtleKind::kBftLowerBound;
}

// Quorum intersection each protocol needs.
inline constexpr int required_intersection(TurtleKind k) {
  switch (k) {
    case TurtleKind::kOneStep: return 3;
    case TurtleKind::kLowerBound: return 2;
    case TurtleKind::kBftOneStep: return 5;
    case TurtleKind::kBftLowerBound: return 3;
  }
  return 0;
}

inline const char* to_string(TurtleKind k) {
  switch (k) {
    case TurtleKind::kOneStep: return "onestep";
    case TurtleKind::kLowerBound: return "lowerbound";
    case TurtleKind::kBftOneStep: return "bft_onestep";
    case TurtleKind::kBftLowerBound: return "bft_lowerbound";
  }
  return "?";
}

inline std::optional<TurtleKind> turtle_kind_from_string(std::string_view s) {
  for (TurtleKind k : {TurtleKind::kOneStep, TurtleKind::kLowerBound, TurtleKind::kBftOneStep,
                       TurtleKind::kBftLowerBound})
    if (s == to_string(k)) return k;
  return std::nullopt;
}

struct TurtleInput {
  InstanceId turtle_index{1};
  Chain chain;
};

// <d, u> produced by one processor for one instance. decided is always a
// prefix of upper.
class TurtleOutput {
 public:
  TurtleOutput(InstanceId index, Chain decided, Chain upper)
      : index_(index), decided_(std::move(decided)), upper_(std::move(upper)) {
    if (!is_prefix(decided_, upper_))
      throw InvariantError("turtle output with decided chain not a prefix of upper");
  }

  InstanceId turtle_index() const { return index_; }
  const Chain& decided() const { return decided_; }
  const Chain& upper() const { return upper_; }

 private:
  InstanceId index_;
  Chain decided_;
  Chain upper_;
};

struct Broadcast {
  std::uint8_t round_tag{0};
  std::shared_ptr<const Bytes> payload;
};

struct ProduceOutput {
  TurtleOutput output;
};

// A message the protocol refused; reason is a short machine-readable code.
struct Discard {
  ProcessorId sender;
  std::uint8_t round_tag{0};
  std::string reason;
};

using TurtleAction = std::variant<Broadcast, ProduceOutput, Discard>;
using TurtleActions = std::vector<TurtleAction>;

// One processor's view of one crash-tolerant turtle instance. Pure: no
// clocks, no I/O. The same start/on_message sequence yields the same actions.
class TurtleStateMachine {
 public:
  virtual ~TurtleStateMachine() = default;

  virtual TurtleActions start(const TurtleInput& input) = 0;
  virtual TurtleActions on_message(ProcessorId sender, std::uint8_t round_tag,
                                   std::span<const std::uint8_t> payload) = 0;
  virtual bool started() const = 0;
  virtual bool done() const = 0;
};

inline std::shared_ptr<const Bytes> share(Bytes b) {
  return std::make_shared<const Bytes>(std::move(b));
}

// ---------------------------------------------------------------------------
// Property checkers for a single instance.

enum class UnanimityMode { kCrash, kBft };

namespace detail {
template <typename Out>
void require_same_index(std::span<const Out> outputs) {
  for (const Out& o : outputs) {
    if (o.turtle_index() != outputs.front().turtle_index())
      throw UsageError("turtle outputs from different instances");
  }
}
}  // namespace detail

// First ordered pair (i, j) with decided_i not a prefix of upper_j.
inline std::optional<std::pair<std::size_t, std::size_t>> find_agreement_violation(
    std::span<const TurtleOutput> outputs) {
  if (outputs.empty()) return std::nullopt;
  detail::require_same_index(outputs);
  for (std::size_t i = 0; i < outputs.size(); ++i)
    for (std::size_t j = 0; j < outputs.size(); ++j)
      if (!is_prefix(outputs[i].decided(), outputs[j].upper())) return std::make_pair(i, j);
  return std::nullopt;
}

inline bool check_turtle_agreement(std::span<const TurtleOutput> outputs) {
  return !find_agreement_violation(outputs).has_value();
}

inline std::optional<std::size_t> find_unanimity_violation(std::span<const TurtleInput> inputs,
                                                           std::span<const TurtleOutput> outputs,
                                                           UnanimityMode mode) {
  if (inputs.empty() || outputs.empty()) throw UsageError("unanimity check needs inputs and outputs");
  std::vector<Chain> chains;
  chains.reserve(inputs.size());
  for (const TurtleInput& in : inputs) chains.push_back(in.chain);
  const Chain w = meet(chains);
  for (std::size_t i = 0; i < outputs.size(); ++i) {
    const Chain& bound = mode == UnanimityMode::kCrash ? outputs[i].decided() : outputs[i].upper();
    if (!is_prefix(w, bound)) return i;
  }
  return std::nullopt;
}

inline bool check_turtle_unanimity(std::span<const TurtleInput> inputs,
                                   std::span<const TurtleOutput> outputs, UnanimityMode mode) {
  return !find_unanimity_violation(inputs, outputs, mode).has_value();
}

inline std::optional<std::size_t> find_validity_violation(std::span<const TurtleInput> inputs,
                                                          std::span<const TurtleOutput> outputs) {
  if (inputs.empty() || outputs.empty()) throw UsageError("validity check needs inputs and outputs");
  for (std::size_t i = 0; i < outputs.size(); ++i) {
    bool covered = false;
    for (const TurtleInput& in : inputs) {
      if (is_prefix(outputs[i].upper(), in.chain)) {
        covered = true;
        break;
      }
    }
    if (!covered) return i;
  }
  return std::nullopt;
}

inline bool check_turtle_validity(std::span<const TurtleInput> inputs,
                                  std::span<const TurtleOutput> outputs) {
  return !find_validity_violation(inputs, outputs).has_value();
}

// What one processor did in one instance, as seen at quiescence.
struct TurtleLifecycle {
  ProcessorId proc;
  bool correct{true};
  bool started{false};
  bool produced_output{false};
};

inline bool check_turtle_termination(std::span<const TurtleLifecycle> records) {
  for (const TurtleLifecycle& r : records)
    if (r.correct && r.started && !r.produced_output) return false;
  return true;
}

}  // namespace turtlesmr
