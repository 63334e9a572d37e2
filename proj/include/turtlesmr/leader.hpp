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
#include <optional>

#include "turtlesmr/chain.hpp"
#include "turtlesmr/errors.hpp"
#include "turtlesmr/netsim.hpp"
#include "turtlesmr/quorum.hpp"
#include "turtlesmr/turtle.hpp"

namespace turtlesmr {

struct LeaderConfig {
  bool enabled{false};
  SimTime t0{10};
};

inline ProcessorId leader_for(InstanceId i, int n) {
  if (i < 1) throw UsageError("instances are numbered from 1");
  return ProcessorId{static_cast<std::uint16_t>(i % static_cast<std::uint64_t>(n))};
}

// T0 * 2^(i-1), saturating at 2^62.
inline SimTime leader_timer(InstanceId i, SimTime t0) {
  if (i < 1) throw UsageError("instances are numbered from 1");
  SimTime t = t0;
  for (InstanceId step = 1; step < i; ++step) {
    if (t >= kTimeCap / 2) return kTimeCap;
    t *= 2;
  }
  return t;
}

// Follower side of one instance: wait for the leader's chain or the timer,
// whichever comes first. Exactly one of them decides the input.
class LeaderPhase {
 public:
  enum class Outcome { kAdopted, kOwnProposal, kTimedOut };

  struct Decision {
    Outcome outcome;
    Chain input;
  };

  LeaderPhase(InstanceId instance, Chain required, Chain own)
      : instance_(instance), required_(std::move(required)), own_(std::move(own)) {}

  InstanceId instance() const { return instance_; }
  bool resolved() const { return resolved_; }
  const Chain& own() const { return own_; }

  // Adopt c_l only if it extends the bound from the previous output;
  // otherwise go ahead with the own proposal. nullopt once resolved.
  std::optional<Decision> on_leader_message(const Chain& leader_chain) {
    if (resolved_) return std::nullopt;
    resolved_ = true;
    if (is_prefix(required_, leader_chain)) return Decision{Outcome::kAdopted, leader_chain};
    return Decision{Outcome::kOwnProposal, own_};
  }

  std::optional<Decision> on_timeout() {
    if (resolved_) return std::nullopt;
    resolved_ = true;
    return Decision{Outcome::kTimedOut, own_};
  }

 private:
  InstanceId instance_;
  Chain required_;
  Chain own_;
  bool resolved_{false};
};

}  // namespace turtlesmr
