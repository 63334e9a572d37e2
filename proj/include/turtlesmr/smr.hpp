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
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <map>
#include <set>
#include <utility>
#include <vector>

#include "turtlesmr/bft.hpp"
#include "turtlesmr/chain.hpp"
#include "turtlesmr/errors.hpp"
#include "turtlesmr/turtle.hpp"

namespace turtlesmr {

inline constexpr std::uint32_t kSharedIssuer = 65535;

// Orders shared-stream commands ahead of per-processor ones.
struct SharedFirst {
  bool operator()(const CommandId& a, const CommandId& b) const {
    const bool sa = a.issuer == kSharedIssuer, sb = b.issuer == kSharedIssuer;
    if (sa != sb) return sa;
    return a < b;
  }
};

class ProposalSource {
 public:
  virtual ~ProposalSource() = default;

  // Must return an extension of u.
  virtual Chain next_proposal(const Chain& u) = 0;
  virtual void on_decided(const Chain& /*d*/) {}
};

enum class WorkloadMode {
  kLocal,      // each processor receives its own client commands
  kBroadcast,  // one client sends every command to all processors
  kMixed,      // both
};

// Synthetic client load. Each proposal first admits `arrivals` new commands
// per active stream, then appends up to batch_max pending commands that u
// does not already contain, shared ones first. Commands leave the queue once
// decided. The shared stream depends only on how many proposals were made,
// so every processor sees the same shared commands at the same instance.
class WorkloadSource final : public ProposalSource {
 public:
  WorkloadSource(std::uint32_t issuer, int arrivals, int batch_max, WorkloadMode mode = WorkloadMode::kLocal)
      : issuer_(issuer), arrivals_(arrivals), batch_max_(batch_max), mode_(mode) {
    if (arrivals < 0 || batch_max < 0) throw UsageError("workload sizes must be non-negative");
  }

  Chain next_proposal(const Chain& u) override {
    for (int i = 0; i < arrivals_; ++i) {
      if (mode_ != WorkloadMode::kLocal) admit(kSharedIssuer, shared_seq_++);
      if (mode_ != WorkloadMode::kBroadcast) admit(issuer_, local_seq_++);
    }
    std::set<CommandId> in_u;
    for (const Command& c : u) in_u.insert(c.id);
    std::vector<Command> extra;
    for (const auto& [id, c] : pending_) {
      if (static_cast<int>(extra.size()) >= batch_max_) break;
      if (!in_u.contains(id)) extra.push_back(c);
    }
    return u.extended(extra);
  }

  void on_decided(const Chain& d) override {
    for (const Command& c : d) pending_.erase(c.id);
  }

  std::size_t pending() const { return pending_.size(); }

 private:
  void admit(std::uint32_t issuer, std::uint32_t seq) {
    const CommandId id{issuer, seq};
    pending_.emplace(id, Command{id, "op-" + std::to_string(issuer) + "-" + std::to_string(seq)});
  }

  std::uint32_t issuer_;
  int arrivals_;
  int batch_max_;
  WorkloadMode mode_;
  std::uint32_t local_seq_{0};
  std::uint32_t shared_seq_{0};
  std::map<CommandId, Command, SharedFirst> pending_;
};

// Which turtle protocol runs at each instance: a list of {kind, repeat}
// blocks repeated cyclically.
class TurtleSchedule {
 public:
  struct Block {
    TurtleKind kind;
    int repeat{1};
  };

  explicit TurtleSchedule(std::vector<Block> blocks) : blocks_(std::move(blocks)) {
    if (blocks_.empty()) throw ConfigError("turtle schedule is empty");
    for (const Block& b : blocks_) {
      if (b.repeat < 1) throw ConfigError("schedule repeat must be at least 1");
      if (is_bft(b.kind) != is_bft(blocks_.front().kind))
        throw ConfigError("a schedule cannot mix crash-tolerant and Byzantine turtles");
      period_ += static_cast<std::uint64_t>(b.repeat);
    }
  }

  static TurtleSchedule single(TurtleKind k) { return TurtleSchedule({{k, 1}}); }

  TurtleKind kind_of(InstanceId i) const {
    if (i < 1) throw UsageError("instances are numbered from 1");
    std::uint64_t pos = (i - 1) % period_;
    for (const Block& b : blocks_) {
      if (pos < static_cast<std::uint64_t>(b.repeat)) return b.kind;
      pos -= static_cast<std::uint64_t>(b.repeat);
    }
    return blocks_.back().kind;
  }

  bool bft() const { return is_bft(blocks_.front().kind); }

  int required_k() const {
    int k = 0;
    for (const Block& b : blocks_) k = std::max(k, required_intersection(b.kind));
    return k;
  }

  const std::vector<Block>& blocks() const { return blocks_; }

 private:
  std::vector<Block> blocks_;
  std::uint64_t period_{0};
};

// Checks the quorum system against every scheduled protocol.
inline void check_schedule_against(const TurtleSchedule& schedule, int k) {
  for (const auto& b : schedule.blocks()) {
    const int need = required_intersection(b.kind);
    if (k < need)
      throw ConfigError(std::string(to_string(b.kind)) + " requires a quorum system satisfying " +
                        std::to_string(need) + "-intersection (k=" + std::to_string(k) + ")");
  }
}

struct Decision {
  InstanceId instance;
  Chain chain;
};

// Crash-tolerant composition: decide d, propose an extension of u.
class SmrEngine {
 public:
  struct Step {
    Chain decision;
    TurtleInput next;
  };

  explicit SmrEngine(std::shared_ptr<ProposalSource> source)
      : source_(std::move(source)), last_(0, Chain{}, Chain{}) {}

  InstanceId current_instance() const { return current_; }
  const TurtleOutput& last_output() const { return last_; }
  const std::vector<Decision>& decision_log() const { return log_; }

  TurtleInput first_input() { return TurtleInput{1, source_->next_proposal(Chain{})}; }

  Step on_turtle_output(const TurtleOutput& out) {
    if (out.turtle_index() != current_)
      throw UsageError("turtle output for instance " + std::to_string(out.turtle_index()) +
                       " while running " + std::to_string(current_));
    last_ = out;
    log_.push_back(Decision{current_, out.decided()});
    source_->on_decided(out.decided());
    ++current_;
    return Step{out.decided(), TurtleInput{current_, source_->next_proposal(out.upper())}};
  }

 private:
  std::shared_ptr<ProposalSource> source_;
  InstanceId current_{1};
  TurtleOutput last_;
  std::vector<Decision> log_;
};

// Byzantine composition: decide only if longer, carry the output forward as
// evidence.
class BftSmrEngine {
 public:
  struct Step {
    std::optional<Chain> decision;
    BftInput next;
  };

  explicit BftSmrEngine(std::shared_ptr<ProposalSource> source) : source_(std::move(source)) {}

  InstanceId current_instance() const { return current_; }
  const BftOutput& last_output() const { return last_; }
  const Chain& longest_decided() const { return longest_; }
  const std::vector<Decision>& decision_log() const { return log_; }

  BftInput first_input() { return BftInput{1, source_->next_proposal(Chain{}), BftOutput::genesis()}; }

  Step on_turtle_output(const BftOutput& out) {
    if (out.turtle_index != current_)
      throw UsageError("turtle output for instance " + std::to_string(out.turtle_index) +
                       " while running " + std::to_string(current_));
    last_ = out;
    std::optional<Chain> d = bft_decide_rule(longest_, out);
    if (d) {
      longest_ = *d;
      log_.push_back(Decision{current_, *d});
      source_->on_decided(*d);
    }
    ++current_;
    return Step{std::move(d), BftInput{current_, source_->next_proposal(out.upper), out}};
  }

 private:
  std::shared_ptr<ProposalSource> source_;
  InstanceId current_{1};
  BftOutput last_;
  Chain longest_;
  std::vector<Decision> log_;
};

}  // namespace turtlesmr
