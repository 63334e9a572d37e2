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

#include <array>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "turtlesmr/bft.hpp"
#include "turtlesmr/netsim.hpp"
#include "turtlesmr/replica.hpp"

namespace turtlesmr {

enum class Strategy { kEquivocate, kSilent, kGarbage, kStaleReplay, kDivergentX, kCycle };

inline constexpr std::array<Strategy, 5> kCycleOrder = {Strategy::kEquivocate, Strategy::kSilent,
                                                       Strategy::kGarbage, Strategy::kStaleReplay,
                                                       Strategy::kDivergentX};

inline const char* to_string(Strategy s) {
  switch (s) {
    case Strategy::kEquivocate: return "equivocate";
    case Strategy::kSilent: return "silent";
    case Strategy::kGarbage: return "garbage";
    case Strategy::kStaleReplay: return "stale-replay";
    case Strategy::kDivergentX: return "divergent-x";
    case Strategy::kCycle: return "cycle";
  }
  return "?";
}

inline std::optional<Strategy> strategy_from_string(std::string_view s) {
  for (Strategy x : {Strategy::kEquivocate, Strategy::kSilent, Strategy::kGarbage, Strategy::kStaleReplay,
                     Strategy::kDivergentX, Strategy::kCycle})
    if (s == to_string(x)) return x;
  return std::nullopt;
}

// Strategy in force at an instance. divergent-x only has a second round to
// attack in Lower-Bound instances; elsewhere it equivocates proposals.
inline Strategy strategy_at(Strategy base, InstanceId i, int offset, TurtleKind kind) {
  Strategy s = base;
  if (base == Strategy::kCycle) s = kCycleOrder[(i + static_cast<InstanceId>(offset)) % kCycleOrder.size()];
  if (s == Strategy::kDivergentX && kind != TurtleKind::kBftLowerBound) s = Strategy::kEquivocate;
  return s;
}

// A Byzantine processor. It runs an honest replica underneath to stay in
// step with the protocol and rewrites what that replica sends. It holds
// only its own signing key, so it can replay but not forge other
// processors' signatures.
class AdversaryNode final : public Node {
 public:
  AdversaryNode(ReplicaConfig cfg, ProcessorId self, Strategy strategy, std::uint64_t seed)
      : schedule_(cfg.schedule),
        system_(cfg.system),
        signer_(cfg.ledger, self),
        inner_(cfg, self),
        self_(self),
        strategy_(strategy),
        rng_(seed) {}

  void on_start(NodeContext& ctx) override {
    Proxy proxy(*this, ctx);
    inner_.on_start(proxy);
  }

  void on_message(NodeContext& ctx, const Packet& packet) override {
    if (packet.from != self_) observe(ctx, packet);
    Proxy proxy(*this, ctx);
    inner_.on_message(proxy, packet);
  }

  void on_timer(NodeContext& ctx, TimerId id) override {
    Proxy proxy(*this, ctx);
    inner_.on_timer(proxy, id);
  }

 private:
  class Proxy final : public NodeContext {
   public:
    Proxy(AdversaryNode& owner, NodeContext& real) : owner_(owner), real_(real) {}
    SimTime now() const override { return real_.now(); }
    ProcessorId self() const override { return real_.self(); }
    int n() const override { return real_.n(); }
    void send(ProcessorId to, std::uint64_t instance, std::uint8_t tag,
              std::shared_ptr<const Bytes> payload) override {
      owner_.outgoing(real_, std::vector<ProcessorId>{to}, instance, tag, std::move(payload));
    }
    void broadcast(std::uint64_t instance, std::uint8_t tag, std::shared_ptr<const Bytes> payload) override {
      std::vector<ProcessorId> all;
      for (int p = 0; p < real_.n(); ++p) all.push_back(ProcessorId{static_cast<std::uint16_t>(p)});
      owner_.outgoing(real_, all, instance, tag, std::move(payload));
    }
    TimerId set_timer(SimTime delay) override { return real_.set_timer(delay); }
    void record(TraceEvent) override {}

   private:
    AdversaryNode& owner_;
    NodeContext& real_;
  };

  struct Observed {
    ProcessorId from;
    std::uint8_t tag;
    std::shared_ptr<const Bytes> payload;
  };

  Strategy strategy_for(InstanceId i) const {
    return strategy_at(strategy_, i, self_.index, schedule_.kind_of(i));
  }

  static ChainCodec full() { return ChainCodec{CodecMode::kFull, {}, {}}; }

  Command evil(std::uint32_t tag) {
    const std::uint32_t seq = next_evil_++;
    return Command{{1000u + self_.index, seq}, "evil-" + std::to_string(tag) + "-" + std::to_string(seq)};
  }

  Signature sign(SignedStage stage, InstanceId i, const Chain& c) const {
    return signer_.sign(signed_statement(stage, i, c));
  }

  // Proposals seen for `instance`, decoded against the inner replica's
  // current codec and filtered to those with genuine signatures.
  std::vector<SignedChain> valid_proposals(InstanceId instance) {
    std::vector<SignedChain> out;
    if (inner_.current_instance() != instance) return out;
    std::set<ProcessorId> seen;
    for (const Observed& o : observed_[instance]) {
      if (o.tag != round_tag::kProposal || seen.contains(o.from)) continue;
      try {
        auto m = decode_proposal(*o.payload, instance, inner_.codec());
        if (!m) continue;
        if (!signer_.ledger().verify(o.from, signed_statement(SignedStage::kProposal, instance, m->input.chain), m->sig))
          continue;
        seen.insert(o.from);
        out.push_back(SignedChain{o.from, m->input.chain, m->sig});
      } catch (const ParseError&) {
      }
    }
    return out;
  }

  void observe(NodeContext& ctx, const Packet& packet) {
    observed_[packet.instance].push_back(Observed{packet.from, packet.round_tag, packet.payload});
    if (packet.round_tag != round_tag::kProposal) return;
    auto it = withheld_.find(packet.instance);
    if (it == withheld_.end() || packet.instance != inner_.current_instance()) return;
    // A fresh proposal may give a second valid basis for x.
    if (auto alt = alternate_round_two(packet.instance, it->second.basis)) {
      for (ProcessorId to : it->second.recipients) ctx.send(to, packet.instance, round_tag::kSecond, *alt);
      withheld_.erase(it);
    }
  }

  // A round-two message built from a quorum of genuine proposals other than
  // `basis`, if enough proposals have been seen.
  std::optional<std::shared_ptr<const Bytes>> alternate_round_two(InstanceId instance,
                                                                  const std::vector<SignedChain>& basis) {
    std::vector<SignedChain> pool = valid_proposals(instance);
    const int q = system_->n() - system_->f();
    if (static_cast<int>(pool.size()) <= q) return std::nullopt;
    ProcessorSet used;
    for (const SignedChain& b : basis) used.insert(b.signer);
    std::vector<SignedChain> alt;
    for (const SignedChain& e : pool)
      if (!used.contains(e.signer)) alt.push_back(e);
    for (const SignedChain& e : pool)
      if (used.contains(e.signer) && static_cast<int>(alt.size()) < q) alt.push_back(e);
    std::vector<Chain> chains;
    for (const SignedChain& e : alt) chains.push_back(e.chain);
    RoundTwoMessage m{meet(chains), {}, alt};
    m.sig = sign(SignedStage::kRoundTwo, instance, m.x);
    return share(encode_round_two(m, full()));
  }

  std::shared_ptr<const Bytes> garbage_bytes() {
    Bytes b(static_cast<std::size_t>(rng_.uniform(0, 24)));
    for (auto& x : b) x = static_cast<std::uint8_t>(rng_.uniform(0, 255));
    return share(std::move(b));
  }

  Chain random_chain() {
    std::vector<Command> cmds;
    const auto len = rng_.uniform(0, 4);
    for (std::int64_t i = 0; i < len; ++i) cmds.push_back(evil(99));
    return Chain(std::move(cmds));
  }

  // Signature that was never minted, claiming a random identity.
  Signature fabricated(const Bytes& statement) {
    return Signature{ProcessorId{static_cast<std::uint16_t>(rng_.uniform(0, system_->n() - 1))}, fnv1a(statement),
                     rng_.next()};
  }

  void outgoing(NodeContext& ctx, const std::vector<ProcessorId>& to, std::uint64_t instance, std::uint8_t tag,
                std::shared_ptr<const Bytes> payload) {
    const Strategy s = strategy_for(instance);
    auto send_all = [&](const std::shared_ptr<const Bytes>& p) {
      for (ProcessorId r : to) ctx.send(r, instance, tag, p);
    };
    if (s == Strategy::kSilent) {
      // Its own copy keeps the inner replica moving.
      for (ProcessorId r : to)
        if (r == self_) ctx.send(r, instance, tag, payload);
      return;
    }
    if (tag == round_tag::kProposal) {
      auto m = decode_proposal(*payload, instance, inner_.codec());
      if (!m) throw InvariantError("adversary cannot decode its own proposal");
      proposal_out(ctx, to, instance, s, *m, payload);
      return;
    }
    if (tag == round_tag::kSecond) {
      auto m = decode_round_two(*payload, inner_.codec());
      if (!m) throw InvariantError("adversary cannot decode its own second-round message");
      round_two_out(ctx, to, instance, s, *m, payload);
      return;
    }
    send_all(payload);
  }

  void proposal_out(NodeContext& ctx, const std::vector<ProcessorId>& to, InstanceId instance, Strategy s,
                    const ProposalMessage& honest, const std::shared_ptr<const Bytes>& original) {
    for (ProcessorId r : to) {
      if (r == self_) {
        ctx.send(r, instance, round_tag::kProposal, original);
        continue;
      }
      ProposalMessage m = honest;
      switch (s) {
        case Strategy::kEquivocate:
          m.input.chain = honest.input.chain.extended(std::vector<Command>{evil(r.index)});
          m.sig = sign(SignedStage::kProposal, instance, m.input.chain);
          break;
        case Strategy::kGarbage:
          switch (rng_.uniform(0, 2)) {
            case 0:
              ctx.send(r, instance, round_tag::kProposal, garbage_bytes());
              continue;
            case 1:
              m.input.chain = random_chain();
              m.sig = fabricated(signed_statement(SignedStage::kProposal, instance, m.input.chain));
              break;
            default:
              m.input.chain = honest.input.chain.extended(std::vector<Command>{evil(r.index)});
              break;  // keeps the old signature
          }
          break;
        case Strategy::kStaleReplay: {
          const auto& seen = observed_[instance];
          if (r.index % 2 == 0 && !seen.empty()) {
            const Observed& o = seen[static_cast<std::size_t>(rng_.uniform(0, static_cast<std::int64_t>(seen.size()) - 1))];
            ctx.send(r, instance, round_tag::kProposal, o.payload);
            continue;
          }
          m.input.evidence = instance >= 2 && last_evidence_ ? *last_evidence_ : BftOutput::genesis();
          if (instance == 1) m.input.evidence.turtle_index = 7;  // not the previous instance
          m.sig = sign(SignedStage::kProposal, instance, m.input.chain);
          break;
        }
        default:
          break;
      }
      ctx.send(r, instance, round_tag::kProposal, share(encode_proposal(m, full())));
    }
    // Evidence from two instances back, for later stale replays.
    last_evidence_ = previous_evidence_;
    previous_evidence_ = honest.input.evidence;
  }

  void round_two_out(NodeContext& ctx, const std::vector<ProcessorId>& to, InstanceId instance, Strategy s,
                     const RoundTwoMessage& honest, const std::shared_ptr<const Bytes>& original) {
    std::vector<ProcessorId> withheld;
    for (ProcessorId r : to) {
      if (r == self_) {
        ctx.send(r, instance, round_tag::kSecond, original);
        continue;
      }
      RoundTwoMessage m = honest;
      switch (s) {
        case Strategy::kGarbage:
          if (rng_.chance(0.5)) {
            ctx.send(r, instance, round_tag::kSecond, garbage_bytes());
            continue;
          }
          m.x = random_chain();
          m.sig = fabricated(signed_statement(SignedStage::kRoundTwo, instance, m.x));
          break;
        case Strategy::kStaleReplay: {
          std::vector<const Observed*> seconds;
          for (const Observed& o : observed_[instance])
            if (o.tag == round_tag::kSecond) seconds.push_back(&o);
          if (!seconds.empty()) {
            const auto* o = seconds[static_cast<std::size_t>(rng_.uniform(0, static_cast<std::int64_t>(seconds.size()) - 1))];
            ctx.send(r, instance, round_tag::kSecond, o->payload);
            continue;
          }
          break;
        }
        case Strategy::kDivergentX:
          if (r.index % 3 == 1) {
            m.x = honest.x.extended(std::vector<Command>{evil(r.index)});
            m.sig = sign(SignedStage::kRoundTwo, instance, m.x);
          } else if (r.index % 3 == 2) {
            if (auto alt = alternate_round_two(instance, honest.basis)) {
              ctx.send(r, instance, round_tag::kSecond, *alt);
            } else {
              withheld.push_back(r);
            }
            continue;
          }
          break;
        default:
          break;
      }
      ctx.send(r, instance, round_tag::kSecond, share(encode_round_two(m, full())));
    }
    if (!withheld.empty()) withheld_[instance] = Withheld{honest.basis, std::move(withheld)};
  }

  struct Withheld {
    std::vector<SignedChain> basis;
    std::vector<ProcessorId> recipients;
  };

  TurtleSchedule schedule_;
  std::shared_ptr<const QuorumSystem> system_;
  Signer signer_;
  Replica inner_;
  ProcessorId self_;
  Strategy strategy_;
  Rng rng_;
  std::uint32_t next_evil_{0};
  std::map<InstanceId, std::vector<Observed>> observed_;
  std::map<InstanceId, Withheld> withheld_;
  std::optional<BftOutput> previous_evidence_;
  std::optional<BftOutput> last_evidence_;
};

}  // namespace turtlesmr
