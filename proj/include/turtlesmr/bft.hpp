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

#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "turtlesmr/chain.hpp"
#include "turtlesmr/codec.hpp"
#include "turtlesmr/lowerbound.hpp"
#include "turtlesmr/onestep.hpp"
#include "turtlesmr/quorum.hpp"
#include "turtlesmr/signature.hpp"
#include "turtlesmr/turtle.hpp"

namespace turtlesmr {

// What a signature commits to. Binding the instance and stage stops a
// signature from one round or instance being replayed in another.
enum class SignedStage : std::uint8_t { kProposal = 1, kRoundTwo = 2 };

inline Bytes signed_statement(SignedStage stage, InstanceId instance, const Chain& c) {
  ByteWriter w;
  w.u32(0x74736d72);  // "tsmr"
  w.u8(static_cast<std::uint8_t>(stage));
  w.u64(instance);
  write_chain(w, c);
  return w.take();
}

struct SignedChain {
  ProcessorId signer;
  Chain chain;
  Signature sig;
};

// <d, u, e> for one instance. Instance 0 with empty chains and no evidence
// is the well-known genesis value every processor starts from.
struct BftOutput {
  InstanceId turtle_index{0};
  Chain decided;
  Chain upper;
  std::vector<SignedChain> evidence;

  static BftOutput genesis() { return {}; }
  bool is_genesis() const {
    return turtle_index == 0 && decided.empty() && upper.empty() && evidence.empty();
  }
  TurtleOutput plain() const { return TurtleOutput(turtle_index, decided, upper); }
};

struct BftInput {
  InstanceId turtle_index{1};
  Chain chain;
  BftOutput evidence;
};

// Either ok, or the first reason the artifact was rejected.
struct Validation {
  std::string reason;  // empty when valid

  static Validation ok() { return {}; }
  static Validation fail(std::string why) { return {std::move(why)}; }
  explicit operator bool() const { return reason.empty(); }
};

namespace reason {
inline constexpr const char* kBadSignature = "bad-signature";
inline constexpr const char* kNotAQuorum = "not-a-quorum";
inline constexpr const char* kRecomputeMismatch = "recompute-mismatch";
inline constexpr const char* kNonAgreeing = "non-agreeing-chains";
inline constexpr const char* kStaleEvidence = "stale-evidence";
inline constexpr const char* kInvalidEvidence = "invalid-evidence";
inline constexpr const char* kNotExtended = "evidence-not-extended";
inline constexpr const char* kMalformed = "malformed";
inline constexpr const char* kDeferred = "deferred";
inline constexpr const char* kUnexpectedRound = "unexpected-round";
}  // namespace reason

inline Validation check_signed_quorum(std::span<const SignedChain> entries, SignedStage stage,
                                      InstanceId instance, const QuorumSystem& system,
                                      const SignatureLedger& ledger) {
  ProcessorSet signers;
  for (const SignedChain& e : entries) {
    if (e.signer.index >= system.n() || signers.contains(e.signer))
      return Validation::fail(reason::kNotAQuorum);
    signers.insert(e.signer);
  }
  if (!system.is_quorum(signers)) return Validation::fail(reason::kNotAQuorum);
  for (const SignedChain& e : entries)
    if (!ledger.verify(e.signer, signed_statement(stage, instance, e.chain), e.sig))
      return Validation::fail(reason::kBadSignature);
  return Validation::ok();
}

inline ReceivedChains chains_by_signer(std::span<const SignedChain> entries) {
  ReceivedChains out;
  for (const SignedChain& e : entries) out.emplace(e.signer, e.chain);
  return out;
}

// One-Step evidence is the signed proposals of a quorum; d and u must
// recompute from them.
inline Validation validate_bft_onestep_output(const BftOutput& out, const QuorumSystem& system,
                                              const SignatureLedger& ledger) {
  if (Validation v = check_signed_quorum(out.evidence, SignedStage::kProposal, out.turtle_index,
                                         system, ledger);
      !v)
    return v;
  try {
    TurtleOutput again = compute_onestep_output(out.turtle_index, chains_by_signer(out.evidence), system, 2);
    if (again.decided() == out.decided && again.upper() == out.upper) return Validation::ok();
  } catch (const InvariantError&) {
  }
  return Validation::fail(reason::kRecomputeMismatch);
}

// Lower-Bound evidence is the signed second-round chains of a quorum; they
// must pairwise agree and d, u must be their min and max.
inline Validation validate_bft_lowerbound_output(const BftOutput& out, const QuorumSystem& system,
                                                 const SignatureLedger& ledger) {
  if (Validation v = check_signed_quorum(out.evidence, SignedStage::kRoundTwo, out.turtle_index,
                                         system, ledger);
      !v)
    return v;
  std::vector<Chain> xs;
  for (const SignedChain& e : out.evidence) xs.push_back(e.chain);
  try {
    if (min_agreeing(xs) == out.decided && max_agreeing(xs) == out.upper) return Validation::ok();
  } catch (const AgreementViolation&) {
    return Validation::fail(reason::kNonAgreeing);
  }
  return Validation::fail(reason::kRecomputeMismatch);
}

inline Validation validate_bft_output(const BftOutput& out, TurtleKind kind, const QuorumSystem& system,
                                      const SignatureLedger& ledger) {
  if (out.turtle_index == 0)
    return out.is_genesis() ? Validation::ok() : Validation::fail(reason::kRecomputeMismatch);
  switch (kind) {
    case TurtleKind::kBftOneStep: return validate_bft_onestep_output(out, system, ledger);
    case TurtleKind::kBftLowerBound: return validate_bft_lowerbound_output(out, system, ledger);
    default: throw UsageError("not a BFT turtle kind");
  }
}

// Second-round message: x, its signature, and the signed proposals x was
// computed from.
struct RoundTwoMessage {
  Chain x;
  Signature sig;
  std::vector<SignedChain> basis;
};

inline Validation validate_bft_lowerbound_message2(const RoundTwoMessage& msg, ProcessorId sender,
                                                   InstanceId instance, const QuorumSystem& system,
                                                   const SignatureLedger& ledger) {
  if (!ledger.verify(sender, signed_statement(SignedStage::kRoundTwo, instance, msg.x), msg.sig))
    return Validation::fail(reason::kBadSignature);
  if (Validation v = check_signed_quorum(msg.basis, SignedStage::kProposal, instance, system, ledger); !v)
    return v;
  std::vector<Chain> chains;
  for (const SignedChain& e : msg.basis) chains.push_back(e.chain);
  if (meet(chains) != msg.x) return Validation::fail(reason::kRecomputeMismatch);
  return Validation::ok();
}

// Maps an instance to the protocol it ran, so evidence from the previous
// instance can be checked under the right rules.
using KindSchedule = std::function<TurtleKind(InstanceId)>;

// Step-1b acceptance of a BFT-input from `sender`.
inline Validation validate_bft_input(const BftInput& in, const Signature& sig, ProcessorId sender,
                                     const QuorumSystem& system, const SignatureLedger& ledger,
                                     const KindSchedule& kind_of) {
  if (!ledger.verify(sender, signed_statement(SignedStage::kProposal, in.turtle_index, in.chain), sig))
    return Validation::fail(reason::kBadSignature);
  if (in.evidence.turtle_index + 1 != in.turtle_index) return Validation::fail(reason::kStaleEvidence);
  const TurtleKind prev = in.evidence.turtle_index == 0 ? TurtleKind::kBftOneStep : kind_of(in.evidence.turtle_index);
  if (Validation v = validate_bft_output(in.evidence, prev, system, ledger); !v)
    return Validation::fail(std::string(reason::kInvalidEvidence) + ":" + v.reason);
  if (!is_prefix(in.evidence.upper, in.chain)) return Validation::fail(reason::kNotExtended);
  return Validation::ok();
}

// Decide only if strictly longer than anything decided so far.
inline std::optional<Chain> bft_decide_rule(const Chain& longest_decided, const BftOutput& out) {
  if (out.decided.size() > longest_decided.size()) return out.decided;
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Wire forms.

inline void write_signed_chains(ByteWriter& w, std::span<const SignedChain> entries, const ChainCodec& codec) {
  w.u32(static_cast<std::uint32_t>(entries.size()));
  for (const SignedChain& e : entries) {
    w.u16(e.signer.index);
    codec.write(w, e.chain);
    write_signature(w, e.sig);
  }
}

// nullopt when some chain cannot be decoded yet.
inline std::optional<std::vector<SignedChain>> read_signed_chains(ByteReader& r, const ChainCodec& codec) {
  const std::uint32_t count = r.u32();
  if (count > kMaxProcessors) throw ParseError("too many evidence entries");
  std::vector<SignedChain> out;
  bool decodable = true;
  for (std::uint32_t i = 0; i < count; ++i) {
    SignedChain e;
    e.signer.index = r.u16();
    std::optional<Chain> c = codec.read(r);
    e.sig = read_signature(r);
    if (!c) {
      decodable = false;
      continue;
    }
    e.chain = std::move(*c);
    out.push_back(std::move(e));
  }
  if (!decodable) return std::nullopt;
  return out;
}

inline void write_bft_output(ByteWriter& w, const BftOutput& out, const ChainCodec& codec) {
  w.u64(out.turtle_index);
  codec.write(w, out.decided);
  codec.write(w, out.upper);
  write_signed_chains(w, out.evidence, codec);
}

inline std::optional<BftOutput> read_bft_output(ByteReader& r, const ChainCodec& codec) {
  BftOutput out;
  out.turtle_index = r.u64();
  std::optional<Chain> d = codec.read(r);
  std::optional<Chain> u = codec.read(r);
  auto ev = read_signed_chains(r, codec);
  if (!d || !u || !ev) return std::nullopt;
  out.decided = std::move(*d);
  out.upper = std::move(*u);
  out.evidence = std::move(*ev);
  return out;
}

// Round-1 payload: chain, signature over the chain, evidence.
struct ProposalMessage {
  BftInput input;
  Signature sig;
};

inline Bytes encode_proposal(const ProposalMessage& m, const ChainCodec& codec) {
  ByteWriter w;
  codec.write(w, m.input.chain);
  write_signature(w, m.sig);
  write_bft_output(w, m.input.evidence, codec);
  return w.take();
}

inline std::optional<ProposalMessage> decode_proposal(std::span<const std::uint8_t> bytes, InstanceId instance,
                                                      const ChainCodec& codec) {
  ByteReader r(bytes);
  ProposalMessage m;
  std::optional<Chain> c = codec.read(r);
  m.sig = read_signature(r);
  std::optional<BftOutput> ev = read_bft_output(r, codec);
  r.expect_done();
  if (!c || !ev) return std::nullopt;
  m.input = BftInput{instance, std::move(*c), std::move(*ev)};
  return m;
}

inline Bytes encode_round_two(const RoundTwoMessage& m, const ChainCodec& codec) {
  ByteWriter w;
  codec.write(w, m.x);
  write_signature(w, m.sig);
  write_signed_chains(w, m.basis, codec);
  return w.take();
}

inline std::optional<RoundTwoMessage> decode_round_two(std::span<const std::uint8_t> bytes, const ChainCodec& codec) {
  ByteReader r(bytes);
  RoundTwoMessage m;
  std::optional<Chain> x = codec.read(r);
  m.sig = read_signature(r);
  auto basis = read_signed_chains(r, codec);
  r.expect_done();
  if (!x || !basis) return std::nullopt;
  m.x = std::move(*x);
  m.basis = std::move(*basis);
  return m;
}

// ---------------------------------------------------------------------------
// BFT turtle state machines.

struct ProduceBftOutput {
  BftOutput output;
};

// A peer's BFT-input passed step-1b validation.
struct AcceptInput {
  ProcessorId sender;
  BftInput input;
};

using BftAction = std::variant<Broadcast, ProduceBftOutput, Discard, AcceptInput>;
using BftActions = std::vector<BftAction>;

class BftTurtleStateMachine {
 public:
  virtual ~BftTurtleStateMachine() = default;

  virtual BftActions start(const BftInput& input) = 0;
  virtual BftActions on_message(ProcessorId sender, std::uint8_t round_tag,
                                std::span<const std::uint8_t> payload) = 0;
  virtual bool started() const = 0;
  virtual bool done() const = 0;
};

struct BftContext {
  std::shared_ptr<const QuorumSystem> system;
  Signer signer;
  ChainCodec codec;
  KindSchedule kind_of;
};

namespace detail {

// Step 1a/1b shared by both BFT turtles.
class BftProposalRound {
 public:
  explicit BftProposalRound(BftContext ctx) : ctx_(std::move(ctx)) {}

  const BftContext& context() const { return ctx_; }

  Broadcast start(const BftInput& input) {
    index_ = input.turtle_index;
    ProposalMessage m{input, ctx_.signer.sign(signed_statement(SignedStage::kProposal, index_, input.chain))};
    return Broadcast{round_tag::kProposal, share(encode_proposal(m, ctx_.codec))};
  }

  // Returns the discard or accept action for one proposal message.
  BftAction receive(ProcessorId sender, std::span<const std::uint8_t> payload) {
    std::optional<ProposalMessage> m;
    try {
      m = decode_proposal(payload, index_, ctx_.codec);
    } catch (const ParseError&) {
      return Discard{sender, round_tag::kProposal, reason::kMalformed};
    }
    if (!m) return Discard{sender, round_tag::kProposal, reason::kDeferred};
    Validation v = validate_bft_input(m->input, m->sig, sender, *ctx_.system, ctx_.signer.ledger(), ctx_.kind_of);
    if (!v) return Discard{sender, round_tag::kProposal, v.reason};
    accepted_.push_back(SignedChain{sender, m->input.chain, m->sig});
    senders_.insert(sender);
    return AcceptInput{sender, std::move(m->input)};
  }

  bool has(ProcessorId p) const { return senders_.contains(p); }
  bool complete() const { return ctx_.system->is_quorum(senders_); }
  InstanceId index() const { return index_; }
  const std::vector<SignedChain>& accepted() const { return accepted_; }

 private:
  BftContext ctx_;
  InstanceId index_{0};
  std::vector<SignedChain> accepted_;
  ProcessorSet senders_;
};

}  // namespace detail

// One-Step with signed proposals and evidence. Requires 5-intersection.
class BftOneStepTurtle final : public BftTurtleStateMachine {
 public:
  explicit BftOneStepTurtle(BftContext ctx) : round1_(std::move(ctx)) {}

  BftActions start(const BftInput& input) override {
    if (started_) throw UsageError("turtle instance started twice");
    started_ = true;
    return {round1_.start(input)};
  }

  BftActions on_message(ProcessorId sender, std::uint8_t tag, std::span<const std::uint8_t> payload) override {
    if (!started_) throw UsageError("message delivered to an unstarted turtle");
    if (done_) return {};
    if (tag != round_tag::kProposal) return {Discard{sender, tag, reason::kUnexpectedRound}};
    if (round1_.has(sender)) return {};
    BftActions out{round1_.receive(sender, payload)};
    if (!round1_.complete()) return out;
    done_ = true;
    const auto& ev = round1_.accepted();
    TurtleOutput o = compute_onestep_output(round1_.index(), chains_by_signer(ev), *ctx().system, 2);
    out.push_back(ProduceBftOutput{BftOutput{o.turtle_index(), o.decided(), o.upper(), ev}});
    return out;
  }

  bool started() const override { return started_; }
  bool done() const override { return done_; }

 private:
  const BftContext& ctx() const { return round1_.context(); }

  detail::BftProposalRound round1_;
  bool started_{false};
  bool done_{false};
};

// Lower-Bound with signed rounds; second-round messages carry the signed
// proposals they were computed from. Requires 3-intersection.
class BftLowerBoundTurtle final : public BftTurtleStateMachine {
 public:
  explicit BftLowerBoundTurtle(BftContext ctx) : round1_(std::move(ctx)) {}

  BftActions start(const BftInput& input) override {
    if (started_) throw UsageError("turtle instance started twice");
    started_ = true;
    return {round1_.start(input)};
  }

  BftActions on_message(ProcessorId sender, std::uint8_t tag, std::span<const std::uint8_t> payload) override {
    if (!started_) throw UsageError("message delivered to an unstarted turtle");
    if (done_) return {};
    if (tag == round_tag::kProposal) {
      if (x_ || round1_.has(sender)) return {};
      BftActions out{round1_.receive(sender, payload)};
      if (!round1_.complete()) return out;
      const auto& basis = round1_.accepted();
      std::vector<Chain> chains;
      for (const SignedChain& e : basis) chains.push_back(e.chain);
      x_ = meet(chains);
      RoundTwoMessage m{*x_, ctx().signer.sign(signed_statement(SignedStage::kRoundTwo, round1_.index(), *x_)), basis};
      out.push_back(Broadcast{round_tag::kSecond, share(encode_round_two(m, ctx().codec))});
      for (BftAction& a : try_finish()) out.push_back(std::move(a));
      return out;
    }
    if (tag != round_tag::kSecond) return {Discard{sender, tag, reason::kUnexpectedRound}};
    if (round2_senders_.contains(sender)) return {};
    std::optional<RoundTwoMessage> m;
    try {
      m = decode_round_two(payload, ctx().codec);
    } catch (const ParseError&) {
      return {Discard{sender, tag, reason::kMalformed}};
    }
    if (!m) return {Discard{sender, tag, reason::kDeferred}};
    Validation v = validate_bft_lowerbound_message2(*m, sender, round1_.index(), *ctx().system, ctx().signer.ledger());
    if (!v) return {Discard{sender, tag, v.reason}};
    round2_senders_.insert(sender);
    round2_.push_back(SignedChain{sender, std::move(m->x), m->sig});
    return try_finish();
  }

  bool started() const override { return started_; }
  bool done() const override { return done_; }
  const std::optional<Chain>& round1_result() const { return x_; }

 private:
  BftActions try_finish() {
    if (!x_) return {};
    std::vector<SignedChain> quorum;
    ProcessorSet senders;
    for (const SignedChain& e : round2_) {
      quorum.push_back(e);
      senders.insert(e.signer);
      if (!ctx().system->is_quorum(senders)) continue;
      std::vector<Chain> xs;
      for (const SignedChain& q : quorum) xs.push_back(q.chain);
      done_ = true;
      try {
        return {ProduceBftOutput{BftOutput{round1_.index(), min_agreeing(xs), max_agreeing(xs), std::move(quorum)}}};
      } catch (const AgreementViolation&) {
        throw InvariantError("valid round-2 chains do not agree; quorum system lacks 3-intersection");
      }
    }
    return {};
  }

  const BftContext& ctx() const { return round1_.context(); }

  detail::BftProposalRound round1_;
  std::optional<Chain> x_;
  std::vector<SignedChain> round2_;
  ProcessorSet round2_senders_;
  bool started_{false};
  bool done_{false};
};

}  // namespace turtlesmr
