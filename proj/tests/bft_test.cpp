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

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "turtlesmr/bft.hpp"
#include "turtlesmr/explore.hpp"
#include "pools.hpp"

namespace turtlesmr {
namespace {

Chain ch(std::string_view s) {
  std::vector<int> v;
  for (char c : s) v.push_back(c - 'a');
  return oracle::chain_of(v);
}

ProcessorId pid(int i) { return ProcessorId{static_cast<std::uint16_t>(i)}; }

Bytes msg(std::string_view s) { return Bytes(s.begin(), s.end()); }

TEST(SignatureTest, Examples) {
  SignatureLedger ledger;
  const Signature s = ledger.sign(pid(0), msg("m"));
  EXPECT_TRUE(ledger.verify(pid(0), msg("m"), s));
  EXPECT_FALSE(ledger.verify(pid(0), msg("m2"), s));
  EXPECT_FALSE(ledger.verify(pid(1), msg("m"), s));
  Signature relabeled = s;
  relabeled.signer = pid(1);
  EXPECT_FALSE(ledger.verify(pid(1), msg("m"), relabeled));
  // a well-formed signature the ledger never issued
  Signature made_up{pid(0), fnv1a(msg("x")), s.nonce + 1};
  EXPECT_FALSE(ledger.verify(pid(0), msg("x"), made_up));
  EXPECT_EQ(ledger.minted(), 1U);
}

TEST(SignatureTest, SignerOnlySignsAsItself) {
  auto ledger = std::make_shared<SignatureLedger>();
  Signer p(ledger, pid(2));
  const Signature s = p.sign(msg("m"));
  EXPECT_EQ(s.signer, pid(2));
  EXPECT_TRUE(ledger->verify(pid(2), msg("m"), s));
  EXPECT_FALSE(ledger->verify(pid(3), msg("m"), s));
}

TEST(SignatureTest, StatementsBindStageAndInstance) {
  SignatureLedger ledger;
  const Signature s = ledger.sign(pid(0), signed_statement(SignedStage::kProposal, 3, ch("a")));
  EXPECT_TRUE(ledger.verify(pid(0), signed_statement(SignedStage::kProposal, 3, ch("a")), s));
  EXPECT_FALSE(ledger.verify(pid(0), signed_statement(SignedStage::kProposal, 4, ch("a")), s));
  EXPECT_FALSE(ledger.verify(pid(0), signed_statement(SignedStage::kRoundTwo, 3, ch("a")), s));
}

// Runs one honest instance with every proposal delivered in id order.
struct Honest {
  std::shared_ptr<const QuorumSystem> system;
  std::shared_ptr<SignatureLedger> ledger;
  TurtleKind kind;

  BftContext ctx(int p) const {
    return BftContext{system, Signer(ledger, pid(p)), ChainCodec{CodecMode::kFull, {}, {}},
                      [k = kind](InstanceId) { return k; }};
  }

  std::vector<BftOutput> run(const std::vector<BftInput>& inputs, std::vector<Bytes>* round_two = nullptr) const {
    const int n = system->n();
    std::vector<std::unique_ptr<BftTurtleStateMachine>> ts;
    std::vector<std::shared_ptr<const Bytes>> first;
    for (int p = 0; p < n; ++p) {
      if (kind == TurtleKind::kBftOneStep)
        ts.push_back(std::make_unique<BftOneStepTurtle>(ctx(p)));
      else
        ts.push_back(std::make_unique<BftLowerBoundTurtle>(ctx(p)));
      first.push_back(std::get<Broadcast>(ts.back()->start(inputs[static_cast<std::size_t>(p)])[0]).payload);
    }
    std::vector<BftOutput> outs;
    std::vector<std::shared_ptr<const Bytes>> second(static_cast<std::size_t>(n));
    auto collect = [&](int p, BftActions actions) {
      for (auto& a : actions) {
        if (auto* o = std::get_if<ProduceBftOutput>(&a)) outs.push_back(o->output);
        if (auto* b = std::get_if<Broadcast>(&a)) second[static_cast<std::size_t>(p)] = b->payload;
        if (auto* d = std::get_if<Discard>(&a)) ADD_FAILURE() << "honest discard: " << d->reason;
      }
    };
    for (int p = 0; p < n; ++p)
      for (int s = 0; s < n; ++s) collect(p, ts[static_cast<std::size_t>(p)]->on_message(pid(s), round_tag::kProposal, *first[static_cast<std::size_t>(s)]));
    if (kind == TurtleKind::kBftLowerBound)
      for (int p = 0; p < n; ++p)
        for (int s = 0; s < n; ++s)
          if (second[static_cast<std::size_t>(s)])
            collect(p, ts[static_cast<std::size_t>(p)]->on_message(pid(s), round_tag::kSecond, *second[static_cast<std::size_t>(s)]));
    if (round_two)
      for (const auto& b : second)
        if (b) round_two->push_back(*b);
    return outs;
  }
};

std::vector<BftInput> inputs_of(std::initializer_list<std::string_view> chains) {
  std::vector<BftInput> out;
  for (auto c : chains) out.push_back(BftInput{1, ch(c), BftOutput::genesis()});
  return out;
}

TEST(BftOneStepTest, HonestEvidenceValidates) {
  Honest h{std::make_shared<ThresholdQuorumSystem>(make_threshold(6, 1, 5)), std::make_shared<SignatureLedger>(), TurtleKind::kBftOneStep};
  const auto outs = h.run(inputs_of({"ab", "ab", "abc", "ab", "a", "abd"}));
  ASSERT_EQ(outs.size(), 6U);
  for (const auto& o : outs) EXPECT_TRUE(validate_bft_onestep_output(o, *h.system, *h.ledger)) << to_string(o.upper);

  BftOutput altered = outs[0];
  altered.evidence[0].chain = ch("zz");
  EXPECT_EQ(validate_bft_onestep_output(altered, *h.system, *h.ledger).reason, reason::kBadSignature);

  BftOutput shortened = outs[0];
  ASSERT_FALSE(shortened.upper.empty());
  shortened.upper = shortened.upper.prefix(shortened.upper.size() - 1);
  if (!is_prefix(shortened.decided, shortened.upper)) shortened.decided = shortened.upper;
  EXPECT_EQ(validate_bft_onestep_output(shortened, *h.system, *h.ledger).reason, reason::kRecomputeMismatch);

  BftOutput thin = outs[0];
  thin.evidence.resize(4);
  EXPECT_EQ(validate_bft_onestep_output(thin, *h.system, *h.ledger).reason, reason::kNotAQuorum);

  BftOutput duplicated = outs[0];
  duplicated.evidence.back() = duplicated.evidence.front();
  EXPECT_EQ(validate_bft_onestep_output(duplicated, *h.system, *h.ledger).reason, reason::kNotAQuorum);
}

TEST(BftLowerBoundTest, HonestRunAndValidators) {
  Honest h{std::make_shared<ThresholdQuorumSystem>(make_threshold(4, 1, 3)), std::make_shared<SignatureLedger>(), TurtleKind::kBftLowerBound};
  std::vector<Bytes> round_two;
  const auto outs = h.run(inputs_of({"ab", "abc", "ab", "a"}), &round_two);
  ASSERT_EQ(outs.size(), 4U);
  for (const auto& o : outs) EXPECT_TRUE(validate_bft_lowerbound_output(o, *h.system, *h.ledger));

  BftOutput swapped = outs[0];
  std::swap(swapped.decided, swapped.upper);
  if (swapped.decided != swapped.upper)
    EXPECT_EQ(validate_bft_lowerbound_output(swapped, *h.system, *h.ledger).reason, reason::kRecomputeMismatch);

  const ChainCodec codec{CodecMode::kFull, {}, {}};
  const RoundTwoMessage honest = *decode_round_two(round_two[0], codec);
  EXPECT_TRUE(validate_bft_lowerbound_message2(honest, pid(0), 1, *h.system, *h.ledger));

  RoundTwoMessage extended = honest;
  extended.x = honest.x.extended(std::vector<Command>{oracle::letter(9)});
  extended.sig = h.ledger->sign(pid(0), signed_statement(SignedStage::kRoundTwo, 1, extended.x));
  EXPECT_EQ(validate_bft_lowerbound_message2(extended, pid(0), 1, *h.system, *h.ledger).reason,
            reason::kRecomputeMismatch);

  RoundTwoMessage padded = honest;
  ProcessorSet in_basis;
  for (const auto& e : padded.basis) in_basis.insert(e.signer);
  for (int p = 0; p < 4; ++p)
    if (!in_basis.contains(pid(p))) padded.basis.push_back(SignedChain{pid(p), ch("a"), Signature{pid(p), 0, 0}});
  EXPECT_EQ(validate_bft_lowerbound_message2(padded, pid(0), 1, *h.system, *h.ledger).reason, reason::kBadSignature);

  EXPECT_FALSE(validate_bft_lowerbound_message2(honest, pid(1), 1, *h.system, *h.ledger));
}

TEST(BftLowerBoundTest, NonAgreeingEvidenceRejected) {
  const auto sys = make_threshold(4, 1, 3);
  SignatureLedger ledger;
  BftOutput out{1, ch("a"), ch("ab"), {}};
  const char* xs[] = {"ab", "ac", "a"};
  for (int p = 0; p < 3; ++p)
    out.evidence.push_back(
        SignedChain{pid(p), ch(xs[p]), ledger.sign(pid(p), signed_statement(SignedStage::kRoundTwo, 1, ch(xs[p])))});
  EXPECT_EQ(validate_bft_lowerbound_output(out, sys, ledger).reason, reason::kNonAgreeing);
}

TEST(BftInputTest, Validation) {
  Honest h{std::make_shared<ThresholdQuorumSystem>(make_threshold(4, 1, 3)), std::make_shared<SignatureLedger>(), TurtleKind::kBftLowerBound};
  const auto outs = h.run(inputs_of({"ab", "ab", "ab", "ab"}));
  const BftOutput ev = outs[0];
  auto kind_of = [](InstanceId) { return TurtleKind::kBftLowerBound; };
  auto sign_input = [&](int p, const BftInput& in) {
    return h.ledger->sign(pid(p), signed_statement(SignedStage::kProposal, in.turtle_index, in.chain));
  };

  const BftInput good{2, ch("abc"), ev};
  EXPECT_TRUE(validate_bft_input(good, sign_input(1, good), pid(1), *h.system, *h.ledger, kind_of));
  EXPECT_EQ(validate_bft_input(good, sign_input(1, good), pid(2), *h.system, *h.ledger, kind_of).reason,
            reason::kBadSignature);

  const BftInput stale{3, ch("abc"), ev};
  EXPECT_EQ(validate_bft_input(stale, sign_input(1, stale), pid(1), *h.system, *h.ledger, kind_of).reason,
            reason::kStaleEvidence);

  const BftInput short_chain{2, ch("a"), ev};
  EXPECT_EQ(validate_bft_input(short_chain, sign_input(1, short_chain), pid(1), *h.system, *h.ledger, kind_of).reason,
            reason::kNotExtended);

  BftOutput forged = ev;
  forged.upper = ch("abz");
  const BftInput bad_ev{2, ch("abz"), forged};
  EXPECT_EQ(validate_bft_input(bad_ev, sign_input(1, bad_ev), pid(1), *h.system, *h.ledger, kind_of).reason,
            std::string(reason::kInvalidEvidence) + ":" + reason::kRecomputeMismatch);

  const BftInput first{1, ch("a"), BftOutput::genesis()};
  EXPECT_TRUE(validate_bft_input(first, sign_input(0, first), pid(0), *h.system, *h.ledger, kind_of));
}

TEST(BftDecideTest, StrictlyLonger) {
  EXPECT_FALSE(bft_decide_rule(ch("ab"), BftOutput{2, ch("a"), ch("ab"), {}}));
  EXPECT_EQ(*bft_decide_rule(ch("a"), BftOutput{2, ch("ab"), ch("ab"), {}}), ch("ab"));
  EXPECT_FALSE(bft_decide_rule(ch("ab"), BftOutput{2, ch("ac"), ch("ac"), {}}));
}

TEST(BftWireTest, ProposalRoundTrip) {
  SignatureLedger ledger;
  const ChainCodec codec{CodecMode::kFull, {}, {}};
  ProposalMessage m{BftInput{2, ch("abc"), BftOutput{1, ch("a"), ch("ab"), {}}}, ledger.sign(pid(1), msg("x"))};
  m.input.evidence.evidence.push_back(SignedChain{pid(0), ch("ab"), ledger.sign(pid(0), msg("y"))});
  const auto back = decode_proposal(encode_proposal(m, codec), 2, codec);
  ASSERT_TRUE(back);
  EXPECT_EQ(back->input.chain, m.input.chain);
  EXPECT_EQ(back->sig, m.sig);
  EXPECT_EQ(back->input.evidence.upper, ch("ab"));
  ASSERT_EQ(back->input.evidence.evidence.size(), 1U);
  EXPECT_EQ(back->input.evidence.evidence[0].chain, ch("ab"));
  Bytes truncated = encode_proposal(m, codec);
  truncated.pop_back();
  EXPECT_THROW(decode_proposal(truncated, 2, codec), ParseError);
}

TEST(BftLowerBoundTest, RoundTwoPoolAgreesN4) { EXPECT_EQ(pools::round_two_pool(4).violations, 0U); }
TEST(BftLowerBoundTest, RoundTwoPoolAgreesN5) { EXPECT_EQ(pools::round_two_pool(5).violations, 0U); }
TEST(BftLowerBoundTest, RoundTwoPoolAgreesN6) {
  const auto stats = pools::round_two_pool(6);
  EXPECT_EQ(stats.violations, 0U);
  EXPECT_GT(stats.valid, stats.pools);
  EXPECT_GT(stats.rejected, 0U);
}
}  // namespace
}  // namespace turtlesmr
