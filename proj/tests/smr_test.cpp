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

#include <deque>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "turtlesmr/codec.hpp"
#include "turtlesmr/leader.hpp"
#include "turtlesmr/smr.hpp"

namespace turtlesmr {
namespace {

Chain ch(std::string_view s) {
  std::vector<int> v;
  for (char c : s) v.push_back(c - 'a');
  return oracle::chain_of(v);
}

// Appends every queued command to u.
class QueueSource final : public ProposalSource {
 public:
  explicit QueueSource(std::string_view pending) {
    for (char c : pending) pending_.push_back(oracle::letter(c - 'a'));
  }
  Chain next_proposal(const Chain& u) override { return u.extended(pending_); }

 private:
  std::vector<Command> pending_;
};

TEST(SmrEngineTest, DecideAndExtend) {
  SmrEngine e(std::make_shared<QueueSource>("c"));
  EXPECT_EQ(e.first_input().chain, ch("c"));
  auto step = e.on_turtle_output(TurtleOutput(1, ch("a"), ch("ab")));
  EXPECT_EQ(step.decision, ch("a"));
  EXPECT_EQ(step.next.turtle_index, 2U);
  EXPECT_EQ(step.next.chain, ch("abc"));
  ASSERT_EQ(e.decision_log().size(), 1U);
  EXPECT_EQ(e.decision_log()[0].instance, 1U);
}

TEST(SmrEngineTest, EmptyOutputEmptyQueue) {
  SmrEngine e(std::make_shared<QueueSource>(""));
  auto step = e.on_turtle_output(TurtleOutput(1, Chain{}, Chain{}));
  EXPECT_TRUE(step.decision.empty());
  EXPECT_EQ(step.next.turtle_index, 2U);
  EXPECT_TRUE(step.next.chain.empty());
}

TEST(SmrEngineTest, WrongIndexRejected) {
  SmrEngine e(std::make_shared<QueueSource>(""));
  e.on_turtle_output(TurtleOutput(1, Chain{}, Chain{}));
  EXPECT_THROW(e.on_turtle_output(TurtleOutput(3, Chain{}, Chain{})), UsageError);
  EXPECT_THROW(e.on_turtle_output(TurtleOutput(1, Chain{}, Chain{})), UsageError);
}

TEST(BftSmrEngineTest, DecidesOnlyWhenLonger) {
  BftSmrEngine e(std::make_shared<QueueSource>("c"));
  EXPECT_TRUE(e.first_input().evidence.is_genesis());
  auto s1 = e.on_turtle_output(BftOutput{1, ch("ab"), ch("ab"), {}});
  EXPECT_EQ(*s1.decision, ch("ab"));
  auto s2 = e.on_turtle_output(BftOutput{2, ch("a"), ch("abd"), {}});
  EXPECT_FALSE(s2.decision);
  EXPECT_EQ(s2.next.chain, ch("abdc"));
  EXPECT_EQ(s2.next.evidence.turtle_index, 2U);
  EXPECT_EQ(e.longest_decided(), ch("ab"));
  EXPECT_EQ(e.decision_log().size(), 1U);
}

TEST(WorkloadTest, ProposalsExtendUpper) {
  WorkloadSource s(3, 1, 4, WorkloadMode::kMixed);
  const Chain u = ch("ab");
  const Chain p = s.next_proposal(u);
  EXPECT_TRUE(is_prefix(u, p));
  ASSERT_EQ(p.size(), 4U);
  EXPECT_EQ(p[2].id.issuer, kSharedIssuer);
  EXPECT_EQ(p[3].id.issuer, 3U);
  s.on_decided(p);
  EXPECT_EQ(s.pending(), 0U);
}

TEST(WorkloadTest, SharedStreamIsIdenticalAcrossProcessors) {
  WorkloadSource a(0, 2, 8, WorkloadMode::kBroadcast);
  WorkloadSource b(1, 2, 8, WorkloadMode::kBroadcast);
  EXPECT_EQ(a.next_proposal(Chain{}), b.next_proposal(Chain{}));
}

TEST(WorkloadTest, BatchLimit) {
  WorkloadSource s(0, 5, 2, WorkloadMode::kLocal);
  EXPECT_EQ(s.next_proposal(Chain{}).size(), 2U);
  EXPECT_EQ(s.pending(), 5U);
}

TEST(ScheduleTest, Cyclic) {
  TurtleSchedule s({{TurtleKind::kOneStep, 2}, {TurtleKind::kLowerBound, 1}});
  EXPECT_EQ(s.kind_of(1), TurtleKind::kOneStep);
  EXPECT_EQ(s.kind_of(2), TurtleKind::kOneStep);
  EXPECT_EQ(s.kind_of(3), TurtleKind::kLowerBound);
  EXPECT_EQ(s.kind_of(4), TurtleKind::kOneStep);
  EXPECT_EQ(s.required_k(), 3);
  EXPECT_THROW(s.kind_of(0), UsageError);
}

TEST(ScheduleTest, Rejections) {
  EXPECT_THROW(TurtleSchedule({}), ConfigError);
  EXPECT_THROW(TurtleSchedule({{TurtleKind::kOneStep, 0}}), ConfigError);
  EXPECT_THROW(TurtleSchedule({{TurtleKind::kOneStep, 1}, {TurtleKind::kBftOneStep, 1}}), ConfigError);
  try {
    check_schedule_against(TurtleSchedule::single(TurtleKind::kOneStep), 2);
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("requires a quorum system satisfying 3-intersection"), std::string::npos);
  }
  EXPECT_NO_THROW(check_schedule_against(TurtleSchedule::single(TurtleKind::kLowerBound), 2));
  EXPECT_THROW(check_schedule_against(TurtleSchedule::single(TurtleKind::kBftOneStep), 4), ConfigError);
  EXPECT_THROW(check_schedule_against(TurtleSchedule::single(TurtleKind::kBftLowerBound), 2), ConfigError);
}

TEST(CodecTest, RelativeExamples) {
  const RelativeChain rc = encode_relative(ch("abc"), ch("ab"));
  EXPECT_EQ(rc.base_length, 2U);
  ASSERT_EQ(rc.suffix.size(), 1U);
  EXPECT_EQ(rc.suffix[0], oracle::letter(2));
  EXPECT_EQ(*decode_relative(rc, ch("ab")), ch("abc"));

  const RelativeChain full = encode_relative(ch("abc"), Chain{});
  EXPECT_EQ(full.base_length, 0U);
  EXPECT_EQ(full.suffix.size(), 3U);

  EXPECT_FALSE(decode_relative(RelativeChain{2, {}}, ch("a")));
  // a decided chain that is not a prefix is not omitted
  EXPECT_EQ(encode_relative(ch("ab"), ch("c")).base_length, 0U);
}

TEST(CodecTest, WireRoundTrip) {
  std::mt19937_64 rng(3);
  for (int i = 0; i < 500; ++i) {
    const Chain known = oracle::random_chain(rng, 10);
    const Chain c = oracle::random_branch(rng, known, 14);
    const Chain decided = known.prefix(common_prefix_length(known, c));
    ByteWriter w;
    ChainCodec{CodecMode::kRelative, decided, {}}.write(w, c);
    const Bytes bytes = w.take();
    ByteReader r(bytes);
    const auto back = ChainCodec{CodecMode::kRelative, {}, known}.read(r);
    r.expect_done();
    ASSERT_TRUE(back);
    ASSERT_EQ(*back, c);
    ASSERT_EQ(decode_chain(encode_chain(c)), c);
  }
}

TEST(CodecTest, MalformedInput) {
  Bytes b = encode_chain(ch("abc"));
  b.pop_back();
  EXPECT_THROW(decode_chain(b), ParseError);
  b = encode_chain(ch("a"));
  b.push_back(0);
  EXPECT_THROW(decode_chain(b), ParseError);
}

TEST(CodecTest, EnvelopeRoundTrip) {
  const Envelope e{7, 2, 3, Bytes{1, 2, 3}};
  EXPECT_EQ(decode_envelope(encode_envelope(e)), e);
}

TEST(LeaderTest, Rotation) {
  EXPECT_EQ(leader_for(1, 4).index, 1);
  EXPECT_EQ(leader_for(4, 4).index, 0);
  EXPECT_EQ(leader_for(7, 4).index, 3);
  EXPECT_THROW(leader_for(0, 4), UsageError);
}

TEST(LeaderTest, TimerDoubles) {
  EXPECT_EQ(leader_timer(1, 10), 10);
  EXPECT_EQ(leader_timer(2, 10), 20);
  EXPECT_EQ(leader_timer(5, 10), 160);
  EXPECT_EQ(leader_timer(500, 10), leader_timer(501, 10));  // saturates
  EXPECT_GT(leader_timer(500, 10), 0);
}

TEST(LeaderTest, PhaseOutcomes) {
  LeaderPhase adopt(2, ch("a"), ch("ax"));
  auto d = adopt.on_leader_message(ch("ab"));
  EXPECT_EQ(d->outcome, LeaderPhase::Outcome::kAdopted);
  EXPECT_EQ(d->input, ch("ab"));
  EXPECT_FALSE(adopt.on_timeout());
  EXPECT_FALSE(adopt.on_leader_message(ch("abc")));

  LeaderPhase timeout(2, ch("a"), ch("ax"));
  EXPECT_EQ(timeout.on_timeout()->input, ch("ax"));
  EXPECT_FALSE(timeout.on_leader_message(ch("ab")));

  LeaderPhase guard(2, ch("a"), ch("ax"));
  auto g = guard.on_leader_message(ch("b"));
  EXPECT_EQ(g->outcome, LeaderPhase::Outcome::kOwnProposal);
  EXPECT_EQ(g->input, ch("ax"));
}

}  // namespace
}  // namespace turtlesmr
