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
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "json.hpp"

#include "turtlesmr/chain.hpp"
#include "turtlesmr/checks.hpp"
#include "turtlesmr/trace.hpp"

// Hand-built traces that each break exactly the property they are named
// after. They show the checkers can fail.
namespace turtlesmr::fixtures {

inline Command cmd(char name) {
  return Command{{0, static_cast<std::uint32_t>(name)}, std::string(1, name)};
}

inline Chain chain(std::string_view names) {
  std::vector<Command> cmds;
  for (char c : names) cmds.push_back(cmd(c));
  return Chain(std::move(cmds));
}

class TraceBuilder {
 public:
  explicit TraceBuilder(nlohmann::json header) {
    TraceEvent e;
    e.kind = EventKind::kScenario;
    e.info = header.dump();
    push(std::move(e));
  }

  TraceBuilder& event(EventKind kind, int proc, InstanceId instance, std::optional<Chain> c = std::nullopt,
                      std::optional<Chain> upper = std::nullopt) {
    TraceEvent e;
    e.kind = kind;
    e.proc = proc;
    e.instance = instance;
    e.chain = std::move(c);
    e.upper = std::move(upper);
    return push(std::move(e));
  }
  TraceBuilder& propose(int p, InstanceId i, std::string_view c) { return event(EventKind::kPropose, p, i, chain(c)); }
  TraceBuilder& output(int p, InstanceId i, std::string_view d, std::string_view u) {
    return event(EventKind::kOutput, p, i, chain(d), chain(u));
  }
  TraceBuilder& decide(int p, InstanceId i, std::string_view d) { return event(EventKind::kDecide, p, i, chain(d)); }
  // propose + output + decide with d = u = c
  TraceBuilder& round(int p, InstanceId i, std::string_view c) { return propose(p, i, c).output(p, i, c, c).decide(p, i, c); }

  TraceBuilder& raw(TraceEvent e) { return push(std::move(e)); }

  TraceBuilder& advance(std::int64_t dt) {
    now_ += dt;
    return *this;
  }

  Trace end(bool quiescent = true, bool truncated = false) {
    TraceEvent e;
    e.kind = EventKind::kEnd;
    e.info = nlohmann::json{{"quiescent", quiescent}, {"truncated", truncated}}.dump();
    push(std::move(e));
    return std::move(trace_);
  }

 private:
  TraceBuilder& push(TraceEvent e) {
    e.t = now_;
    e.seq = trace_.size();
    trace_.push_back(std::move(e));
    return *this;
  }

  Trace trace_;
  std::int64_t now_{0};
};

inline nlohmann::json header(int n, int f, InstanceId instances, const char* kind = "onestep",
                             nlohmann::json roles = nlohmann::json::object()) {
  return {{"n", n},
          {"f", f},
          {"k", 3},
          {"instances", instances},
          {"schedule", nlohmann::json::array({{{"kind", kind}, {"repeat", 1}}})},
          {"faults", {{"crashes", nlohmann::json::object()}, {"roles", roles}}},
          {"leader", {{"enabled", false}, {"t0", 10}}},
          {"sync", {{"mode", "async"}}}};
}

struct Fixture {
  std::string property;  // the property this trace must fail
  Trace trace;
  SpecSet spec;
};

inline std::vector<Fixture> all() {
  std::vector<Fixture> out;
  auto add = [&](std::string prop, Trace t, SpecSet spec = SpecSet::kSmr) {
    out.push_back(Fixture{std::move(prop), std::move(t), spec});
  };

  add("smr.agreement", TraceBuilder(header(2, 0, 1)).round(0, 1, "ab").round(1, 1, "ac").end());
  add("smr.validity", TraceBuilder(header(2, 0, 1))
                          .propose(0, 1, "a").propose(1, 1, "a")
                          .output(0, 1, "ax", "ax").decide(0, 1, "ax")
                          .end());
  add("smr.relay", TraceBuilder(header(2, 0, 2))
                       .round(0, 1, "a").propose(1, 1, "").output(1, 1, "", "").decide(1, 1, "")
                       .round(0, 2, "a").propose(1, 2, "").output(1, 2, "", "").decide(1, 2, "")
                       .end());
  add("smr.monotonicity", TraceBuilder(header(1, 0, 2)).round(0, 1, "ab").round(0, 2, "ab")
                              .event(EventKind::kDecide, 0, 2, chain("a")).end());
  add("smr.lemma1", TraceBuilder(header(1, 0, 2)).round(0, 1, "a").round(0, 2, "b").end());
  add("smr.lemma2", TraceBuilder(header(2, 0, 2)).round(0, 1, "a").round(0, 2, "a").round(1, 1, "a").end());
  {
    nlohmann::json h = header(4, 1, 40);
    h["leader"] = {{"enabled", true}, {"t0", 10}};
    h["sync"] = {{"mode", "partial"}, {"gst", 0}, {"delta", 5}};
    TraceBuilder b(h);
    for (InstanceId i = 1; i <= 40; ++i)
      for (int p = 0; p < 4; ++p) b.round(p, i, "a");
    add("smr.progress", b.end());
  }
  add("turtle.agreement", TraceBuilder(header(2, 0, 1)).propose(0, 1, "ab").propose(1, 1, "ac")
                              .output(0, 1, "ab", "ab").output(1, 1, "ac", "ac").end(), SpecSet::kTurtle);
  add("turtle.unanimity", TraceBuilder(header(2, 0, 1)).propose(0, 1, "ab").propose(1, 1, "abc")
                              .output(0, 1, "a", "ab").end(), SpecSet::kTurtle);
  add("turtle.validity", TraceBuilder(header(1, 0, 1)).propose(0, 1, "a").output(0, 1, "a", "ab").end(),
      SpecSet::kTurtle);
  add("turtle.termination", TraceBuilder(header(2, 0, 1)).round(0, 1, "a").propose(1, 1, "a").end(),
      SpecSet::kTurtle);

  // Byzantine fixtures: processor 2 is Byzantine; 0 and 1 are correct.
  const nlohmann::json byz = {{"2", "byzantine:equivocate"}};
  auto bft = [&] { return TraceBuilder(header(3, 0, 2, "bft_lowerbound", byz)); };
  auto accept = [](int proc, int from, InstanceId i, std::string_view c, InstanceId ev, std::string_view d,
                   std::string_view u) {
    TraceEvent e;
    e.kind = EventKind::kAccept;
    e.proc = proc;
    e.peer = from;
    e.instance = i;
    e.chain = chain(c);
    e.ev_instance = ev;
    e.ev_decided = chain(d);
    e.ev_upper = chain(u);
    return e;
  };
  add("bft_smr.agreement", bft().round(0, 1, "ab").round(1, 1, "ac").round(0, 2, "ab").round(1, 2, "ac").end(),
      SpecSet::kBft);
  add("bft_smr.validity", bft().propose(0, 1, "a").output(0, 1, "ax", "ax").decide(0, 1, "ax").round(1, 1, "").end(),
      SpecSet::kBft);
  add("bft_smr.relay", bft().round(0, 1, "a").round(1, 1, "").round(0, 2, "a").round(1, 2, "").end(), SpecSet::kBft);
  add("bft_smr.monotonicity", bft().round(0, 1, "ab").round(1, 1, "ab").propose(0, 2, "ab").output(0, 2, "ab", "ab")
                                  .decide(0, 2, "c").round(1, 2, "ab").end(), SpecSet::kBft);
  add("bft_smr.lemma_prefix", bft().round(0, 1, "a").round(1, 1, "a").round(0, 2, "a").round(1, 2, "a")
                                  .raw(accept(0, 2, 2, "b", 1, "b", "b")).end(), SpecSet::kBft);
  add("bft_smr.lemma_outputs", bft().round(0, 1, "a").round(1, 1, "a").round(0, 2, "a").end(), SpecSet::kBft);
  add("bft_turtle.agreement", bft().round(0, 1, "a").round(1, 1, "a").round(0, 2, "a").round(1, 2, "a")
                                  .raw(accept(0, 2, 2, "ab", 1, "c", "c")).end(), SpecSet::kBft);
  add("bft_turtle.unanimity", bft().propose(0, 1, "ab").propose(1, 1, "ab").output(0, 1, "a", "a")
                                  .output(1, 1, "a", "a").end(), SpecSet::kBft);
  add("bft_turtle.validity", bft().propose(0, 1, "a").propose(1, 1, "a").output(0, 1, "a", "ab")
                                 .output(1, 1, "a", "a").end(), SpecSet::kBft);
  add("bft_turtle.termination", bft().round(0, 1, "a").propose(1, 1, "a").end(), SpecSet::kBft);

  {
    TraceBuilder b(header(2, 0, 1));
    TraceEvent s;
    s.kind = EventKind::kSend;
    s.proc = 0;
    s.peer = 1;
    s.msg = 0;
    s.payload_digest = 7;
    add("net.reliability", b.raw(s).end());
  }
  {
    TraceBuilder b(header(2, 0, 1));
    TraceEvent d;
    d.kind = EventKind::kDeliver;
    d.proc = 1;
    d.peer = 0;
    d.msg = 5;
    d.payload_digest = 7;
    add("net.no_forge", b.raw(d).end());
  }
  {
    nlohmann::json h = header(2, 1, 1);
    h["faults"]["crashes"] = {{"0", 0}};
    h["k"] = 1;
    TraceBuilder b(h);
    TraceEvent c;
    c.kind = EventKind::kCrash;
    c.proc = 0;
    b.raw(c);
    add("net.crash_silence", b.propose(0, 1, "a").end());
  }
  {
    TraceBuilder b(header(1, 0, 1));
    TraceEvent e;
    e.kind = EventKind::kInvariantError;
    e.reason = "fixture";
    add("run.no_invariant_error", b.raw(e).end());
  }
  add("run.complete", TraceBuilder(header(1, 0, 1)).round(0, 1, "a").end(false, true));
  return out;
}

}  // namespace turtlesmr::fixtures
