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
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "turtlesmr/chain.hpp"
#include "turtlesmr/codec.hpp"
#include "turtlesmr/errors.hpp"

namespace turtlesmr {

enum class EventKind : std::uint8_t {
  kScenario,        // header; info = scenario config
  kCrash,           // proc stops
  kSend,            // proc -> peer, msg id, payload digest
  kDeliver,         // peer -> proc
  kDrop,            // message to a crashed proc
  kTimerExpire,     // leader wait timed out
  kLeaderPropose,   // leader broadcast its input
  kAdopt,           // follower took the leader's chain
  kPropose,         // turtle input <instance, chain>
  kOutput,          // turtle output <instance, chain=d, upper=u>
  kDecide,          // decision <instance, chain>
  kDiscard,         // message refused, with reason
  kAccept,          // a BFT-input from an observed peer passed validation
  kInvariantError,  // protocol invariant failed; run aborted
  kEnd,             // footer; info = run status flags
};

inline constexpr EventKind kAllEventKinds[] = {
    EventKind::kScenario, EventKind::kCrash,       EventKind::kSend,      EventKind::kDeliver,
    EventKind::kDrop,     EventKind::kTimerExpire, EventKind::kLeaderPropose, EventKind::kAdopt,
    EventKind::kPropose,  EventKind::kOutput,      EventKind::kDecide,    EventKind::kDiscard,
    EventKind::kAccept,   EventKind::kInvariantError, EventKind::kEnd};

inline const char* to_string(EventKind k) {
  switch (k) {
    case EventKind::kScenario: return "scenario";
    case EventKind::kCrash: return "crash";
    case EventKind::kSend: return "send";
    case EventKind::kDeliver: return "deliver";
    case EventKind::kDrop: return "drop";
    case EventKind::kTimerExpire: return "timer_expire";
    case EventKind::kLeaderPropose: return "leader_propose";
    case EventKind::kAdopt: return "adopt";
    case EventKind::kPropose: return "propose";
    case EventKind::kOutput: return "output";
    case EventKind::kDecide: return "decide";
    case EventKind::kDiscard: return "discard";
    case EventKind::kAccept: return "accept";
    case EventKind::kInvariantError: return "invariant_error";
    case EventKind::kEnd: return "end";
  }
  return "?";
}

inline std::optional<EventKind> event_kind_from_string(std::string_view s) {
  for (EventKind k : kAllEventKinds)
    if (s == to_string(k)) return k;
  return std::nullopt;
}

struct TraceEvent {
  std::int64_t t{0};
  std::uint64_t seq{0};
  EventKind kind{EventKind::kScenario};
  int proc{-1};
  std::optional<std::uint64_t> instance;
  std::optional<int> round;
  std::optional<int> peer;
  std::optional<std::uint64_t> msg;
  std::optional<std::uint64_t> payload_digest;
  std::optional<Chain> chain;
  std::optional<Chain> upper;
  // accept: the evidence (previous-instance output) carried by the input
  std::optional<std::uint64_t> ev_instance;
  std::optional<Chain> ev_decided;
  std::optional<Chain> ev_upper;
  std::string reason;
  std::string info;  // JSON object text, scenario/end only
};

using Trace = std::vector<TraceEvent>;

namespace detail {

inline void append_chain_json(std::string& out, const Chain& c) {
  out += '[';
  bool first = true;
  for (const Command& cmd : c) {
    if (!first) out += ',';
    out += '"';
    out += to_string(cmd.id);
    out += '"';
    first = false;
  }
  out += ']';
}

inline void append_string_json(std::string& out, std::string_view s) {
  out += nlohmann::json(std::string(s)).dump();
}

inline Chain chain_from_json(const nlohmann::json& j) {
  if (!j.is_array()) throw ParseError("chain must be an array of command ids");
  std::vector<Command> cmds;
  cmds.reserve(j.size());
  for (const auto& id : j) {
    const std::string s = id.get<std::string>();
    const auto dot = s.find('.');
    if (dot == std::string::npos) throw ParseError("command id must be issuer.seq");
    Command c;
    c.id.issuer = static_cast<std::uint32_t>(std::stoul(s.substr(0, dot)));
    c.id.seq = static_cast<std::uint32_t>(std::stoul(s.substr(dot + 1)));
    cmds.push_back(std::move(c));
  }
  return Chain(std::move(cmds));
}

}  // namespace detail

// One JSON object per line; keys always in the same order.
inline std::string to_json_line(const TraceEvent& e) {
  std::string out = "{\"t\":" + std::to_string(e.t) + ",\"seq\":" + std::to_string(e.seq) + ",\"kind\":\"" +
                    to_string(e.kind) + "\"";
  if (e.proc >= 0) out += ",\"proc\":" + std::to_string(e.proc);
  if (e.instance) out += ",\"instance\":" + std::to_string(*e.instance);
  if (e.round) out += ",\"round\":" + std::to_string(*e.round);
  if (e.peer) out += ",\"peer\":" + std::to_string(*e.peer);
  if (e.msg) out += ",\"msg\":" + std::to_string(*e.msg);
  if (e.payload_digest) out += ",\"payload_digest\":\"" + hex64(*e.payload_digest) + "\"";
  if (e.chain) {
    out += ",\"chain\":";
    detail::append_chain_json(out, *e.chain);
  }
  if (e.upper) {
    out += ",\"upper\":";
    detail::append_chain_json(out, *e.upper);
  }
  if (e.ev_instance) out += ",\"ev_instance\":" + std::to_string(*e.ev_instance);
  if (e.ev_decided) {
    out += ",\"ev_decided\":";
    detail::append_chain_json(out, *e.ev_decided);
  }
  if (e.ev_upper) {
    out += ",\"ev_upper\":";
    detail::append_chain_json(out, *e.ev_upper);
  }
  if (!e.reason.empty()) {
    out += ",\"reason\":";
    detail::append_string_json(out, e.reason);
  }
  if (!e.info.empty()) out += ",\"info\":" + e.info;
  out += '}';
  return out;
}

inline std::string to_jsonl(const Trace& trace) {
  std::string out;
  for (const TraceEvent& e : trace) {
    out += to_json_line(e);
    out += '\n';
  }
  return out;
}

// Hash of the JSON-lines rendering; equal traces have equal hashes.
inline std::uint64_t trace_hash(const Trace& trace) {
  Fnv1a h;
  for (const TraceEvent& e : trace) {
    h.update(to_json_line(e));
    h.update("\n");
  }
  return h.digest();
}

inline TraceEvent parse_trace_line(std::string_view line) {
  using nlohmann::json;
  const json j = json::parse(line);
  if (!j.is_object()) throw ParseError("event must be a JSON object");
  TraceEvent e;
  e.t = j.at("t").get<std::int64_t>();
  e.seq = j.at("seq").get<std::uint64_t>();
  const auto kind = event_kind_from_string(j.at("kind").get<std::string>());
  if (!kind) throw ParseError("unknown event kind '" + j.at("kind").get<std::string>() + "'");
  e.kind = *kind;
  if (j.contains("proc")) e.proc = j["proc"].get<int>();
  if (j.contains("instance")) e.instance = j["instance"].get<std::uint64_t>();
  if (j.contains("round")) e.round = j["round"].get<int>();
  if (j.contains("peer")) e.peer = j["peer"].get<int>();
  if (j.contains("msg")) e.msg = j["msg"].get<std::uint64_t>();
  if (j.contains("payload_digest"))
    e.payload_digest = std::stoull(j["payload_digest"].get<std::string>(), nullptr, 16);
  if (j.contains("chain")) e.chain = detail::chain_from_json(j["chain"]);
  if (j.contains("upper")) e.upper = detail::chain_from_json(j["upper"]);
  if (j.contains("ev_instance")) e.ev_instance = j["ev_instance"].get<std::uint64_t>();
  if (j.contains("ev_decided")) e.ev_decided = detail::chain_from_json(j["ev_decided"]);
  if (j.contains("ev_upper")) e.ev_upper = detail::chain_from_json(j["ev_upper"]);
  if (j.contains("reason")) e.reason = j["reason"].get<std::string>();
  if (j.contains("info")) e.info = j["info"].dump();
  return e;
}

// Parses JSON lines; errors carry the 1-based line number.
inline Trace parse_jsonl(std::string_view text) {
  Trace out;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t nl = text.find('\n', pos);
    if (nl == std::string_view::npos) nl = text.size();
    std::string_view line = text.substr(pos, nl - pos);
    pos = nl + 1;
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string_view::npos) continue;
    try {
      out.push_back(parse_trace_line(line));
    } catch (const std::exception& ex) {
      throw ParseError("trace line " + std::to_string(line_no) + ": " + ex.what());
    }
  }
  return out;
}

}  // namespace turtlesmr
