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
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "turtlesmr/adversary.hpp"
#include "turtlesmr/errors.hpp"
#include "turtlesmr/netsim.hpp"
#include "turtlesmr/replica.hpp"
#include "turtlesmr/trace.hpp"

namespace turtlesmr {

struct ScenarioConfig {
  int n{4};
  int f{1};
  int k{3};
  std::vector<TurtleSchedule::Block> schedule{{TurtleKind::kOneStep, 1}};
  SyncMode sync;
  std::string preset{"default"};
  std::map<int, SimTime> crashes;
  std::map<int, std::string> roles;  // id -> "byzantine:<strategy>"
  LeaderConfig leader;
  InstanceId instances{20};
  int batch_max{8};
  int arrivals{1};
  WorkloadMode workload{WorkloadMode::kMixed};
  CodecMode codec{CodecMode::kRelative};
  std::uint64_t seed{0};
  std::uint64_t max_events{20'000'000};
};

namespace detail {

using nlohmann::json;

inline void only_keys(const json& j, std::initializer_list<const char*> allowed, const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + " must be an object");
  for (const auto& [key, value] : j.items()) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || key == a;
    if (!ok) throw ConfigError("unknown key '" + key + "' in " + where);
  }
}

template <typename T>
T get(const json& j, const char* key, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError(std::string("bad value for '") + key + "'");
  }
}

inline int proc_key(const std::string& s, int n) {
  std::size_t used = 0;
  int id = -1;
  try {
    id = std::stoi(s, &used);
  } catch (const std::exception&) {
  }
  if (used != s.size() || id < 0 || id >= n) throw ConfigError("processor id '" + s + "' out of range");
  return id;
}

inline std::string byzantine_strategy(const std::string& role) {
  const std::string prefix = "byzantine:";
  if (role.rfind(prefix, 0) != 0) throw ConfigError("role '" + role + "' must be byzantine:<strategy>");
  std::string s = role.substr(prefix.size());
  if (!strategy_from_string(s)) throw ConfigError("unknown adversary strategy '" + s + "'");
  return s;
}

}  // namespace detail

inline ScenarioConfig parse_config(const nlohmann::json& j) {
  using detail::get;
  detail::only_keys(j,
                    {"n", "f", "k", "schedule", "sync", "faults", "leader", "instances", "batch_max", "arrivals",
                     "workload", "codec", "seed", "max_events"},
                    "config");
  ScenarioConfig c;
  c.n = get(j, "n", c.n);
  c.f = get(j, "f", c.f);
  c.k = get(j, "k", c.k);
  if (j.contains("schedule")) {
    const auto& s = j["schedule"];
    if (!s.is_array() || s.empty()) throw ConfigError("schedule must be a non-empty array");
    c.schedule.clear();
    for (const auto& b : s) {
      detail::only_keys(b, {"kind", "repeat"}, "schedule entry");
      const std::string kind = get<std::string>(b, "kind", "");
      auto k = turtle_kind_from_string(kind);
      if (!k) throw ConfigError("unknown turtle kind '" + kind + "'");
      int repeat = 1;
      if (b.contains("repeat") && !(b["repeat"].is_string() && b["repeat"] == "cycle")) repeat = get(b, "repeat", 1);
      c.schedule.push_back({*k, repeat});
    }
  }
  if (j.contains("sync")) {
    const auto& s = j["sync"];
    detail::only_keys(s, {"mode", "gst", "delta", "preset"}, "sync");
    const std::string mode = get<std::string>(s, "mode", "async");
    c.preset = get<std::string>(s, "preset", "default");
    AsyncDelays d;
    if (c.preset == "reorder-heavy") {
      d = AsyncDelays::reorder_heavy();
    } else if (c.preset != "default") {
      throw ConfigError("unknown sync preset '" + c.preset + "'");
    }
    if (mode == "async") {
      c.sync = SyncMode::asynchronous(d);
    } else if (mode == "partial") {
      c.sync = SyncMode::partial(get<SimTime>(s, "gst", 0), get<SimTime>(s, "delta", 5), d);
    } else {
      throw ConfigError("sync mode must be async or partial");
    }
  }
  if (j.contains("faults")) {
    const auto& fj = j["faults"];
    detail::only_keys(fj, {"crashes", "roles"}, "faults");
    if (fj.contains("crashes")) {
      if (!fj["crashes"].is_object()) throw ConfigError("faults.crashes must be an object");
      for (const auto& [key, t] : fj["crashes"].items()) {
        if (!t.is_number_integer() || t.get<SimTime>() < 0) throw ConfigError("crash time must be a non-negative integer");
        c.crashes[detail::proc_key(key, c.n)] = t.get<SimTime>();
      }
    }
    if (fj.contains("roles")) {
      if (!fj["roles"].is_object()) throw ConfigError("faults.roles must be an object");
      for (const auto& [key, role] : fj["roles"].items()) {
        if (!role.is_string()) throw ConfigError("role must be a string");
        detail::byzantine_strategy(role.get<std::string>());
        c.roles[detail::proc_key(key, c.n)] = role.get<std::string>();
      }
    }
  }
  if (j.contains("leader")) {
    const auto& l = j["leader"];
    detail::only_keys(l, {"enabled", "t0"}, "leader");
    c.leader.enabled = get(l, "enabled", false);
    c.leader.t0 = get<SimTime>(l, "t0", 10);
  }
  c.instances = get<InstanceId>(j, "instances", c.instances);
  c.batch_max = get(j, "batch_max", c.batch_max);
  c.arrivals = get(j, "arrivals", c.arrivals);
  const std::string workload = get<std::string>(j, "workload", "mixed");
  if (workload == "local") {
    c.workload = WorkloadMode::kLocal;
  } else if (workload == "broadcast") {
    c.workload = WorkloadMode::kBroadcast;
  } else if (workload == "mixed") {
    c.workload = WorkloadMode::kMixed;
  } else {
    throw ConfigError("workload must be local, broadcast or mixed");
  }
  const std::string codec = get<std::string>(j, "codec", "relative");
  if (codec == "relative") {
    c.codec = CodecMode::kRelative;
  } else if (codec == "full") {
    c.codec = CodecMode::kFull;
  } else {
    throw ConfigError("codec must be relative or full");
  }
  c.seed = get<std::uint64_t>(j, "seed", c.seed);
  c.max_events = get<std::uint64_t>(j, "max_events", c.max_events);
  return c;
}

inline ScenarioConfig parse_config_text(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  return parse_config(j);
}

inline nlohmann::json to_json(const ScenarioConfig& c) {
  using nlohmann::json;
  json schedule = json::array();
  for (const auto& b : c.schedule) schedule.push_back({{"kind", to_string(b.kind)}, {"repeat", b.repeat}});
  json sync = {{"mode", c.sync.kind == SyncMode::Kind::kAsync ? "async" : "partial"}, {"preset", c.preset}};
  if (c.sync.kind == SyncMode::Kind::kPartial) {
    sync["gst"] = c.sync.gst;
    sync["delta"] = c.sync.delta;
  }
  json crashes = json::object();
  for (const auto& [p, t] : c.crashes) crashes[std::to_string(p)] = t;
  json roles = json::object();
  for (const auto& [p, r] : c.roles) roles[std::to_string(p)] = r;
  return json{{"n", c.n},
              {"f", c.f},
              {"k", c.k},
              {"schedule", schedule},
              {"sync", sync},
              {"faults", {{"crashes", crashes}, {"roles", roles}}},
              {"leader", {{"enabled", c.leader.enabled}, {"t0", c.leader.t0}}},
              {"instances", c.instances},
              {"batch_max", c.batch_max},
              {"arrivals", c.arrivals},
              {"workload", c.workload == WorkloadMode::kLocal       ? "local"
                           : c.workload == WorkloadMode::kBroadcast ? "broadcast"
                                                                    : "mixed"},
              {"codec", c.codec == CodecMode::kRelative ? "relative" : "full"},
              {"seed", c.seed},
              {"max_events", c.max_events}};
}

// Throws ConfigError naming the first violated rule. Returns whether the
// fault plan exceeds the model (only allowed with violate_model).
inline bool validate_config(const ScenarioConfig& c, bool violate_model) {
  make_threshold(c.n, c.f, c.k);  // n range, f >= 0, k >= 1, n > k*f
  const TurtleSchedule schedule(c.schedule);
  check_schedule_against(schedule, c.k);
  if (c.instances < 1) throw ConfigError("instances must be at least 1");
  if (c.batch_max < 0 || c.arrivals < 0) throw ConfigError("batch_max and arrivals must be non-negative");
  if (c.leader.t0 < 1) throw ConfigError("leader t0 must be at least 1");
  if (c.sync.kind == SyncMode::Kind::kPartial && (c.sync.delta < 1 || c.sync.gst < 0))
    throw ConfigError("partial synchrony needs delta >= 1 and gst >= 0");
  if (c.max_events < 1) throw ConfigError("max_events must be at least 1");
  for (const auto& [p, r] : c.roles) {
    if (c.crashes.contains(p)) throw ConfigError("processor " + std::to_string(p) + " is both crashed and Byzantine");
    if (!schedule.bft()) throw ConfigError("Byzantine roles need a Byzantine turtle schedule");
  }
  const int faulty = static_cast<int>(c.crashes.size() + c.roles.size());
  if (faulty > c.f) {
    if (!violate_model)
      throw ConfigError(std::to_string(faulty) + " faulty processors exceed f=" + std::to_string(c.f) +
                        " (use --violate-model to run anyway)");
    return true;
  }
  return false;
}

struct RunResult {
  Trace trace;
  RunStatus status;
  bool model_violating{false};
  std::string invariant_error;  // empty unless the run aborted
};

inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (salt + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Runs one scenario to quiescence (or the event budget). The trace starts
// with a scenario header and ends with an end record.
inline RunResult run_scenario(const ScenarioConfig& c, bool violate_model = false,
                              CandidateResolution resolution = CandidateResolution::kStrict) {
  RunResult result;
  result.model_violating = validate_config(c, violate_model);
  const TurtleSchedule schedule(c.schedule);

  nlohmann::json header = to_json(c);
  header["model_violating"] = result.model_violating;
  TraceEvent head;
  head.kind = EventKind::kScenario;
  head.info = header.dump();
  result.trace.push_back(std::move(head));

  ReplicaConfig rc;
  rc.system = std::make_shared<ThresholdQuorumSystem>(ThresholdQuorumSystem::unchecked(c.n, c.f, c.k));
  rc.schedule = schedule;
  rc.leader = c.leader;
  rc.instances = c.instances;
  rc.codec = c.codec;
  rc.arrivals = c.arrivals;
  rc.batch_max = c.batch_max;
  rc.workload = c.workload;
  rc.resolution = resolution;
  if (schedule.bft()) rc.ledger = std::make_shared<SignatureLedger>();
  for (const auto& [p, r] : c.roles) rc.traced_accepts.insert(ProcessorId{static_cast<std::uint16_t>(p)});

  std::vector<std::unique_ptr<Node>> nodes;
  for (int p = 0; p < c.n; ++p) {
    const ProcessorId id{static_cast<std::uint16_t>(p)};
    auto role = c.roles.find(p);
    if (role != c.roles.end()) {
      const Strategy s = *strategy_from_string(detail::byzantine_strategy(role->second));
      nodes.push_back(std::make_unique<AdversaryNode>(rc, id, s, mix_seed(c.seed, static_cast<std::uint64_t>(p))));
    } else {
      nodes.push_back(std::make_unique<Replica>(rc, id));
    }
  }

  Simulator sim(c.n, c.sync, c.crashes, c.seed, c.max_events, std::move(nodes), result.trace);
  try {
    result.status = sim.run();
  } catch (const std::logic_error& e) {
    result.invariant_error = e.what();
  } catch (const AgreementViolation& e) {
    result.invariant_error = e.what();
  }
  if (!result.invariant_error.empty()) {
    TraceEvent err;
    err.t = sim.now();
    err.seq = result.trace.size();
    err.kind = EventKind::kInvariantError;
    err.reason = result.invariant_error;
    result.trace.push_back(std::move(err));
    result.status.end_time = sim.now();
  }
  TraceEvent end;
  end.t = result.status.end_time;
  end.seq = result.trace.size();
  end.kind = EventKind::kEnd;
  end.info = nlohmann::json{{"quiescent", result.status.quiescent},
                            {"truncated", result.status.truncated},
                            {"events", result.status.events},
                            {"aborted", !result.invariant_error.empty()}}
                 .dump();
  result.trace.push_back(std::move(end));
  return result;
}

}  // namespace turtlesmr
