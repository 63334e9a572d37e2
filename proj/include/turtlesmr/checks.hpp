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
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "turtlesmr/chain.hpp"
#include "turtlesmr/leader.hpp"
#include "turtlesmr/trace.hpp"
#include "turtlesmr/turtle.hpp"

namespace turtlesmr {

// What a checker needs to know about the run, taken from the scenario
// header.
struct RunFacts {
  int n{0};
  int f{0};
  bool bft{false};
  bool leader{false};
  SimTime t0{10};
  bool partial{false};
  SimTime gst{0};
  SimTime delta{0};
  InstanceId instances{0};
  std::set<int> crashed;
  std::set<int> byzantine;
  bool model_violating{false};
  bool quiescent{false};
  bool truncated{false};
  bool aborted{false};
  std::string abort_reason;

  bool correct(int p) const { return !crashed.contains(p) && !byzantine.contains(p); }
};

struct PropertyResult {
  std::string name;
  bool applicable{true};
  bool pass{true};
  bool informational{false};  // reported, never fails the run
  std::vector<std::uint64_t> counterexample;  // event seq numbers
  std::string detail;
};

struct CheckReport {
  RunFacts facts;
  std::vector<PropertyResult> properties;
  std::uint64_t instances_run{0};
  std::uint64_t decisions{0};
  std::uint64_t outputs{0};
  std::uint64_t discards{0};

  const PropertyResult* find(const std::string& name) const {
    for (const auto& p : properties)
      if (p.name == name) return &p;
    return nullptr;
  }

  // A property failed on a trace that respects the model.
  bool violated() const {
    if (facts.model_violating) return false;
    for (const auto& p : properties)
      if (p.applicable && !p.pass && !p.informational) return true;
    return false;
  }

  nlohmann::json to_json() const {
    using nlohmann::json;
    json props = json::object();
    for (const auto& p : properties) {
      json o{{"applicable", p.applicable}, {"pass", p.pass}};
      if (p.informational) o["informational"] = true;
      if (!p.counterexample.empty()) o["counterexample"] = p.counterexample;
      if (!p.detail.empty()) o["detail"] = p.detail;
      props[p.name] = o;
    }
    return json{{"properties", props},
                {"counts",
                 {{"instances", instances_run}, {"decisions", decisions}, {"outputs", outputs}, {"discards", discards}}},
                {"model_violating", facts.model_violating},
                {"truncated", facts.truncated},
                {"quiescent", facts.quiescent},
                {"aborted", facts.aborted},
                {"violated", violated()}};
  }
};

enum class SpecSet { kAuto, kSmr, kTurtle, kBft };

// Trace events grouped for checking.
struct TraceIndex {
  struct Input {
    int proc;
    InstanceId instance;
    Chain chain;
    std::uint64_t seq;
    bool accepted;  // seen via an accept event rather than a propose
  };
  struct Output {
    int proc;
    InstanceId instance;
    Chain decided;
    Chain upper;
    std::uint64_t seq;
    bool from_evidence;
  };
  struct Decide {
    int proc;
    InstanceId instance;
    Chain chain;
    std::uint64_t seq;
  };

  RunFacts facts;
  std::vector<Input> inputs;
  std::vector<Output> outputs;
  std::vector<Decide> decides;
  std::map<int, std::map<InstanceId, SimTime>> propose_time;
  const Trace* trace{nullptr};
};

inline RunFacts facts_from_header(const Trace& trace) {
  RunFacts f;
  for (const TraceEvent& e : trace) {
    if (e.kind == EventKind::kScenario && !e.info.empty()) {
      const auto h = nlohmann::json::parse(e.info);
      f.n = h.value("n", 0);
      f.f = h.value("f", 0);
      f.instances = h.value("instances", InstanceId{0});
      f.model_violating = h.value("model_violating", false);
      if (h.contains("schedule"))
        for (const auto& b : h["schedule"]) {
          auto k = turtle_kind_from_string(b.value("kind", ""));
          if (k && is_bft(*k)) f.bft = true;
        }
      if (h.contains("leader")) {
        f.leader = h["leader"].value("enabled", false);
        f.t0 = h["leader"].value("t0", SimTime{10});
      }
      if (h.contains("sync")) {
        f.partial = h["sync"].value("mode", "async") == "partial";
        f.gst = h["sync"].value("gst", SimTime{0});
        f.delta = h["sync"].value("delta", SimTime{0});
      }
      if (h.contains("faults")) {
        if (h["faults"].contains("crashes"))
          for (const auto& [k, v] : h["faults"]["crashes"].items()) f.crashed.insert(std::stoi(k));
        if (h["faults"].contains("roles"))
          for (const auto& [k, v] : h["faults"]["roles"].items()) f.byzantine.insert(std::stoi(k));
      }
    } else if (e.kind == EventKind::kEnd && !e.info.empty()) {
      const auto h = nlohmann::json::parse(e.info);
      f.quiescent = h.value("quiescent", false);
      f.truncated = h.value("truncated", false);
    } else if (e.kind == EventKind::kInvariantError) {
      f.aborted = true;
      f.abort_reason = e.reason;
    }
  }
  return f;
}

inline TraceIndex index_trace(const Trace& trace) {
  TraceIndex ix;
  ix.trace = &trace;
  ix.facts = facts_from_header(trace);
  const RunFacts& f = ix.facts;
  for (const TraceEvent& e : trace) {
    // Byzantine processors' own records are not trusted; what correct
    // processors accepted from them is.
    const bool trusted = !f.byzantine.contains(e.proc);
    switch (e.kind) {
      case EventKind::kPropose:
        if (trusted && e.instance && e.chain) {
          ix.inputs.push_back({e.proc, *e.instance, *e.chain, e.seq, false});
          ix.propose_time[e.proc][*e.instance] = e.t;
        }
        break;
      case EventKind::kAccept:
        if (trusted && e.instance && e.chain && e.peer && f.byzantine.contains(*e.peer)) {
          ix.inputs.push_back({*e.peer, *e.instance, *e.chain, e.seq, true});
          if (e.ev_instance && *e.ev_instance > 0 && e.ev_decided && e.ev_upper)
            ix.outputs.push_back({*e.peer, *e.ev_instance, *e.ev_decided, *e.ev_upper, e.seq, true});
        }
        break;
      case EventKind::kOutput:
        if (trusted && e.instance && e.chain && e.upper)
          ix.outputs.push_back({e.proc, *e.instance, *e.chain, *e.upper, e.seq, false});
        break;
      case EventKind::kDecide:
        if (trusted && e.instance && e.chain) ix.decides.push_back({e.proc, *e.instance, *e.chain, e.seq});
        break;
      default:
        break;
    }
  }
  return ix;
}

namespace detail {

inline PropertyResult result(std::string name) {
  PropertyResult r;
  r.name = std::move(name);
  return r;
}

inline void fail(PropertyResult& r, std::vector<std::uint64_t> seqs, std::string detail) {
  if (!r.pass) return;  // keep the first counterexample
  r.pass = false;
  r.counterexample = std::move(seqs);
  r.detail = std::move(detail);
}

inline void not_applicable(PropertyResult& r, std::string why) {
  r.applicable = false;
  r.detail = std::move(why);
}

// Decisions that the SMR properties quantify over.
inline std::vector<const TraceIndex::Decide*> scoped_decides(const TraceIndex& ix) {
  std::vector<const TraceIndex::Decide*> out;
  for (const auto& d : ix.decides)
    if (!ix.facts.bft || ix.facts.correct(d.proc)) out.push_back(&d);
  return out;
}

}  // namespace detail

// Every decision agrees with every other: equivalently, all are prefixes
// of the longest one.
inline PropertyResult check_smr_agreement(const TraceIndex& ix, const std::string& name = "smr.agreement") {
  PropertyResult r = detail::result(name);
  auto ds = detail::scoped_decides(ix);
  if (ds.empty()) return r;
  const auto* longest = *std::max_element(ds.begin(), ds.end(), [](const auto* a, const auto* b) {
    return a->chain.size() < b->chain.size();
  });
  for (const auto* d : ds)
    if (!is_prefix(d->chain, longest->chain))
      detail::fail(r, {d->seq, longest->seq},
                   "decisions " + to_string(d->chain) + " and " + to_string(longest->chain) + " do not agree");
  return r;
}

inline PropertyResult check_smr_validity(const TraceIndex& ix, const std::string& name = "smr.validity") {
  PropertyResult r = detail::result(name);
  std::map<InstanceId, std::vector<const TraceIndex::Input*>> by_instance;
  for (const auto& in : ix.inputs) by_instance[in.instance].push_back(&in);
  for (const auto* d : detail::scoped_decides(ix)) {
    bool found = false;
    if (auto it = by_instance.find(d->instance); it != by_instance.end())
      for (const auto* in : it->second) found = found || is_prefix(d->chain, in->chain);
    for (const auto& in : ix.inputs) {
      if (found) break;
      found = is_prefix(d->chain, in.chain);
    }
    if (!found) detail::fail(r, {d->seq}, "no proposal extends decision " + to_string(d->chain));
  }
  return r;
}

// Bounded form: decisions made before the last instance every correct
// processor completed must be extended by each correct processor's final
// decision.
inline PropertyResult check_smr_relay(const TraceIndex& ix, const std::string& name = "smr.relay") {
  PropertyResult r = detail::result(name);
  if (ix.facts.n == 0) {
    detail::not_applicable(r, "no scenario header");
    return r;
  }
  std::map<int, InstanceId> last_output;
  for (const auto& o : ix.outputs)
    if (!o.from_evidence) last_output[o.proc] = std::max(last_output[o.proc], o.instance);
  InstanceId bound = ~InstanceId{0};
  std::map<int, const TraceIndex::Decide*> final_decision;
  for (int p = 0; p < ix.facts.n; ++p) {
    if (!ix.facts.correct(p)) continue;
    bound = std::min(bound, last_output.contains(p) ? last_output[p] : InstanceId{0});
  }
  for (const auto& d : ix.decides)
    if (ix.facts.correct(d.proc) && d.instance <= bound) {
      auto& slot = final_decision[d.proc];
      if (!slot || slot->chain.size() < d.chain.size()) slot = &d;
    }
  r.detail = "checked through instance " + std::to_string(bound == ~InstanceId{0} ? 0 : bound);
  for (const auto& d : ix.decides) {
    if (!ix.facts.correct(d.proc) || d.instance >= bound) continue;
    for (int q = 0; q < ix.facts.n; ++q) {
      if (!ix.facts.correct(q)) continue;
      auto it = final_decision.find(q);
      if (it == final_decision.end() || !is_prefix(d.chain, it->second->chain)) {
        std::vector<std::uint64_t> seqs{d.seq};
        if (it != final_decision.end()) seqs.push_back(it->second->seq);
        detail::fail(r, seqs, "processor " + std::to_string(q) + " never decided an extension of " + to_string(d.chain));
      }
    }
  }
  return r;
}

inline PropertyResult check_smr_monotonicity(const TraceIndex& ix, const std::string& name = "smr.monotonicity") {
  PropertyResult r = detail::result(name);
  std::map<int, const TraceIndex::Decide*> last;
  for (const auto* d : detail::scoped_decides(ix)) {
    auto& prev = last[d->proc];
    if (prev && !is_prefix(prev->chain, d->chain))
      detail::fail(r, {prev->seq, d->seq},
                   "processor " + std::to_string(d->proc) + " decided " + to_string(prev->chain) + " then " +
                       to_string(d->chain));
    prev = d;
  }
  return r;
}

// Every output's d is a prefix of every input to a later instance.
inline PropertyResult check_lemma_decided_prefix(const TraceIndex& ix, const std::string& name = "smr.lemma1") {
  PropertyResult r = detail::result(name);
  std::map<InstanceId, std::vector<const TraceIndex::Output*>> outs;
  std::map<InstanceId, std::vector<const TraceIndex::Input*>> ins;
  for (const auto& o : ix.outputs) outs[o.instance].push_back(&o);
  for (const auto& in : ix.inputs) ins[in.instance].push_back(&in);
  // Maximal decided chains among earlier instances (one chain when they agree).
  std::vector<const TraceIndex::Output*> frontier;
  auto add = [&](const TraceIndex::Output* o) {
    for (const auto* f : frontier)
      if (is_prefix(o->decided, f->decided)) return;
    std::erase_if(frontier, [&](const auto* f) { return is_prefix(f->decided, o->decided); });
    frontier.push_back(o);
  };
  auto oit = outs.begin();
  for (const auto& [j, inputs] : ins) {
    while (oit != outs.end() && oit->first < j) {
      for (const auto* o : oit->second) add(o);
      ++oit;
    }
    for (const auto* in : inputs)
      for (const auto* f : frontier)
        if (!is_prefix(f->decided, in->chain))
          detail::fail(r, {f->seq, in->seq},
                       "output d=" + to_string(f->decided) + " of instance " + std::to_string(f->instance) +
                           " is not a prefix of input " + to_string(in->chain) + " to instance " + std::to_string(j));
  }
  return r;
}

// At quiescence every correct processor produced outputs 1..instances.
inline PropertyResult check_lemma_all_outputs(const TraceIndex& ix, const std::string& name = "smr.lemma2") {
  PropertyResult r = detail::result(name);
  if (!ix.facts.quiescent || ix.facts.truncated || ix.facts.aborted) {
    detail::not_applicable(r, "run did not quiesce");
    return r;
  }
  std::map<int, std::set<InstanceId>> have;
  for (const auto& o : ix.outputs)
    if (!o.from_evidence) have[o.proc].insert(o.instance);
  for (int p = 0; p < ix.facts.n; ++p) {
    if (!ix.facts.correct(p)) continue;
    for (InstanceId i = 1; i <= ix.facts.instances; ++i)
      if (!have[p].contains(i)) {
        detail::fail(r, {}, "processor " + std::to_string(p) + " has no output for instance " + std::to_string(i));
        break;
      }
  }
  return r;
}

// Windowed progress: once timers exceed delta * 2^n and the instance
// started after GST, every window of 4n instances strictly lengthens the
// processor's longest decision.
inline PropertyResult check_smr_progress(const TraceIndex& ix, const std::string& name = "smr.progress") {
  PropertyResult r = detail::result(name);
  const RunFacts& f = ix.facts;
  if (!f.leader || !f.partial) {
    detail::not_applicable(r, "needs the leader wrapper under partial synchrony");
    return r;
  }
  const SimTime threshold = f.n >= 62 ? kTimeCap : f.delta * (SimTime{1} << f.n);
  const InstanceId window = 4 * static_cast<InstanceId>(f.n);
  std::map<int, std::map<InstanceId, const TraceIndex::Decide*>> by_proc;
  for (const auto& d : ix.decides) by_proc[d.proc][d.instance] = &d;
  int windows = 0;
  for (int p = 0; p < f.n; ++p) {
    if (!f.correct(p)) continue;
    const auto& times = ix.propose_time.count(p) ? ix.propose_time.at(p) : std::map<InstanceId, SimTime>{};
    InstanceId start = 0;
    for (const auto& [i, t] : times)
      if (t >= f.gst && leader_timer(i, f.t0) > threshold) {
        start = i;
        break;
      }
    if (start == 0) continue;
    const auto& decisions = by_proc[p];
    for (InstanceId j = start; j + window - 1 <= f.instances; ++j) {
      std::size_t before = 0;
      for (const auto& [i, d] : decisions)
        if (i < j) before = std::max(before, d->chain.size());
      bool grew = false;
      for (InstanceId i = j; i < j + window && !grew; ++i) {
        auto it = decisions.find(i);
        grew = it != decisions.end() && it->second->chain.size() > before;
      }
      ++windows;
      if (!grew) {
        std::vector<std::uint64_t> seqs;
        if (auto it = decisions.find(j); it != decisions.end()) seqs.push_back(it->second->seq);
        detail::fail(r, seqs,
                     "processor " + std::to_string(p) + " made no longer decision in instances " + std::to_string(j) +
                         ".." + std::to_string(j + window - 1));
      }
    }
  }
  if (r.pass) r.detail = std::to_string(windows) + " windows checked";
  return r;
}

// Per-instance turtle properties. In BFT mode inputs and outputs include
// what correct processors accepted from Byzantine ones.
inline std::vector<PropertyResult> check_turtle_properties(const TraceIndex& ix, bool bft) {
  const std::string prefix = bft ? "bft_turtle." : "turtle.";
  PropertyResult agreement = detail::result(prefix + "agreement");
  PropertyResult unanimity = detail::result(prefix + "unanimity");
  PropertyResult validity = detail::result(prefix + "validity");
  PropertyResult termination = detail::result(prefix + "termination");

  std::map<InstanceId, std::vector<const TraceIndex::Input*>> ins;
  std::map<InstanceId, std::vector<const TraceIndex::Output*>> outs;
  for (const auto& in : ix.inputs) ins[in.instance].push_back(&in);
  for (const auto& o : ix.outputs) outs[o.instance].push_back(&o);
  for (const auto& [i, os] : outs) {
    std::vector<TurtleOutput> outputs;
    for (const auto* o : os) outputs.emplace_back(i, o->decided, o->upper);
    if (auto v = find_agreement_violation(outputs))
      detail::fail(agreement, {os[v->first]->seq, os[v->second]->seq},
                   "instance " + std::to_string(i) + ": d=" + to_string(os[v->first]->decided) +
                       " is not a prefix of u'=" + to_string(os[v->second]->upper));
    auto it = ins.find(i);
    if (it == ins.end()) {
      detail::fail(validity, {os.front()->seq}, "instance " + std::to_string(i) + " has outputs but no inputs");
      continue;
    }
    std::vector<TurtleInput> inputs;
    for (const auto* in : it->second) inputs.push_back(TurtleInput{i, in->chain});
    if (auto v = find_unanimity_violation(inputs, outputs, bft ? UnanimityMode::kBft : UnanimityMode::kCrash))
      detail::fail(unanimity, {os[*v]->seq},
                   "instance " + std::to_string(i) + ": common input prefix not below output " +
                       to_string(bft ? os[*v]->upper : os[*v]->decided));
    if (auto v = find_validity_violation(inputs, outputs))
      detail::fail(validity, {os[*v]->seq},
                   "instance " + std::to_string(i) + ": no input extends u=" + to_string(os[*v]->upper));
  }

  if (!ix.facts.quiescent || ix.facts.truncated || ix.facts.aborted) {
    detail::not_applicable(termination, "run did not quiesce");
  } else {
    for (const auto& [i, inputs] : ins) {
      std::vector<TurtleLifecycle> records;
      for (const auto* in : inputs) {
        if (in->accepted) continue;
        TurtleLifecycle rec{ProcessorId{static_cast<std::uint16_t>(in->proc)}, ix.facts.correct(in->proc), true, false};
        if (auto o = outs.find(i); o != outs.end())
          for (const auto* out : o->second) rec.produced_output = rec.produced_output || (!out->from_evidence && out->proc == in->proc);
        records.push_back(rec);
        if (!check_turtle_termination(std::span<const TurtleLifecycle>(&records.back(), 1)))
          detail::fail(termination, {in->seq},
                       "processor " + std::to_string(in->proc) + " started instance " + std::to_string(i) +
                           " but produced no output");
      }
    }
  }
  return {agreement, unanimity, validity, termination};
}

// Network contract: reliable delivery between correct processors, no
// forged or altered deliveries, and silence after a crash.
inline std::vector<PropertyResult> check_network(const Trace& trace, const RunFacts& facts) {
  PropertyResult reliability = detail::result("net.reliability");
  PropertyResult no_forge = detail::result("net.no_forge");
  PropertyResult crash = detail::result("net.crash_silence");
  struct Sent {
    int from;
    int to;
    std::uint64_t digest;
    std::uint64_t seq;
    bool delivered;
  };
  std::map<std::uint64_t, Sent> sent;
  std::map<int, std::uint64_t> crashed_at;
  for (const TraceEvent& e : trace) {
    if (e.proc >= 0 && crashed_at.contains(e.proc) && e.kind != EventKind::kDrop)
      detail::fail(crash, {crashed_at[e.proc], e.seq},
                   "processor " + std::to_string(e.proc) + " emitted " + to_string(e.kind) + " after crashing");
    switch (e.kind) {
      case EventKind::kCrash:
        crashed_at.emplace(e.proc, e.seq);
        break;
      case EventKind::kSend:
        if (e.msg && e.peer) sent[*e.msg] = Sent{e.proc, *e.peer, e.payload_digest.value_or(0), e.seq, false};
        break;
      case EventKind::kDeliver:
      case EventKind::kDrop: {
        auto it = e.msg ? sent.find(*e.msg) : sent.end();
        if (it == sent.end() || it->second.to != e.proc || !e.peer || it->second.from != *e.peer ||
            it->second.digest != e.payload_digest.value_or(0) || it->second.delivered) {
          detail::fail(no_forge, {e.seq}, "delivery without a matching send");
          break;
        }
        it->second.delivered = true;
        break;
      }
      default:
        break;
    }
  }
  if (!facts.quiescent || facts.truncated || facts.aborted) {
    detail::not_applicable(reliability, "run did not quiesce");
  } else {
    for (const auto& [id, s] : sent)
      if (!s.delivered && facts.correct(s.from) && facts.correct(s.to))
        detail::fail(reliability, {s.seq}, "message " + std::to_string(id) + " was never delivered");
  }
  return {reliability, no_forge, crash};
}

// Runs the checkers selected by `spec` (auto picks from the header).
inline CheckReport check_trace(const Trace& trace, SpecSet spec = SpecSet::kAuto) {
  const TraceIndex ix = index_trace(trace);
  CheckReport report;
  report.facts = ix.facts;
  if (spec == SpecSet::kAuto) spec = ix.facts.bft ? SpecSet::kBft : SpecSet::kSmr;

  PropertyResult aborted = detail::result("run.no_invariant_error");
  if (ix.facts.aborted) detail::fail(aborted, {}, ix.facts.abort_reason);
  report.properties.push_back(aborted);
  PropertyResult complete = detail::result("run.complete");
  if (ix.facts.truncated) detail::fail(complete, {}, "event budget exhausted before quiescence");
  report.properties.push_back(complete);

  auto add = [&](PropertyResult r) { report.properties.push_back(std::move(r)); };
  if (spec == SpecSet::kSmr || spec == SpecSet::kTurtle) {
    if (spec == SpecSet::kSmr) {
      add(check_smr_agreement(ix));
      add(check_smr_validity(ix));
      add(check_smr_relay(ix));
      add(check_smr_monotonicity(ix));
      add(check_lemma_decided_prefix(ix));
      add(check_lemma_all_outputs(ix));
      add(check_smr_progress(ix));
    }
    for (auto& r : check_turtle_properties(ix, false)) add(std::move(r));
  } else {
    add(check_smr_agreement(ix, "bft_smr.agreement"));
    add(check_smr_validity(ix, "bft_smr.validity"));
    PropertyResult relay = check_smr_relay(ix, "bft_smr.relay");
    relay.informational = true;
    add(relay);
    add(check_smr_monotonicity(ix, "bft_smr.monotonicity"));
    add(check_lemma_decided_prefix(ix, "bft_smr.lemma_prefix"));
    add(check_lemma_all_outputs(ix, "bft_smr.lemma_outputs"));
    for (auto& r : check_turtle_properties(ix, true)) add(std::move(r));
  }
  for (auto& r : check_network(trace, ix.facts)) add(std::move(r));

  std::set<InstanceId> instances;
  for (const TraceEvent& e : trace) {
    if (e.kind == EventKind::kOutput && !ix.facts.byzantine.contains(e.proc)) {
      ++report.outputs;
      if (e.instance) instances.insert(*e.instance);
    }
    if (e.kind == EventKind::kDecide && !ix.facts.byzantine.contains(e.proc)) ++report.decisions;
    if (e.kind == EventKind::kDiscard) ++report.discards;
  }
  report.instances_run = instances.size();
  return report;
}

}  // namespace turtlesmr
