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

// Acceptance suite: one PASS/FAIL line per criterion.

#include <atomic>
#include <chrono>
#include <cstdio>
#include <functional>
#include <mutex>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include "oracles.hpp"
#include "pools.hpp"
#include "turtlesmr/explore.hpp"
#include "turtlesmr/fixtures.hpp"
#include "turtlesmr/harness.hpp"

using namespace turtlesmr;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

int failures = 0;
std::uint64_t determinism_runs = 0;
std::uint64_t determinism_mismatches = 0;

void report(int id, bool pass, double secs, double limit, const std::string& detail) {
  const bool in_time = limit <= 0 || secs <= limit;
  const bool ok = pass && in_time;
  if (!ok) ++failures;
  std::printf("[%s] criterion %2d: %s (%.2fs%s)\n", ok ? "PASS" : "FAIL", id, detail.c_str(), secs,
              in_time ? "" : ", over time limit");
  std::fflush(stdout);
}

struct Job {
  ScenarioConfig config;
  std::uint64_t seed;
  SpecSet spec;
};

struct SuiteResult {
  std::uint64_t runs{0};
  std::uint64_t violations{0};
  std::uint64_t decisions{0};
  std::string first_failure;
};

// Runs every job twice across all cores: once for the verdict, once more to
// confirm the trace hash repeats.
SuiteResult run_suite(const std::vector<Job>& jobs,
                      const std::function<bool(const SeedOutcome&)>& extra = nullptr) {
  SuiteResult r;
  std::mutex mu;
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < jobs.size(); i = next++) {
      const Job& j = jobs[i];
      SeedOutcome a, b;
      std::string error;
      try {
        a = run_and_check(j.config, j.seed, j.spec);
        b = run_and_check(j.config, j.seed, j.spec);
      } catch (const std::exception& e) {
        error = e.what();
      }
      const bool ok = error.empty() && a.exit == exit_code::kPass && (!extra || extra(a));
      std::lock_guard lock(mu);
      ++r.runs;
      r.decisions += a.report.decisions;
      ++determinism_runs;
      if (error.empty() && a.trace_hash != b.trace_hash) ++determinism_mismatches;
      if (!ok) {
        ++r.violations;
        if (r.first_failure.empty()) {
          r.first_failure = "seed " + std::to_string(j.seed) + ": ";
          r.first_failure += error.empty() ? a.report.to_json().dump() : error;
        }
      }
    }
  };
  const unsigned threads = std::max(1u, std::thread::hardware_concurrency());
  std::vector<std::thread> pool;
  for (unsigned t = 1; t < threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  return r;
}

std::string suite_detail(const SuiteResult& r) {
  std::string s = std::to_string(r.runs) + " runs, " + std::to_string(r.violations) + " violations, " +
                  std::to_string(r.decisions) + " decisions";
  if (!r.first_failure.empty()) s += "; first: " + r.first_failure.substr(0, 400);
  return s;
}

void criterion_1() {
  const auto start = Clock::now();
  std::mt19937_64 rng(2024);
  std::uint64_t bad = 0;
  for (int i = 0; i < 10000; ++i) {
    const Chain a = oracle::random_chain(rng, 32);
    const Chain b = oracle::random_branch(rng, a, 32);
    const Chain c = oracle::random_branch(rng, rng() % 2 ? a : b, 32);
    const std::size_t l = oracle::lcp(a, b);
    const Chain m = meet(a, b);
    bool ok = common_prefix_length(a, b) == l && m == oracle::take(a, l);
    ok = ok && is_prefix(a, b) == oracle::prefix(a, b) && agrees(a, b) == (l == std::min(a.size(), b.size()));
    ok = ok && meet(a, a) == a && meet(b, a) == m && meet(meet(a, b), c) == meet(a, meet(b, c));
    for (std::size_t len = 0; len <= a.size() && ok; ++len) {
      const Chain z = a.prefix(len);
      ok = (oracle::prefix(z, a) && oracle::prefix(z, b)) == is_prefix(z, m);
    }
    bad += !ok;
  }
  report(1, bad == 0, seconds_since(start), 5, "10000 random chain pairs, " + std::to_string(bad) + " failures");
}

void criterion_2() {
  const auto start = Clock::now();
  int checked = 0, wrong = 0, failing_found = 0;
  for (int n = 1; n <= kMaxEnumerableProcessors; ++n) {
    for (int f = 0; f < n; ++f)
      for (int k = 1; k <= kMaxEnumerableProcessors && n > k * f; ++k) {
        ++checked;
        if (!verify_k_intersection(make_threshold(n, f, k), k)) ++wrong;
      }
    // Boundary cases just past n > k*f must fail.
    for (int f = 1; f < n; ++f) {
      const int k = (n + f - 1) / f;
      if (verify_k_intersection(ThresholdQuorumSystem::unchecked(n, f, k), k)) {
        ++wrong;
      } else {
        ++failing_found;
      }
    }
  }
  report(2, wrong == 0 && failing_found > 0, seconds_since(start), 30,
         std::to_string(checked) + " valid systems pass, " + std::to_string(failing_found) +
             " systems with n <= k*f fail, " + std::to_string(wrong) + " wrong");
}

ScenarioConfig base(int n, int f, int k, std::vector<TurtleSchedule::Block> schedule, InstanceId instances) {
  ScenarioConfig c;
  c.n = n;
  c.f = f;
  c.k = k;
  c.schedule = std::move(schedule);
  c.instances = instances;
  return c;
}

// 0 or 1 crash depending on the seed, at a seed-dependent time.
void maybe_crash(ScenarioConfig& c, std::uint64_t seed) {
  if (seed % 2 == 1) c.crashes[static_cast<int>(seed / 2 % static_cast<std::uint64_t>(c.n))] = static_cast<SimTime>(seed % 60);
}

void crash_turtle_criterion(int id, TurtleKind kind, int n, int k) {
  const auto start = Clock::now();
  std::vector<Job> jobs;
  for (std::uint64_t seed = 1; seed <= 1000; ++seed) {
    ScenarioConfig c = base(n, 1, k, {{kind, 1}}, 10);
    if (seed % 5 == 0) {
      c.preset = "reorder-heavy";
      c.sync = SyncMode::asynchronous(AsyncDelays::reorder_heavy());
    }
    maybe_crash(c, seed);
    jobs.push_back({c, seed, SpecSet::kTurtle});
  }
  const SuiteResult r = run_suite(jobs);
  const auto system = make_threshold(n, 1, k);
  const ExploreStats ex = kind == TurtleKind::kOneStep
                              ? explore_onestep(system, small_chain_universe(), CandidateResolution::kStrict,
                                                [n](const Execution& e) { return turtle_spec_holds(e, static_cast<std::size_t>(n)); })
                              : explore_lowerbound(system, small_chain_universe(),
                                                   [n](const Execution& e) { return turtle_spec_holds(e, static_cast<std::size_t>(n)); });
  std::string detail = suite_detail(r) + "; exhaustive: " + std::to_string(ex.schedules) + " schedules, " +
                       std::to_string(ex.violations) + " violations";
  bool pass = r.violations == 0 && ex.violations == 0 && ex.schedules <= 200000;
  if (kind == TurtleKind::kLowerBound) {
    // One-Step with only 2-intersection: take the longest candidate anyway.
    const auto weak = ThresholdQuorumSystem::unchecked(3, 1, 2);
    const ExploreStats neg = explore_onestep(weak, small_chain_universe(), CandidateResolution::kLongestUnchecked,
                                             [](const Execution& e) { return check_turtle_agreement(e.outputs); });
    std::string example;
    if (neg.first_violation) {
      for (const auto& in : neg.first_violation->inputs) example += to_string(in.chain) + " ";
    }
    detail += "; one-step at k=2: " + std::to_string(neg.violations) + "/" + std::to_string(neg.schedules) +
              " schedules violate agreement (first inputs " + example + ")";
    pass = pass && neg.violations > 0;
  }
  report(id, pass, seconds_since(start), 120, detail);
}

void criterion_5() {
  const auto start = Clock::now();
  std::vector<Job> jobs;
  for (std::uint64_t seed = 1; seed <= 500; ++seed) {
    ScenarioConfig c;
    switch (seed % 3) {
      case 0: c = base(4, 1, 3, {{TurtleKind::kOneStep, 1}}, 50); break;
      case 1: c = base(3, 1, 2, {{TurtleKind::kLowerBound, 1}}, 50); break;
      default: c = base(4, 1, 3, {{TurtleKind::kOneStep, 1}, {TurtleKind::kLowerBound, 1}}, 50); break;
    }
    if (seed % 7 == 0) c = base(5, 1, 3, {{TurtleKind::kLowerBound, 2}, {TurtleKind::kOneStep, 3}}, 50);
    maybe_crash(c, seed);
    jobs.push_back({c, seed, SpecSet::kSmr});
  }
  const SuiteResult r = run_suite(jobs, [](const SeedOutcome& o) {
    for (const char* p : {"smr.lemma1", "smr.lemma2", "smr.agreement", "smr.validity", "smr.relay", "smr.monotonicity"}) {
      const PropertyResult* res = o.report.find(p);
      if (!res || !res->applicable || !res->pass) return false;
    }
    return o.report.instances_run == 50;
  });
  report(5, r.violations == 0 && r.decisions > 0, seconds_since(start), 300, suite_detail(r));
}

std::string decision_log(const Trace& trace) {
  std::string out;
  for (const TraceEvent& e : trace)
    if (e.kind == EventKind::kDecide || e.kind == EventKind::kOutput) {
      out += std::to_string(e.proc) + " " + std::to_string(e.instance.value_or(0)) + " " + to_string(e.kind) + " ";
      for (const Command& c : *e.chain) out += to_string(c.id) + ":" + c.payload + ",";
      out += "\n";
    }
  return out;
}

void criterion_6() {
  const auto start = Clock::now();
  std::atomic<int> equal{0}, nonempty{0};
  std::atomic<std::uint64_t> next{1};
  auto worker = [&] {
    for (std::uint64_t seed = next++; seed <= 100; seed = next++) {
      ScenarioConfig c;
      switch (seed % 3) {
        case 0: c = base(4, 1, 3, {{TurtleKind::kOneStep, 1}, {TurtleKind::kLowerBound, 1}}, 30); break;
        case 1: c = base(6, 1, 5, {{TurtleKind::kBftOneStep, 1}, {TurtleKind::kBftLowerBound, 1}}, 20); break;
        default: c = base(3, 1, 2, {{TurtleKind::kLowerBound, 1}}, 30); break;
      }
      if (seed % 3 != 1) maybe_crash(c, seed);
      c.seed = seed;
      c.codec = CodecMode::kRelative;
      const std::string on = decision_log(run_scenario(c).trace);
      c.codec = CodecMode::kFull;
      const std::string off = decision_log(run_scenario(c).trace);
      equal += on == off;
      nonempty += !on.empty();
    }
  };
  std::vector<std::thread> pool;
  for (unsigned t = 1; t < std::max(1u, std::thread::hardware_concurrency()); ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  report(6, equal == 100 && nonempty == 100, seconds_since(start), 0,
         std::to_string(equal.load()) + "/100 seeds with identical decision logs");
}

void criterion_7() {
  const auto start = Clock::now();
  std::vector<Job> jobs;
  for (std::uint64_t seed = 1; seed <= 100; ++seed) {
    ScenarioConfig c = base(4, 1, 3, {{TurtleKind::kOneStep, 1}}, 48);
    if (seed % 2 == 0) c.schedule = {{TurtleKind::kOneStep, 1}, {TurtleKind::kLowerBound, 1}};
    c.leader = LeaderConfig{true, 10};
    c.sync = SyncMode::partial(200, 5);
    if (seed % 3 == 0) c.crashes[static_cast<int>(seed % 4)] = static_cast<SimTime>(seed * 3 % 400);
    jobs.push_back({c, seed, SpecSet::kSmr});
  }
  std::atomic<std::uint64_t> windows{0};
  const SuiteResult r = run_suite(jobs, [&](const SeedOutcome& o) {
    const PropertyResult* p = o.report.find("smr.progress");
    if (!p || !p->applicable || !p->pass) return false;
    windows += std::stoull(p->detail);
    return std::stoull(p->detail) > 0;
  });
  report(7, r.violations == 0, seconds_since(start), 180,
         suite_detail(r) + ", " + std::to_string(windows.load() / 2) + " progress windows checked");
}

void criterion_8() {
  const auto start = Clock::now();
  std::vector<Job> jobs;
  for (std::uint64_t seed = 1; seed <= 300; ++seed) {
    ScenarioConfig c = base(6, 1, 5, {{TurtleKind::kBftOneStep, 1}}, 20);
    c.roles[static_cast<int>(seed % 6)] = "byzantine:cycle";
    if (seed % 4 == 0) {
      c.preset = "reorder-heavy";
      c.sync = SyncMode::asynchronous(AsyncDelays::reorder_heavy());
    }
    jobs.push_back({c, seed, SpecSet::kBft});
  }
  const SuiteResult r = run_suite(jobs);
  report(8, r.violations == 0 && r.decisions > 0, seconds_since(start), 300, suite_detail(r));
}

void criterion_9() {
  const auto start = Clock::now();
  static const char* kStrategies[] = {"cycle", "divergent-x", "equivocate", "stale-replay", "garbage", "silent"};
  std::vector<Job> jobs;
  for (std::uint64_t seed = 1; seed <= 300; ++seed) {
    ScenarioConfig c = base(7, 2, 3, {{TurtleKind::kBftLowerBound, 1}}, 20);
    const int byz = static_cast<int>(seed % 3);
    for (int b = 0; b < byz; ++b)
      c.roles[static_cast<int>((seed + 3 * static_cast<std::uint64_t>(b)) % 7)] =
          std::string("byzantine:") + kStrategies[(seed + static_cast<std::uint64_t>(b)) % 6];
    jobs.push_back({c, seed, SpecSet::kBft});
  }
  const SuiteResult r = run_suite(jobs);
  std::string detail = suite_detail(r);
  std::uint64_t pool_violations = 0;
  for (int n : {4, 5, 6}) {
    const pools::PoolStats s = pools::round_two_pool(n);
    pool_violations += s.violations;
    detail += "; n=" + std::to_string(n) + " pools: " + std::to_string(s.pools) + " (" + std::to_string(s.valid) +
              " valid, " + std::to_string(s.rejected) + " rejected round-2 messages)";
  }
  detail += ", " + std::to_string(pool_violations) + " disagreements";
  report(9, r.violations == 0 && pool_violations == 0, seconds_since(start), 300, detail);
}

void criterion_10() {
  const auto start = Clock::now();
  int rejected = 0, total = 0;
  std::string missed;
  for (const auto& fx : fixtures::all()) {
    ++total;
    const CheckReport report = check_trace(fx.trace, fx.spec);
    const PropertyResult* p = report.find(fx.property);
    if (p && p->applicable && !p->pass) {
      ++rejected;
    } else {
      missed += " " + fx.property;
    }
  }
  report(10, rejected == total, seconds_since(start), 0,
         std::to_string(rejected) + "/" + std::to_string(total) + " fixtures rejected" + missed);
}

void criterion_11() {
  report(11, determinism_mismatches == 0 && determinism_runs > 0, 0, 0,
         std::to_string(determinism_runs) + " scenarios run twice, " + std::to_string(determinism_mismatches) +
             " trace hash mismatches");
}

}  // namespace

int main() {
  criterion_1();
  criterion_2();
  crash_turtle_criterion(3, TurtleKind::kOneStep, 4, 3);
  crash_turtle_criterion(4, TurtleKind::kLowerBound, 3, 2);
  criterion_5();
  criterion_6();
  criterion_7();
  criterion_8();
  criterion_9();
  criterion_10();
  criterion_11();
  std::printf("%s: %d of 11 criteria failed\n", failures ? "FAILED" : "OK", failures);
  return failures ? 1 : 0;
}
