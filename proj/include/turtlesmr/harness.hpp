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
#include <atomic>
#include <cstdint>
#include <string>
#include <thread>
#include <vector>

#include "json.hpp"

#include "turtlesmr/checks.hpp"
#include "turtlesmr/scenario.hpp"

namespace turtlesmr {

namespace exit_code {
inline constexpr int kPass = 0;
inline constexpr int kViolation = 1;
inline constexpr int kConfig = 2;
inline constexpr int kInternal = 3;
}  // namespace exit_code

inline int exit_code_for(const CheckReport& report) {
  if (report.facts.aborted && !report.facts.model_violating) return exit_code::kInternal;
  return report.violated() ? exit_code::kViolation : exit_code::kPass;
}

struct SeedOutcome {
  std::uint64_t seed{0};
  int exit{0};
  std::uint64_t trace_hash{0};
  CheckReport report;
};

inline SeedOutcome run_and_check(ScenarioConfig config, std::uint64_t seed, SpecSet spec = SpecSet::kAuto,
                                 bool violate_model = false) {
  config.seed = seed;
  RunResult run = run_scenario(config, violate_model);
  SeedOutcome out;
  out.seed = seed;
  out.trace_hash = turtlesmr::trace_hash(run.trace);
  out.report = check_trace(run.trace, spec);
  out.exit = exit_code_for(out.report);
  return out;
}

struct SweepSummary {
  std::vector<SeedOutcome> outcomes;  // in seed order
  int exit{0};
  std::uint64_t failures{0};

  nlohmann::json to_json() const {
    nlohmann::json failed = nlohmann::json::array();
    for (const auto& o : outcomes)
      if (o.exit != exit_code::kPass) {
        nlohmann::json props = nlohmann::json::array();
        for (const auto& p : o.report.properties)
          if (p.applicable && !p.pass && !p.informational) props.push_back(p.name);
        failed.push_back({{"seed", o.seed}, {"exit", o.exit}, {"properties", props}});
      }
    return {{"runs", outcomes.size()}, {"failures", failures}, {"failed", failed}, {"exit", exit}};
  }
};

// Runs seeds [first, last] across `threads` workers. Each scenario stays
// single-threaded; results do not depend on the thread count.
inline SweepSummary sweep(const ScenarioConfig& config, std::uint64_t first, std::uint64_t last, unsigned threads,
                          SpecSet spec = SpecSet::kAuto, bool violate_model = false) {
  if (last < first) throw ConfigError("seed range is empty");
  validate_config(config, violate_model);
  const std::size_t count = static_cast<std::size_t>(last - first + 1);
  SweepSummary summary;
  summary.outcomes.resize(count);
  std::atomic<std::size_t> next{0};
  std::vector<std::string> errors(count);
  auto worker = [&] {
    for (std::size_t i = next++; i < count; i = next++) {
      try {
        summary.outcomes[i] = run_and_check(config, first + i, spec, violate_model);
      } catch (const std::exception& e) {
        summary.outcomes[i].seed = first + i;
        summary.outcomes[i].exit = exit_code::kInternal;
        errors[i] = e.what();
      }
    }
  };
  threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(count)));
  std::vector<std::thread> pool;
  for (unsigned t = 1; t < threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  for (const auto& o : summary.outcomes) {
    if (o.exit == exit_code::kPass) continue;
    ++summary.failures;
    summary.exit = std::max(summary.exit, o.exit);
  }
  return summary;
}

}  // namespace turtlesmr
