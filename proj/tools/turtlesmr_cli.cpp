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

// Command-line front end: run one scenario, check a stored trace, or sweep
// a range of seeds.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <thread>

#include "CLI11.hpp"

#include "turtlesmr/checks.hpp"
#include "turtlesmr/harness.hpp"
#include "turtlesmr/scenario.hpp"

namespace fs = std::filesystem;
using namespace turtlesmr;

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

std::string default_out() {
  const char* env = std::getenv("TURTLESMR_OUT");
  return env && *env ? env : "out";
}

SpecSet parse_spec(const std::string& s) {
  if (s.empty()) return SpecSet::kAuto;
  if (s == "smr") return SpecSet::kSmr;
  if (s == "turtle") return SpecSet::kTurtle;
  if (s == "bft") return SpecSet::kBft;
  throw ConfigError("--spec must be smr, turtle or bft");
}

std::pair<std::uint64_t, std::uint64_t> parse_range(const std::string& s) {
  const auto dots = s.find("..");
  try {
    if (dots == std::string::npos) {
      const auto v = std::stoull(s);
      return {v, v};
    }
    return {std::stoull(s.substr(0, dots)), std::stoull(s.substr(dots + 2))};
  } catch (const std::exception&) {
    throw ConfigError("--seeds must look like A..B");
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"turtlesmr: chain-based state machine replication in a deterministic simulator"};
  app.require_subcommand(1);

  std::string config_path, out_dir = default_out(), spec, seeds, trace_path;
  std::uint64_t seed = 0;
  bool seed_given = false, violate = false;
  unsigned jobs = std::max(1u, std::thread::hardware_concurrency());

  auto* run = app.add_subcommand("run", "run one scenario and write its trace");
  run->add_option("--config", config_path, "scenario JSON")->required();
  run->add_option("--seed", seed, "override the config seed")->each([&](const std::string&) { seed_given = true; });
  run->add_option("--out", out_dir, "output directory (default $TURTLESMR_OUT or ./out)");
  run->add_flag("--violate-model", violate, "allow more than f faulty processors");

  auto* check = app.add_subcommand("check", "check a stored trace");
  check->add_option("trace", trace_path, "trace file (JSON lines)")->required();
  check->add_option("--spec", spec, "smr | turtle | bft (default: from the trace header)");
  check->add_option("--out", out_dir, "write the report here as well");

  auto* sw = app.add_subcommand("sweep", "run and check a range of seeds");
  sw->add_option("--config", config_path, "scenario JSON")->required();
  sw->add_option("--seeds", seeds, "seed range A..B")->required();
  sw->add_option("--spec", spec, "smr | turtle | bft");
  sw->add_option("--jobs", jobs, "worker threads");
  sw->add_option("--out", out_dir, "output directory for the summary and failing traces");
  sw->add_flag("--violate-model", violate, "allow more than f faulty processors");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : exit_code::kConfig;
  }

  try {
    if (*run) {
      ScenarioConfig cfg = parse_config_text(read_file(config_path));
      if (seed_given) cfg.seed = seed;
      RunResult r = run_scenario(cfg, violate);
      const fs::path path = fs::path(out_dir) / ("trace-" + std::to_string(cfg.seed) + ".jsonl");
      write_file(path, to_jsonl(r.trace));
      std::cout << path.string() << " events=" << r.trace.size() << " hash=" << hex64(trace_hash(r.trace));
      if (r.model_violating) std::cout << " model-violating";
      std::cout << "\n";
      if (!r.invariant_error.empty()) {
        std::cerr << "invariant error: " << r.invariant_error << "\n";
        return r.model_violating ? exit_code::kPass : exit_code::kInternal;
      }
      if (r.status.truncated) {
        std::cerr << "event budget exhausted; trace truncated\n";
        return exit_code::kViolation;
      }
      return exit_code::kPass;
    }
    if (*check) {
      Trace trace;
      try {
        trace = parse_jsonl(read_file(trace_path));
      } catch (const ParseError& e) {
        std::cerr << e.what() << "\n";
        return exit_code::kConfig;
      }
      CheckReport report = check_trace(trace, parse_spec(spec));
      const std::string text = report.to_json().dump(2);
      std::cout << text << "\n";
      if (check->count("--out")) write_file(fs::path(out_dir) / "report.json", text + "\n");
      return exit_code_for(report);
    }
    if (*sw) {
      const ScenarioConfig cfg = parse_config_text(read_file(config_path));
      const auto [first, last] = parse_range(seeds);
      SweepSummary s = sweep(cfg, first, last, jobs, parse_spec(spec), violate);
      for (const auto& o : s.outcomes) {
        if (o.exit == exit_code::kPass) continue;
        ScenarioConfig again = cfg;
        again.seed = o.seed;
        write_file(fs::path(out_dir) / ("failed-" + std::to_string(o.seed) + ".jsonl"),
                   to_jsonl(run_scenario(again, violate).trace));
      }
      const std::string text = s.to_json().dump(2);
      write_file(fs::path(out_dir) / "sweep.json", text + "\n");
      std::cout << (s.outcomes.size() - s.failures) << "/" << s.outcomes.size() << " seeds passed\n";
      if (s.failures) std::cout << text << "\n";
      return s.exit;
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return exit_code::kConfig;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return exit_code::kInternal;
  }
  return exit_code::kPass;
}
