// Copyright 2026 The MoECache Authors.
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

// moecache: solve, sweep, verify and curvature subcommands.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "moecache/curvature.h"
#include "moecache/error.h"
#include "moecache/io.h"
#include "moecache/optimizers.h"
#include "moecache/scenario.h"
#include "moecache/sweep.h"
#include "moecache/verify.h"

namespace {

constexpr int kExitVerifyFailed = 1;
constexpr int kExitValidation = 2;
constexpr int kExitComputation = 3;
constexpr int kExitRowErrors = 4;

constexpr const char* kOutDirEnv = "MOECACHE_OUT_DIR";

// --out wins; otherwise the environment variable; otherwise ./out.
std::filesystem::path OutputDir(const std::string& flag) {
  std::filesystem::path dir = flag;
  if (dir.empty()) {
    const char* env = std::getenv(kOutDirEnv);
    dir = env && *env ? env : "out";
  }
  std::filesystem::create_directories(dir);
  return dir;
}

int Solve(const std::string& scenario_path, const std::string& algorithm,
          std::uint64_t seed, const std::string& out, bool breakdown) {
  using namespace moecache;
  const Scenario scenario = LoadScenario(scenario_path);
  const auto instance = BuildInstance(scenario, seed);
  const AlgorithmRun run = RunAlgorithm(*instance, algorithm, seed, OptionsFor(scenario));
  const std::filesystem::path dir = OutputDir(out);
  const SweepAxis axis = scenario.sweep.axis;
  const std::vector<ResultRow> rows = {
      MakeRow(SweepAxisName(axis), CurrentAxisValue(scenario, axis), seed, *instance, run)};
  WriteFile((dir / "results.csv").string(), ResultsCsv(rows));
  WriteFile((dir / "timings.csv").string(), TimingsCsv(rows));
  WriteFile((dir / "placement.csv").string(), PlacementCsv(*instance, run.placement));
  WriteFile((dir / "summary.json").string(), SummaryJson(*instance, run, seed));
  if (breakdown) {
    WriteFile((dir / "latency_breakdown.csv").string(), BreakdownCsv(*instance, run.placement));
  }
  std::printf("%s seed=%llu objective=%s s average_latency=%s s runtime=%.3f s -> %s\n",
              algorithm.c_str(), static_cast<unsigned long long>(seed),
              FormatDouble(run.objective).c_str(), FormatDouble(run.average_latency).c_str(),
              run.runtime_s, dir.string().c_str());
  return run.capacity_ok ? 0 : kExitComputation;
}

int Sweep(const std::string& scenario_path, const std::string& out, bool quiet) {
  using namespace moecache;
  const Scenario scenario = LoadScenario(scenario_path);
  const std::filesystem::path dir = OutputDir(out);
  int errors = 0;
  const std::vector<ResultRow> rows = RunSweep(scenario, [&](const ResultRow& r) {
    if (!r.ok) ++errors;
    if (quiet) return;
    std::fprintf(stderr, "%s=%s seed=%llu %-6s %s\n", r.axis.c_str(),
                 FormatDouble(r.sweep_value).c_str(),
                 static_cast<unsigned long long>(r.seed), r.algorithm.c_str(),
                 r.ok ? ("latency=" + FormatDouble(r.average_latency) + " s").c_str()
                      : ("error: " + r.error).c_str());
  });
  WriteFile((dir / "results.csv").string(), ResultsCsv(rows));
  WriteFile((dir / "timings.csv").string(), TimingsCsv(rows));
  std::printf("%zu rows (%d errors) -> %s\n", rows.size(), errors, dir.string().c_str());
  return errors == 0 ? 0 : kExitRowErrors;
}

int Verify(const std::string& scenario_path, double scale, std::uint64_t seed,
           const std::string& json_path) {
  using namespace moecache;
  const Scenario scenario =
      scenario_path.empty() ? ParseScenario("") : LoadScenario(scenario_path);
  VerifyOptions options;
  options.seed = seed;
  options.trial_scale = scale;
  const VerifyReport report = RunVerifySuite(scenario, options);
  for (const CheckResult& c : report.checks) {
    std::printf("%s %s: %s\n", c.passed ? "PASS" : "FAIL", c.name.c_str(), c.detail.c_str());
  }
  if (!json_path.empty()) WriteFile(json_path, report.ToJson());
  return report.all_passed() ? 0 : kExitVerifyFailed;
}

int Curvature(const std::string& scenario_path, std::uint64_t seed, const std::string& out) {
  using namespace moecache;
  const Scenario scenario = LoadScenario(scenario_path);
  const auto instance = BuildInstance(scenario, seed);
  SuccessiveOptions options = scenario.successive;
  const SuccessiveResult result = SuccessivePlacement(*instance, options);
  const std::string json = CurvatureJson(BuildCurvatureReport(*instance, result));
  std::fputs(json.c_str(), stdout);
  if (!out.empty()) WriteFile((OutputDir(out) / "curvature.json").string(), json);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Expert placement for distributed MoE inference at the edge"};
  app.require_subcommand(1);

  std::string scenario, algorithm = "accel", out, json_path;
  std::uint64_t seed = 0;
  double scale = 1.0;
  bool breakdown = false, quiet = false;

  CLI::App* solve = app.add_subcommand("solve", "Run one algorithm on one seeded instance");
  solve->add_option("--scenario", scenario, "Scenario JSON file")->required()->check(CLI::ExistingFile);
  solve->add_option("--algorithm", algorithm, "greedy | dp | accel | lfu | random | brute")
      ->check(CLI::IsMember({"greedy", "dp", "accel", "lfu", "random", "brute"}));
  solve->add_option("--seed", seed, "Instance seed");
  solve->add_option("--out", out, "Output directory");
  solve->add_flag("--breakdown", breakdown, "Also write per-query latency_breakdown.csv");

  CLI::App* sweep = app.add_subcommand("sweep", "Run every (value, seed, algorithm) cell");
  sweep->add_option("--scenario", scenario, "Scenario JSON file")->required()->check(CLI::ExistingFile);
  sweep->add_option("--out", out, "Output directory");
  sweep->add_flag("--quiet", quiet, "No per-row progress on stderr");

  CLI::App* verify = app.add_subcommand("verify", "Run the property and oracle suite");
  verify->add_option("--scenario", scenario, "Scenario JSON file")->check(CLI::ExistingFile);
  verify->add_option("--scale", scale, "Trial count multiplier")->check(CLI::PositiveNumber);
  verify->add_option("--seed", seed, "Base seed for generated instances");
  verify->add_option("--json", json_path, "Write the report as JSON");

  CLI::App* curvature = app.add_subcommand("curvature", "Curvature report for the successive solver");
  curvature->add_option("--scenario", scenario, "Scenario JSON file")->required()->check(CLI::ExistingFile);
  curvature->add_option("--seed", seed, "Instance seed");
  curvature->add_option("--out", out, "Also write curvature.json here");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*solve) return Solve(scenario, algorithm, seed, out, breakdown);
    if (*sweep) return Sweep(scenario, out, quiet);
    if (*verify) return Verify(scenario, scale, seed, json_path);
    if (*curvature) return Curvature(scenario, seed, out);
  } catch (const moecache::ValidationError& e) {
    std::fprintf(stderr, "validation error: %s\n", e.what());
    return kExitValidation;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitComputation;
  }
  return 0;
}
