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

#include "moecache/sweep.h"

#include <chrono>

#include "moecache/error.h"
#include "moecache/latency.h"
#include "moecache/rng.h"

namespace moecache {
namespace {

constexpr std::uint64_t kRandomAlgorithmStream = 0x7a9d;

double Seconds(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

}  // namespace

RunOptions OptionsFor(const Scenario& scenario) {
  RunOptions options;
  options.successive = scenario.successive;
  options.brute_force_cap = scenario.brute_force_cap;
  return options;
}

AlgorithmRun RunAlgorithm(const Instance& instance, const std::string& algorithm,
                          std::uint64_t seed, const RunOptions& options) {
  AlgorithmRun run;
  run.algorithm = algorithm;
  std::optional<SuccessiveResult> successive;
  const auto start = std::chrono::steady_clock::now();
  if (algorithm == "greedy") {
    GreedyStats stats;
    run.placement = GreedyPlacement(instance, &stats);
    run.greedy_stats = stats;
  } else if (algorithm == "dp" || algorithm == "accel") {
    SuccessiveOptions o = options.successive;
    o.solver = algorithm == "dp" ? KnapsackSolver::kDp : KnapsackSolver::kAccelerated;
    successive = SuccessivePlacement(instance, o);
    run.placement = successive->placement;
  } else if (algorithm == "lfu") {
    run.placement = LfuPlacement(instance);
  } else if (algorithm == "random") {
    run.placement = RandomPlacement(instance, DeriveSeed(seed, {kRandomAlgorithmStream}));
  } else if (algorithm == "brute") {
    run.placement = BruteForceOptimal(instance, options.brute_force_cap).placement;
  } else {
    throw ValidationError("algorithm", "unknown algorithm '" + algorithm + "'");
  }
  run.runtime_s = Seconds(start);
  run.capacity_ok = SatisfiesCapacity(run.placement, instance.topology());
  run.objective = ObjectiveUnchecked(instance, run.placement);
  run.average_latency = AverageLatency(instance, run.placement);
  run.max_average_latency = instance.max_average_latency();
  if (successive && options.compute_curvature) {
    run.curvature = BuildCurvatureReport(instance, *successive);
  }
  return run;
}

ResultRow MakeRow(const std::string& axis, double sweep_value, std::uint64_t seed,
                  const Instance& instance, const AlgorithmRun& run) {
  ResultRow row;
  row.axis = axis;
  row.sweep_value = sweep_value;
  row.algorithm = run.algorithm;
  row.seed = seed;
  row.average_latency = run.average_latency;
  row.objective = run.objective;
  row.runtime_s = run.runtime_s;
  row.placed = run.placement.size();
  row.capacity_ok = run.capacity_ok;
  row.exact_routing = instance.exact_routing();
  if (run.curvature) {
    row.kappa_max = run.curvature->global;
    row.implied_bound = run.curvature->implied_bound;
    row.kappa_closed_form = run.curvature->closed_form.value;
  }
  return row;
}

double CurrentAxisValue(const Scenario& scenario, SweepAxis axis) {
  const TopologySpec& t = scenario.topology;
  switch (axis) {
    case SweepAxis::kServerCapacity:
      return static_cast<double>(t.server_capacities ? t.server_capacities->front()
                                                     : t.server_capacity_bytes);
    case SweepAxis::kLocalBudget: return scenario.workload.local_budget;
    case SweepAxis::kModelsPerUser: return scenario.workload.models_per_user_max;
    case SweepAxis::kUserBandwidth: return t.user_bandwidth_hz;
    case SweepAxis::kNumServers: return t.num_servers;
    case SweepAxis::kNumUsers: return t.num_users;
  }
  return 0.0;
}

std::vector<ResultRow> RunSweep(const Scenario& scenario, const ProgressFn& progress) {
  scenario.Validate();
  const std::string axis = SweepAxisName(scenario.sweep.axis);
  const RunOptions options = OptionsFor(scenario);
  std::vector<ResultRow> rows;
  for (double value : scenario.sweep.values) {
    for (std::uint64_t seed : scenario.seeds) {
      std::unique_ptr<Instance> instance;
      std::string build_error;
      try {
        instance = BuildInstance(WithAxisValue(scenario, scenario.sweep.axis, value), seed);
      } catch (const std::exception& e) {
        build_error = e.what();
      }
      for (const std::string& algorithm : scenario.algorithms) {
        ResultRow row;
        if (instance) {
          try {
            row = MakeRow(axis, value, seed, *instance,
                          RunAlgorithm(*instance, algorithm, seed, options));
          } catch (const std::exception& e) {
            row = ResultRow{};
            row.ok = false;
            row.error = e.what();
          }
        } else {
          row.ok = false;
          row.error = build_error;
        }
        row.axis = axis;
        row.sweep_value = value;
        row.algorithm = algorithm;
        row.seed = seed;
        if (progress) progress(row);
        rows.push_back(std::move(row));
      }
    }
  }
  return rows;
}

}  // namespace moecache
