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

// Running named algorithms on instances and sweeping a scenario's axis.

#ifndef MOECACHE_SWEEP_H_
#define MOECACHE_SWEEP_H_

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "moecache/curvature.h"
#include "moecache/instance.h"
#include "moecache/optimizers.h"
#include "moecache/placement.h"
#include "moecache/scenario.h"

namespace moecache {

struct AlgorithmRun {
  std::string algorithm;
  Placement placement;
  double objective = 0.0;
  double average_latency = 0.0;
  double max_average_latency = 0.0;
  double runtime_s = 0.0;  // optimizer only, wall clock
  bool capacity_ok = true;
  std::optional<CurvatureReport> curvature;  // dp and accel
  std::optional<GreedyStats> greedy_stats;
};

struct RunOptions {
  SuccessiveOptions successive;
  std::uint64_t brute_force_cap = kDefaultBruteForceCap;
  bool compute_curvature = true;
};

// One of greedy | dp | accel | lfu | random | brute. Throws ValidationError
// for an unknown name.
AlgorithmRun RunAlgorithm(const Instance& instance, const std::string& algorithm,
                          std::uint64_t seed, const RunOptions& options = {});

RunOptions OptionsFor(const Scenario& scenario);

struct ResultRow {
  std::string axis;
  double sweep_value = 0.0;
  std::string algorithm;
  std::uint64_t seed = 0;
  bool ok = true;
  std::string error;
  double average_latency = 0.0;
  double objective = 0.0;
  double runtime_s = 0.0;
  int placed = 0;
  bool capacity_ok = true;
  bool exact_routing = true;
  std::optional<double> kappa_max;
  std::optional<double> implied_bound;
  std::optional<double> kappa_closed_form;
};

ResultRow MakeRow(const std::string& axis, double sweep_value, std::uint64_t seed,
                  const Instance& instance, const AlgorithmRun& run);

// Current value of the axis in the scenario (first server's capacity for
// server_capacity).
double CurrentAxisValue(const Scenario& scenario, SweepAxis axis);

using ProgressFn = std::function<void(const ResultRow&)>;

// Rows ordered by (sweep value, seed, algorithm) in scenario order. A cell
// that throws becomes an error row and the sweep continues.
std::vector<ResultRow> RunSweep(const Scenario& scenario,
                                const ProgressFn& progress = nullptr);

}  // namespace moecache

#endif  // MOECACHE_SWEEP_H_
