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

// Scenario files: JSON with unit-tagged quantities, defaults for every
// omitted field, and deterministic construction of instances per seed.

#ifndef MOECACHE_SCENARIO_H_
#define MOECACHE_SCENARIO_H_

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "moecache/catalog.h"
#include "moecache/instance.h"
#include "moecache/network.h"
#include "moecache/optimizers.h"
#include "moecache/workload.h"

namespace moecache {

// Twelve models: three switch-style top-1 families and three top-2 MoE
// language/vision models, each in two fine-tuned variants with distinct
// experts.
std::vector<ModelSpec> DefaultModelLibrary();

enum class SweepAxis {
  kServerCapacity,  // bytes per server
  kLocalBudget,     // experts per user device
  kModelsPerUser,   // both ends of the range
  kUserBandwidth,   // Hz
  kNumServers,
  kNumUsers,
};

std::string SweepAxisName(SweepAxis axis);

struct NodePosition {
  double x = 0.0;
  double y = 0.0;
};

struct TopologySpec {
  int num_servers = 4;
  int num_users = 20;
  double area_m = 1000.0;
  std::optional<std::vector<NodePosition>> server_positions;
  std::optional<std::vector<NodePosition>> user_positions;
  std::uint64_t server_capacity_bytes = 5'000'000'000ULL;
  std::optional<std::vector<std::uint64_t>> server_capacities;
  double server_tx_power_w = 6.30957344480193;
  double server_compute_flops = 82.58e12;
  double user_bandwidth_hz = 5e6;
  double user_tx_power_w = 0.01;
  double user_compute_flops = 50e12;
  double backhaul_bandwidth_hz = 100e6;
  std::optional<std::vector<std::vector<double>>> backhaul_rates_bps;
  CloudHop cloud;
  double cloud_compute_flops = 312e12;
  double path_loss_exponent = 4.0;
  double noise_psd_w_per_hz = 3.981071705534972e-21;
  double antenna_gain_ul = 1.0;
  double antenna_gain_dl = 1.0;
  double min_distance_m = 1.0;
};

struct WorkloadSpec {
  double zipf_exponent = 1.0;
  int models_per_user_min = 3;
  int models_per_user_max = 5;
  int local_budget = 50;
  int num_tokens = 1000;
  GatingParams gating;
  // When set, the activation profile (and optionally the device caches)
  // come from CSV tables instead of the synthetic router.
  std::optional<std::string> requests_csv;
  std::optional<std::string> subsets_csv;
  std::optional<std::string> local_cache_csv;
};

struct SweepSpec {
  SweepAxis axis = SweepAxis::kServerCapacity;
  std::vector<double> values = {1.25e9, 2.5e9, 5e9, 6.25e9, 7.5e9};
};

struct Scenario {
  std::vector<ModelSpec> models = DefaultModelLibrary();
  TopologySpec topology;
  WorkloadSpec workload;
  std::vector<std::string> algorithms = {"accel", "greedy", "lfu", "random"};
  SweepSpec sweep;
  std::vector<std::uint64_t> seeds = {0, 1, 2, 3, 4, 5, 6, 7, 8, 9};
  InstanceOptions instance_options;
  SuccessiveOptions successive;
  std::uint64_t brute_force_cap = kDefaultBruteForceCap;

  void Validate() const;
};

// Throws ValidationError naming the offending field.
Scenario ParseScenario(const std::string& json_text,
                       const std::string& base_dir = ".");
Scenario LoadScenario(const std::string& path);

// A copy of `scenario` with the sweep axis set to `value`.
Scenario WithAxisValue(const Scenario& scenario, SweepAxis axis, double value);

std::unique_ptr<Instance> BuildInstance(const Scenario& scenario,
                                        std::uint64_t seed);

// Quantity parsing: a bare number is taken in the base unit; strings carry
// a unit suffix.
std::uint64_t ParseBytes(const std::string& text);       // B, KB, MB, GB, KiB, MiB, GiB
double ParsePowerWatts(const std::string& text);         // W, mW, dBm
double ParseFrequencyHz(const std::string& text);        // Hz, kHz, MHz, GHz
double ParseNoisePsd(const std::string& text);           // W/Hz, dBm/Hz
double ParseFlops(const std::string& text);              // FLOPs, GFLOPs, TFLOPs
double ParseSeconds(const std::string& text);            // s, ms, us

}  // namespace moecache

#endif  // MOECACHE_SCENARIO_H_
