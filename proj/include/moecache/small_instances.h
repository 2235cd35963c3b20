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

// Generators for tiny instances used by property tests and the verify
// command, plus the exhaustive search for non-submodularity witnesses.

#ifndef MOECACHE_SMALL_INSTANCES_H_
#define MOECACHE_SMALL_INSTANCES_H_

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "moecache/catalog.h"
#include "moecache/instance.h"
#include "moecache/placement.h"

namespace moecache {

// A model with a 4 KiB embedding and 1 GFLOP experts.
ModelSpec SmallModel(const std::string& id, int layers, int experts, int top_k,
                     std::uint64_t expert_bytes = 1 << 20);

// Random instances kept in the regime where communication dominates:
// backhaul hops are slower than an edge expert computation and a backhaul
// round trip is cheaper than one cloud hop. In that regime adding an expert
// never increases latency.
struct SmallInstanceConfig {
  int num_servers = 2;
  int num_users = 2;
  std::vector<ModelSpec> models;
  // Capacity of every server as a multiple of the largest expert size.
  int experts_per_server = 3;
  int local_budget = 0;
  double min_backhaul_bps = 1e7;
  double max_backhaul_bps = 1e8;
  double cloud_latency_s = 0.01;
  // Probability that a subset is dropped from a layer table.
  double sparsity = 0.3;
};

std::unique_ptr<Instance> MakeSmallInstance(const SmallInstanceConfig& config,
                                            std::uint64_t seed);

// Four servers A..D in a row with round trips from A increasing toward D,
// one user on A, and one top-2 layer of two experts whose only subset fires
// with probability one.
std::unique_ptr<Instance> MakeWitnessInstance();

struct MarginalWitness {
  Placement smaller;  // subset of `larger`
  Placement larger;
  int server = 0;
  ExpertIndex expert = 0;
  // F(expert | larger) - F(expert | smaller)
  double difference = 0.0;
};

struct WitnessSearchResult {
  std::optional<MarginalWitness> positive;  // largest difference found
  std::optional<MarginalWitness> negative;  // smallest difference found
  std::uint64_t triples = 0;
};

// Enumerates every nested pair of placements over the demanded experts and
// every added (server, expert) outside the larger one, ignoring capacity.
// Needs servers * demanded experts <= 12.
WitnessSearchResult SearchMarginalWitnesses(const Instance& instance,
                                            double tolerance = 1e-12);

}  // namespace moecache

#endif  // MOECACHE_SMALL_INSTANCES_H_
