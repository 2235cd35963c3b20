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

// Per-token latency model. A token needing the size-K subset S at one MoE
// layer is served locally when all of S is on the device; otherwise it goes
// up to the associated server, which runs what it caches, forwards the rest
// to other servers that cache them (one forward and one compute per used
// server, one return per served expert) and sends whatever nobody caches to
// the cloud. Every non-local expert's output comes back over the downlink.

#ifndef MOECACHE_LATENCY_H_
#define MOECACHE_LATENCY_H_

#include <cstdint>
#include <span>
#include <vector>

#include "moecache/catalog.h"
#include "moecache/instance.h"
#include "moecache/placement.h"

namespace moecache {

struct BetaCounts {
  int local = 0;
  int associated = 0;
  int cloud = 0;
  int other_edges = 0;
};

struct RoutingDecision {
  struct Assignment {
    ExpertIndex expert = 0;
    int server = 0;
  };
  std::vector<Assignment> assignment;  // in the order experts were given
  std::vector<int> served;             // experts served, per server
  double cost = 0.0;                   // forward + compute + return latency
  bool exact = true;
};

struct LatencyBreakdown {
  double uplink = 0.0;
  double downlink = 0.0;
  double edge_compute = 0.0;
  double backhaul = 0.0;
  double cloud = 0.0;
  double local_compute = 0.0;
  double total = 0.0;
};

// A non-local expert that some non-associated server caches; `holders` has
// the associated server's bit cleared.
struct RemoteExpert {
  ExpertIndex expert = 0;
  std::uint64_t holders = 0;
};

BetaCounts CountActivated(const Instance& instance, int user,
                          std::span<const ExpertIndex> subset,
                          const Placement& placement);

// Cheapest way to serve `needed` from non-associated servers. Every needed
// expert must be cached on some server other than the user's associated one;
// a ComputationError is raised otherwise.
RoutingDecision RouteOtherEdges(const Instance& instance, int user,
                                std::span<const ExpertIndex> needed,
                                const Placement& placement);

LatencyBreakdown TokenLatency(const Instance& instance, int user,
                              std::span<const ExpertIndex> subset,
                              const Placement& placement);

// Latency with every non-local expert served by the cloud.
double MaxTokenLatency(const Instance& instance, int user,
                       std::span<const ExpertIndex> subset);

// Hot path for optimizers: latency of one query under the given per-expert
// holder masks.
double QueryLatency(const Instance& instance, const Query& query,
                    std::span<const std::uint64_t> holders);

// Average latency reduction relative to cloud-only serving of every
// non-local expert. Throws ValidationError if a server is over capacity.
double Objective(const Instance& instance, const Placement& placement);
// Same without the capacity check (for set-function analysis over the
// unconstrained ground set).
double ObjectiveUnchecked(const Instance& instance, const Placement& placement);

// Demand-weighted average per-token latency, summed over layers, averaged
// over users.
double AverageLatency(const Instance& instance, const Placement& placement);
// Expected per-token latency summed over the model's layers for one user.
double AvgModelLatency(const Instance& instance, int user, int model,
                       const Placement& placement);

struct QueryBreakdownRow {
  int user = 0;
  int model = 0;
  int layer = 0;
  ExpertSubset subset;
  double probability = 0.0;  // p_{u,S}
  LatencyBreakdown latency;
};

std::vector<QueryBreakdownRow> AllBreakdowns(const Instance& instance,
                                             const Placement& placement);

}  // namespace moecache

#endif  // MOECACHE_LATENCY_H_
