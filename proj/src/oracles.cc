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

#include "moecache/oracles.h"

#include <limits>

#include "moecache/error.h"
#include "moecache/latency.h"
#include "moecache/network.h"

namespace moecache {
namespace {

constexpr int kMaxExhaustiveItems = 25;

struct Hops {
  double forward, compute, ret;
};

Hops HopsFor(const Instance& instance, int assoc, int other, int model) {
  const Topology& topology = instance.topology();
  const ModelSpec& spec = instance.catalog().model(model);
  const auto& rates = topology.link.backhaul_rate_bps;
  return {EmbeddingLatency(spec.embedding_bytes, rates[assoc][other]),
          ExpertComputeLatency(NodeKind::kEdge, spec,
                               topology.servers[other].per_expert_compute),
          EmbeddingLatency(spec.embedding_bytes, rates[other][assoc])};
}

}  // namespace

KnapsackResult ExhaustiveKnapsack(std::span<const KnapsackItem> items,
                                  std::uint64_t capacity) {
  if (items.size() > kMaxExhaustiveItems) {
    throw ValidationError("items", "too many for exhaustive enumeration");
  }
  const std::uint32_t n = static_cast<std::uint32_t>(items.size());
  KnapsackResult best;
  for (std::uint32_t mask = 0; mask < (1U << n); ++mask) {
    std::uint64_t weight = 0;
    double value = 0.0;
    for (std::uint32_t i = 0; i < n; ++i) {
      if ((mask >> i) & 1U) {
        weight += items[i].weight;
        value += items[i].value;
      }
    }
    if (weight <= capacity && value > best.value) {
      best.value = value;
      best.selected.clear();
      for (std::uint32_t i = 0; i < n; ++i) {
        if ((mask >> i) & 1U) best.selected.push_back(static_cast<int>(i));
      }
    }
  }
  return best;
}

double SingleExpertRoutingCost(const Instance& instance, int user,
                               ExpertIndex expert, const Placement& placement) {
  const int assoc = instance.topology().users[user].associated_server;
  const int model = instance.catalog().ModelOf(expert);
  double best = std::numeric_limits<double>::infinity();
  for (int n = 0; n < instance.num_servers(); ++n) {
    if (n == assoc || !placement.Contains(n, expert)) continue;
    const Hops h = HopsFor(instance, assoc, n, model);
    const double round_trip = h.forward + h.compute + h.ret;
    if (round_trip < best) best = round_trip;
  }
  return best;
}

double ExhaustiveRoutingCost(const Instance& instance, int user,
                             std::span<const ExpertIndex> needed,
                             const Placement& placement) {
  const int assoc = instance.topology().users[user].associated_server;
  const int servers = instance.num_servers();
  std::vector<std::vector<int>> choices;
  for (ExpertIndex e : needed) {
    std::vector<int> holders;
    for (int n = 0; n < servers; ++n) {
      if (n != assoc && placement.Contains(n, e)) holders.push_back(n);
    }
    if (holders.empty()) throw ComputationError("needed expert has no holder");
    choices.push_back(std::move(holders));
  }
  if (needed.empty()) return 0.0;
  const int model = instance.catalog().ModelOf(needed[0]);
  std::vector<size_t> pick(needed.size(), 0);
  double best = std::numeric_limits<double>::infinity();
  while (true) {
    std::vector<bool> used(servers, false);
    double cost = 0.0;
    for (size_t i = 0; i < needed.size(); ++i) {
      const int n = choices[i][pick[i]];
      const Hops h = HopsFor(instance, assoc, n, model);
      if (!used[n]) {
        used[n] = true;
        cost += h.forward + h.compute;
      }
      cost += h.ret;
    }
    if (cost < best) best = cost;
    size_t i = 0;
    while (i < needed.size() && ++pick[i] == choices[i].size()) pick[i++] = 0;
    if (i == needed.size()) break;
  }
  return best;
}

double ReferenceObjective(const Instance& instance, const Placement& placement) {
  const ActivationProfile& profile = instance.profile();
  double total = 0.0;
  for (int u = 0; u < instance.num_users(); ++u) {
    double user_total = 0.0;
    for (const ModelRequest& req : profile.requests(u)) {
      const ModelSpec& spec = instance.catalog().model(req.model);
      double model_total = 0.0;
      for (int l = 0; l < spec.num_moe_layers; ++l) {
        for (const SubsetProbability& sp : profile.layer({u, req.model, l})) {
          const double worst = MaxTokenLatency(instance, u, sp.experts);
          const double actual = TokenLatency(instance, u, sp.experts, placement).total;
          model_total += sp.probability * (worst - actual);
        }
      }
      user_total += req.probability * model_total;
    }
    total += user_total;
  }
  return total / instance.num_users();
}

SubproblemOptimum BruteForceSubproblem(const SubproblemView& view,
                                       std::span<const ExpertIndex> candidates,
                                       std::uint64_t capacity, bool super_only) {
  if (candidates.size() > kMaxExhaustiveItems) {
    throw ValidationError("candidates", "too many for exhaustive enumeration");
  }
  const ExpertCatalog& catalog = view.prior().catalog();
  const std::uint32_t n = static_cast<std::uint32_t>(candidates.size());
  SubproblemOptimum best;
  std::vector<ExpertIndex> set;
  for (std::uint32_t mask = 0; mask < (1U << n); ++mask) {
    std::uint64_t bytes = 0;
    set.clear();
    for (std::uint32_t i = 0; i < n; ++i) {
      if ((mask >> i) & 1U) {
        bytes += catalog.ExpertBytes(candidates[i]);
        set.push_back(candidates[i]);
      }
    }
    if (bytes > capacity) continue;
    const double value = super_only ? view.SuperValue(set) : view.Value(set);
    if (value > best.value) {
      best.value = value;
      best.experts = set;
    }
  }
  return best;
}

}  // namespace moecache
