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

#include "moecache/latency.h"

#include <bit>
#include <limits>
#include <string>

#include "moecache/error.h"

namespace moecache {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

class RouteCosts {
 public:
  RouteCosts(const Instance& instance, int assoc, int model)
      : instance_(instance), assoc_(assoc), model_(model) {}

  double forward(int n) const { return instance_.backhaul(assoc_, n, model_); }
  double compute(int n) const { return instance_.edge_compute(n, model_); }
  double open(int n) const { return forward(n) + compute(n); }
  double ret(int n) const { return instance_.backhaul(n, assoc_, model_); }

  // Cheapest server in `mask` to return from; lowest id on ties.
  int BestReturn(std::uint64_t mask) const {
    int best = -1;
    double best_cost = kInf;
    while (mask) {
      const int n = std::countr_zero(mask);
      mask &= mask - 1;
      if (ret(n) < best_cost) {
        best_cost = ret(n);
        best = n;
      }
    }
    return best;
  }

  // Cost of serving every needed expert from the servers in `open_mask`, or
  // +inf if some expert has no holder among them.
  double CostOf(std::span<const RemoteExpert> needed,
                std::uint64_t open_mask) const {
    double cost = 0.0;
    for (std::uint64_t m = open_mask; m; m &= m - 1) cost += open(std::countr_zero(m));
    for (const RemoteExpert& r : needed) {
      const std::uint64_t avail = r.holders & open_mask;
      if (!avail) return kInf;
      cost += ret(BestReturn(avail));
    }
    return cost;
  }

 private:
  const Instance& instance_;
  int assoc_;
  int model_;
};

// Enumerates open sets of at most needed.size() servers drawn from the
// union of holders; an optimal set never opens a server that serves nothing.
void Enumerate(const RouteCosts& costs, std::span<const RemoteExpert> needed,
               const std::vector<int>& servers, size_t start, int remaining,
               std::uint64_t current, double& best_cost, std::uint64_t& best) {
  for (size_t i = start; i < servers.size(); ++i) {
    const std::uint64_t next = current | (std::uint64_t{1} << servers[i]);
    const double c = costs.CostOf(needed, next);
    if (c < best_cost) {
      best_cost = c;
      best = next;
    }
    if (remaining > 1) {
      Enumerate(costs, needed, servers, i + 1, remaining - 1, next, best_cost, best);
    }
  }
}

// Greedy open-server heuristic for fleets above the exact-routing cap.
std::uint64_t GreedyOpenSet(const RouteCosts& costs,
                            std::span<const RemoteExpert> needed) {
  std::uint64_t open = 0;
  for (const RemoteExpert& r : needed) {
    if (r.holders & open) continue;
    int best = -1;
    double best_cost = kInf;
    for (std::uint64_t m = r.holders; m; m &= m - 1) {
      const int n = std::countr_zero(m);
      if (costs.open(n) + costs.ret(n) < best_cost) {
        best_cost = costs.open(n) + costs.ret(n);
        best = n;
      }
    }
    open |= std::uint64_t{1} << best;
  }
  return open;
}

// Returns the minimal other-edge cost and writes the chosen open set.
double SolveRouting(const RouteCosts& costs, std::span<const RemoteExpert> needed,
                    bool exact, std::uint64_t* open_out) {
  if (needed.empty()) {
    if (open_out) *open_out = 0;
    return 0.0;
  }
  if (needed.size() == 1) {
    int best = -1;
    double best_cost = kInf;
    for (std::uint64_t m = needed[0].holders; m; m &= m - 1) {
      const int n = std::countr_zero(m);
      const double c = costs.open(n) + costs.ret(n);
      if (c < best_cost) {
        best_cost = c;
        best = n;
      }
    }
    if (open_out) *open_out = std::uint64_t{1} << best;
    return best_cost;
  }
  std::uint64_t open = 0;
  double best_cost = kInf;
  if (exact) {
    std::uint64_t all = 0;
    for (const RemoteExpert& r : needed) all |= r.holders;
    std::vector<int> servers;
    for (std::uint64_t m = all; m; m &= m - 1) servers.push_back(std::countr_zero(m));
    Enumerate(costs, needed, servers, 0, static_cast<int>(needed.size()), 0,
              best_cost, open);
  } else {
    open = GreedyOpenSet(costs, needed);
    best_cost = costs.CostOf(needed, open);
  }
  if (open_out) *open_out = open;
  return best_cost;
}

struct Classified {
  int local = 0;
  int associated = 0;
  int cloud = 0;
  int num_remote = 0;
  std::array<RemoteExpert, kMaxTopK> remote{};

  std::span<const RemoteExpert> needed() const {
    return {remote.data(), static_cast<size_t>(num_remote)};
  }
};

Classified Classify(const Query& q, std::span<const std::uint64_t> holders) {
  Classified c;
  const std::uint64_t assoc_bit = std::uint64_t{1} << q.server;
  for (int i = 0; i < q.k; ++i) {
    if ((q.local_mask >> i) & 1U) {
      ++c.local;
      continue;
    }
    const std::uint64_t h = holders[q.experts[i]];
    if (h & assoc_bit) {
      ++c.associated;
    } else if (h == 0) {
      ++c.cloud;
    } else {
      c.remote[c.num_remote++] = {q.experts[i], h};
    }
  }
  return c;
}

Query MakeQuery(const Instance& instance, int user,
                std::span<const ExpertIndex> subset) {
  if (user < 0 || user >= instance.num_users()) {
    throw std::out_of_range("user " + std::to_string(user));
  }
  if (subset.empty()) throw ValidationError("subset", "must not be empty");
  const ExpertCatalog& catalog = instance.catalog();
  Query q;
  q.user = user;
  q.model = catalog.ModelOf(subset[0]);
  const ModelSpec& spec = catalog.model(q.model);
  q.layer = catalog.ExpertOf(subset[0]).layer;
  if (static_cast<int>(subset.size()) != spec.top_k) {
    throw ValidationError("subset", "size differs from the model's top_k");
  }
  for (ExpertIndex e : subset) {
    const ExpertId id = catalog.ExpertOf(e);
    if (id.model != q.model || id.layer != q.layer) {
      throw ValidationError("subset", "members must share one model layer");
    }
  }
  q.server = instance.associated(user);
  q.k = spec.top_k;
  for (int i = 0; i < q.k; ++i) {
    q.experts[i] = subset[i];
    if (instance.local_cache().cached(user, subset[i])) q.local_mask |= 1U << i;
  }
  return q;
}

void CheckPlacementShape(const Instance& instance, const Placement& placement) {
  if (placement.num_servers() != instance.num_servers() ||
      placement.num_experts() != instance.num_experts()) {
    throw ValidationError("placement", "shape differs from the instance");
  }
}

}  // namespace

BetaCounts CountActivated(const Instance& instance, int user,
                          std::span<const ExpertIndex> subset,
                          const Placement& placement) {
  CheckPlacementShape(instance, placement);
  const Query q = MakeQuery(instance, user, subset);
  const Classified c = Classify(q, placement.holder_masks());
  return BetaCounts{c.local, c.associated, c.cloud, c.num_remote};
}

RoutingDecision RouteOtherEdges(const Instance& instance, int user,
                                std::span<const ExpertIndex> needed,
                                const Placement& placement) {
  CheckPlacementShape(instance, placement);
  RoutingDecision decision;
  decision.served.assign(instance.num_servers(), 0);
  decision.exact = instance.exact_routing();
  if (needed.empty()) return decision;
  const int assoc = instance.associated(user);
  const int model = instance.catalog().ModelOf(needed[0]);
  const std::uint64_t assoc_bit = std::uint64_t{1} << assoc;
  std::vector<RemoteExpert> remote;
  for (ExpertIndex e : needed) {
    const std::uint64_t h = placement.holders(e) & ~assoc_bit;
    if (!h) {
      throw ComputationError("expert " + std::to_string(e) +
                             " is not cached on any non-associated server");
    }
    remote.push_back({e, h});
  }
  const RouteCosts costs(instance, assoc, model);
  std::uint64_t open = 0;
  decision.cost = SolveRouting(costs, remote, decision.exact, &open);
  for (const RemoteExpert& r : remote) {
    const int n = costs.BestReturn(r.holders & open);
    decision.assignment.push_back({r.expert, n});
    ++decision.served[n];
  }
  return decision;
}

double QueryLatency(const Instance& instance, const Query& q,
                    std::span<const std::uint64_t> holders) {
  const int local = std::popcount(q.local_mask);
  if (local == q.k) return instance.local_compute(q.user, q.model);
  const Classified c = Classify(q, holders);
  double edge = c.associated > 0 ? instance.edge_compute(q.server, q.model) : 0.0;
  if (c.num_remote > 0) {
    const RouteCosts costs(instance, q.server, q.model);
    edge += SolveRouting(costs, c.needed(), instance.exact_routing(), nullptr);
  }
  double cloud = 0.0;
  if (c.cloud > 0) {
    cloud = (instance.to_cloud(q.server, q.model) + instance.cloud_compute(q.model)) +
            c.cloud * instance.from_cloud(q.server, q.model);
  }
  return instance.uplink(q.user, q.model) +
         (q.k - local) * instance.downlink(q.user, q.model) + edge + cloud;
}

LatencyBreakdown TokenLatency(const Instance& instance, int user,
                              std::span<const ExpertIndex> subset,
                              const Placement& placement) {
  CheckPlacementShape(instance, placement);
  const Query q = MakeQuery(instance, user, subset);
  LatencyBreakdown b;
  const int local = std::popcount(q.local_mask);
  if (local == q.k) {
    b.local_compute = instance.local_compute(user, q.model);
    b.total = b.local_compute;
    return b;
  }
  const Classified c = Classify(q, placement.holder_masks());
  b.uplink = instance.uplink(user, q.model);
  b.downlink = (q.k - local) * instance.downlink(user, q.model);
  if (c.associated > 0) b.edge_compute = instance.edge_compute(q.server, q.model);
  if (c.num_remote > 0) {
    const RouteCosts costs(instance, q.server, q.model);
    std::uint64_t open = 0;
    SolveRouting(costs, c.needed(), instance.exact_routing(), &open);
    for (std::uint64_t m = open; m; m &= m - 1) {
      const int n = std::countr_zero(m);
      b.backhaul += costs.forward(n);
      b.edge_compute += costs.compute(n);
    }
    for (const RemoteExpert& r : c.needed()) {
      b.backhaul += costs.ret(costs.BestReturn(r.holders & open));
    }
  }
  if (c.cloud > 0) {
    b.cloud = (instance.to_cloud(q.server, q.model) + instance.cloud_compute(q.model)) +
              c.cloud * instance.from_cloud(q.server, q.model);
  }
  b.total = b.uplink + b.downlink + b.edge_compute + b.backhaul + b.cloud;
  return b;
}

double MaxTokenLatency(const Instance& instance, int user,
                       std::span<const ExpertIndex> subset) {
  const Query q = MakeQuery(instance, user, subset);
  const int local = std::popcount(q.local_mask);
  if (local == q.k) return instance.local_compute(user, q.model);
  const int remote = q.k - local;
  // Same operation order as QueryLatency with nothing cached, so the two
  // agree bit-for-bit on an empty placement.
  const double cloud =
      (instance.to_cloud(q.server, q.model) + instance.cloud_compute(q.model)) +
      remote * instance.from_cloud(q.server, q.model);
  return instance.uplink(user, q.model) +
         remote * instance.downlink(user, q.model) + 0.0 + cloud;
}

double ObjectiveUnchecked(const Instance& instance, const Placement& placement) {
  CheckPlacementShape(instance, placement);
  const auto holders = placement.holder_masks();
  double total = 0.0;
  for (const Query& q : instance.queries()) {
    total += q.weight * (q.max_latency - QueryLatency(instance, q, holders));
  }
  return total;
}

double Objective(const Instance& instance, const Placement& placement) {
  CheckPlacementShape(instance, placement);
  const std::vector<int> over = CapacityViolations(placement, instance.topology());
  if (!over.empty()) {
    throw ValidationError("placement", "server " + std::to_string(over.front()) +
                                           " exceeds its storage capacity");
  }
  return ObjectiveUnchecked(instance, placement);
}

double AverageLatency(const Instance& instance, const Placement& placement) {
  CheckPlacementShape(instance, placement);
  const auto holders = placement.holder_masks();
  double total = 0.0;
  for (const Query& q : instance.queries()) {
    total += q.weight * QueryLatency(instance, q, holders);
  }
  return total;
}

double AvgModelLatency(const Instance& instance, int user, int model,
                       const Placement& placement) {
  CheckPlacementShape(instance, placement);
  const auto holders = placement.holder_masks();
  const ModelSpec& spec = instance.catalog().model(model);
  double total = 0.0;
  for (int l = 0; l < spec.num_moe_layers; ++l) {
    for (const SubsetProbability& sp : instance.profile().layer({user, model, l})) {
      total += sp.probability *
               QueryLatency(instance, MakeQuery(instance, user, sp.experts), holders);
    }
  }
  return total;
}

std::vector<QueryBreakdownRow> AllBreakdowns(const Instance& instance,
                                             const Placement& placement) {
  std::vector<QueryBreakdownRow> rows;
  for (int u = 0; u < instance.num_users(); ++u) {
    for (const ModelRequest& req : instance.profile().requests(u)) {
      const ModelSpec& spec = instance.catalog().model(req.model);
      for (int l = 0; l < spec.num_moe_layers; ++l) {
        for (const SubsetProbability& sp : instance.profile().layer({u, req.model, l})) {
          rows.push_back({u, req.model, l, sp.experts, sp.probability,
                          TokenLatency(instance, u, sp.experts, placement)});
        }
      }
    }
  }
  return rows;
}

}  // namespace moecache
