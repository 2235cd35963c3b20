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

#include "moecache/optimizers.h"

#include <algorithm>
#include <limits>
#include <numeric>
#include <string>

#include "moecache/error.h"
#include "moecache/latency.h"
#include "moecache/rng.h"

namespace moecache {
namespace {

std::uint64_t Bit(int server) { return std::uint64_t{1} << server; }

bool IsSuper(const Instance& instance, const Query& q) {
  return instance.catalog().model(q.model).top_k > 1;
}

// Calls fn(query index) once for every query touching any expert of `set`.
template <typename Fn>
void ForAffected(const Instance& instance, std::span<const ExpertIndex> set,
                 std::vector<std::uint8_t>& seen, Fn fn) {
  for (ExpertIndex e : set) {
    for (int qi : instance.queries_with(e)) {
      if (seen[qi]) continue;
      seen[qi] = 1;
      fn(qi);
    }
  }
}

}  // namespace

SubproblemView::SubproblemView(const Instance& instance, int server,
                               const Placement& prior)
    : instance_(instance), server_(server), prior_(prior) {
  if (server < 0 || server >= instance.num_servers()) {
    throw ValidationError("server", "out of range");
  }
  const auto holders = prior.holder_masks();
  const auto queries = instance.queries();
  prior_latency_.resize(queries.size());
  for (size_t qi = 0; qi < queries.size(); ++qi) {
    prior_latency_[qi] = QueryLatency(instance, queries[qi], holders);
  }
}

double SubproblemView::Evaluate(std::span<const ExpertIndex> set,
                                bool super_only) const {
  std::vector<std::uint64_t> holders(prior_.holder_masks().begin(),
                                     prior_.holder_masks().end());
  for (ExpertIndex e : set) holders[e] |= Bit(server_);
  std::vector<std::uint8_t> seen(instance_.queries().size(), 0);
  double total = 0.0;
  const auto queries = instance_.queries();
  ForAffected(instance_, set, seen, [&](int qi) {
    const Query& q = queries[qi];
    if (super_only && !IsSuper(instance_, q)) return;
    total += q.weight * (prior_latency_[qi] - QueryLatency(instance_, q, holders));
  });
  return total;
}

double SubproblemView::Value(std::span<const ExpertIndex> set) const {
  return Evaluate(set, false);
}

double SubproblemView::SuperValue(std::span<const ExpertIndex> set) const {
  return Evaluate(set, true);
}

double SubproblemView::Marginal(ExpertIndex z, std::span<const ExpertIndex> base,
                                bool super_only) const {
  std::vector<std::uint64_t> holders(prior_.holder_masks().begin(),
                                     prior_.holder_masks().end());
  for (ExpertIndex e : base) holders[e] |= Bit(server_);
  if (holders[z] & Bit(server_)) return 0.0;
  const auto queries = instance_.queries();
  double total = 0.0;
  for (int qi : instance_.queries_with(z)) {
    const Query& q = queries[qi];
    if (super_only && !IsSuper(instance_, q)) continue;
    const double without = QueryLatency(instance_, q, holders);
    holders[z] |= Bit(server_);
    const double with = QueryLatency(instance_, q, holders);
    holders[z] &= ~Bit(server_);
    total += q.weight * (without - with);
  }
  return total;
}

std::vector<ItemValue> SubproblemView::ItemValues() const {
  std::vector<std::uint64_t> holders(prior_.holder_masks().begin(),
                                     prior_.holder_masks().end());
  const auto queries = instance_.queries();
  const ExpertCatalog& catalog = instance_.catalog();
  std::vector<ItemValue> items;
  for (ExpertIndex e : instance_.demanded_experts()) {
    if (holders[e] & Bit(server_)) continue;
    holders[e] |= Bit(server_);
    double value = 0.0;
    for (int qi : instance_.queries_with(e)) {
      const Query& q = queries[qi];
      value += q.weight * (prior_latency_[qi] - QueryLatency(instance_, q, holders));
    }
    holders[e] &= ~Bit(server_);
    const ModelSpec& spec = catalog.model(catalog.ModelOf(e));
    items.push_back({e, spec.expert_bytes, value,
                     spec.top_k > 1 ? ItemKind::kSupermodular : ItemKind::kModular});
  }
  return items;
}

std::vector<ExpertIndex> SubproblemView::SupermodularGroundSet() const {
  std::vector<ExpertIndex> ground;
  const ExpertCatalog& catalog = instance_.catalog();
  for (ExpertIndex e : instance_.demanded_experts()) {
    if (prior_.Contains(server_, e)) continue;
    if (catalog.model(catalog.ModelOf(e)).top_k > 1) ground.push_back(e);
  }
  return ground;
}

Placement GreedyPlacement(const Instance& instance, GreedyStats* stats) {
  const int servers = instance.num_servers();
  const auto queries = instance.queries();
  const ExpertCatalog& catalog = instance.catalog();
  Placement placement(catalog, servers);
  std::vector<std::uint64_t> holders(instance.num_experts(), 0);
  std::vector<double> current(queries.size());
  for (size_t qi = 0; qi < queries.size(); ++qi) current[qi] = queries[qi].max_latency;
  std::vector<std::uint64_t> remaining(servers);
  for (int n = 0; n < servers; ++n) {
    remaining[n] = instance.topology().servers[n].capacity_bytes;
  }
  const auto demanded = instance.demanded_experts();
  std::uint64_t min_bytes = std::numeric_limits<std::uint64_t>::max();
  for (ExpertIndex e : demanded) min_bytes = std::min(min_bytes, catalog.ExpertBytes(e));

  GreedyStats local_stats;
  while (true) {
    int best_server = -1;
    ExpertIndex best_expert = -1;
    double best_density = -std::numeric_limits<double>::infinity();
    for (int n = 0; n < servers; ++n) {
      if (remaining[n] < min_bytes) continue;
      for (ExpertIndex e : demanded) {
        const std::uint64_t bytes = catalog.ExpertBytes(e);
        if ((holders[e] & Bit(n)) || bytes > remaining[n]) continue;
        holders[e] |= Bit(n);
        double gain = 0.0;
        for (int qi : instance.queries_with(e)) {
          gain += queries[qi].weight *
                  (current[qi] - QueryLatency(instance, queries[qi], holders));
        }
        holders[e] &= ~Bit(n);
        ++local_stats.marginal_evaluations;
        const double density = gain / static_cast<double>(bytes);
        if (density > best_density) {
          best_density = density;
          best_server = n;
          best_expert = e;
        }
      }
    }
    if (best_server < 0) break;
    holders[best_expert] |= Bit(best_server);
    placement.Add(best_server, best_expert);
    remaining[best_server] -= catalog.ExpertBytes(best_expert);
    for (int qi : instance.queries_with(best_expert)) {
      current[qi] = QueryLatency(instance, queries[qi], holders);
    }
    ++local_stats.steps;
  }
  if (stats) *stats = local_stats;
  return placement;
}

std::uint64_t CatalogGridUnit(const ExpertCatalog& catalog,
                              std::uint64_t fallback) {
  std::uint64_t g = 0;
  for (const ModelSpec& spec : catalog.models()) g = std::gcd(g, spec.expert_bytes);
  return g == 0 ? fallback : g;
}

SuccessiveResult SuccessivePlacement(const Instance& instance,
                                     const SuccessiveOptions& options) {
  const int servers = instance.num_servers();
  const Topology& topology = instance.topology();
  SuccessiveResult result;
  result.placement = Placement(instance.catalog(), servers);
  result.subproblem_value.assign(servers, 0.0);
  result.surrogate_value.assign(servers, 0.0);
  result.unit = CatalogGridUnit(instance.catalog(), options.fallback_unit);
  result.order.resize(servers);
  std::iota(result.order.begin(), result.order.end(), 0);
  if (options.order == ServerOrder::kDescendingCapacity) {
    std::stable_sort(result.order.begin(), result.order.end(), [&](int a, int b) {
      return topology.servers[a].capacity_bytes > topology.servers[b].capacity_bytes;
    });
  }

  for (int n : result.order) {
    result.priors.push_back(result.placement);
    const SubproblemView view(instance, n, result.priors.back());
    const std::vector<ItemValue> values = view.ItemValues();
    std::vector<KnapsackItem> items;
    std::uint64_t total_weight = 0;
    for (const ItemValue& iv : values) {
      items.push_back({iv.weight, iv.value});
      total_weight += iv.weight;
    }
    // A capacity above the total item weight behaves like the total.
    const auto capacity = static_cast<std::int64_t>(
        std::min(topology.servers[n].capacity_bytes, total_weight));
    const KnapsackResult solved =
        options.solver == KnapsackSolver::kDp
            ? DpKnapsack(items, capacity, result.unit)
            : AcceleratedKnapsack(items, capacity, result.unit, options.convolution);
    std::vector<ExpertIndex> chosen;
    for (int i : solved.selected) chosen.push_back(values[i].expert);
    result.surrogate_value[n] = solved.value;
    result.subproblem_value[n] = view.Value(chosen);
    for (ExpertIndex e : chosen) result.placement.Add(n, e);
  }
  return result;
}

Placement LfuPlacement(const Instance& instance) {
  const ExpertCatalog& catalog = instance.catalog();
  const int experts = instance.num_experts();
  Placement placement(catalog, instance.num_servers());
  for (int n = 0; n < instance.num_servers(); ++n) {
    std::vector<double> freq(experts, 0.0);
    for (const Query& q : instance.queries()) {
      if (q.server != n) continue;
      for (int i = 0; i < q.k; ++i) {
        if (!((q.local_mask >> i) & 1U)) freq[q.experts[i]] += q.weight;
      }
    }
    std::vector<ExpertIndex> order(experts);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](ExpertIndex a, ExpertIndex b) { return freq[a] > freq[b]; });
    std::uint64_t left = instance.topology().servers[n].capacity_bytes;
    for (ExpertIndex e : order) {
      const std::uint64_t bytes = catalog.ExpertBytes(e);
      if (bytes > left) continue;
      placement.Add(n, e);
      left -= bytes;
    }
  }
  return placement;
}

Placement RandomPlacement(const Instance& instance, std::uint64_t seed) {
  const ExpertCatalog& catalog = instance.catalog();
  const int experts = instance.num_experts();
  Placement placement(catalog, instance.num_servers());
  for (int n = 0; n < instance.num_servers(); ++n) {
    Rng rng(DeriveSeed(seed, {static_cast<std::uint64_t>(n)}));
    std::vector<ExpertIndex> order(experts);
    std::iota(order.begin(), order.end(), 0);
    // Explicit Fisher-Yates keeps the order independent of the standard
    // library's shuffle.
    for (int i = experts - 1; i > 0; --i) {
      std::swap(order[i], order[rng() % static_cast<std::uint64_t>(i + 1)]);
    }
    std::uint64_t left = instance.topology().servers[n].capacity_bytes;
    for (ExpertIndex e : order) {
      const std::uint64_t bytes = catalog.ExpertBytes(e);
      if (bytes > left) continue;
      placement.Add(n, e);
      left -= bytes;
    }
  }
  return placement;
}

namespace {

void FeasibleSubsets(const ExpertCatalog& catalog,
                     std::span<const ExpertIndex> candidates, size_t start,
                     std::uint64_t left, std::vector<ExpertIndex>& current,
                     std::vector<std::vector<ExpertIndex>>& out,
                     std::uint64_t cap) {
  out.push_back(current);
  if (out.size() > cap) {
    throw ComputationError("brute force: per-server subsets exceed the cap");
  }
  for (size_t i = start; i < candidates.size(); ++i) {
    const std::uint64_t bytes = catalog.ExpertBytes(candidates[i]);
    if (bytes > left) continue;
    current.push_back(candidates[i]);
    FeasibleSubsets(catalog, candidates, i + 1, left - bytes, current, out, cap);
    current.pop_back();
  }
}

}  // namespace

BruteForceResult BruteForceOptimal(const Instance& instance, std::uint64_t cap) {
  const ExpertCatalog& catalog = instance.catalog();
  const int servers = instance.num_servers();
  const auto demanded = instance.demanded_experts();
  std::vector<std::vector<std::vector<ExpertIndex>>> options(servers);
  std::uint64_t space = 1;
  for (int n = 0; n < servers; ++n) {
    std::vector<ExpertIndex> current;
    FeasibleSubsets(catalog, demanded, 0,
                    instance.topology().servers[n].capacity_bytes, current,
                    options[n], cap);
    if (options[n].size() > cap / space) {
      throw ComputationError("brute force: search space exceeds the cap of " +
                             std::to_string(cap));
    }
    space *= options[n].size();
  }

  const auto queries = instance.queries();
  std::vector<size_t> pick(servers, 0);
  std::vector<std::uint64_t> holders(instance.num_experts(), 0);
  BruteForceResult result;
  std::vector<size_t> best_pick = pick;
  bool first = true;
  while (true) {
    std::fill(holders.begin(), holders.end(), 0);
    for (int n = 0; n < servers; ++n) {
      for (ExpertIndex e : options[n][pick[n]]) holders[e] |= Bit(n);
    }
    double value = 0.0;
    for (const Query& q : queries) {
      value += q.weight * (q.max_latency - QueryLatency(instance, q, holders));
    }
    ++result.evaluated;
    if (first || value > result.value) {
      result.value = value;
      best_pick = pick;
      first = false;
    }
    int n = 0;
    while (n < servers && ++pick[n] == options[n].size()) pick[n++] = 0;
    if (n == servers) break;
  }
  result.placement = Placement(catalog, servers);
  for (int n = 0; n < servers; ++n) {
    for (ExpertIndex e : options[n][best_pick[n]]) result.placement.Add(n, e);
  }
  return result;
}

}  // namespace moecache
