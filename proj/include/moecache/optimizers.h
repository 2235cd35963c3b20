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

// Placement optimizers: density greedy, successive per-server decomposition
// solved as knapsacks, the LFU and random baselines, and exhaustive search.

#ifndef MOECACHE_OPTIMIZERS_H_
#define MOECACHE_OPTIMIZERS_H_

#include <cstdint>
#include <span>
#include <vector>

#include "moecache/catalog.h"
#include "moecache/instance.h"
#include "moecache/knapsack.h"
#include "moecache/placement.h"

namespace moecache {

enum class ItemKind {
  kModular,       // expert of a model with top_k = 1
  kSupermodular,  // expert of a model with top_k > 1
};

struct ItemValue {
  ExpertIndex expert = 0;
  std::uint64_t weight = 0;
  double value = 0.0;
  ItemKind kind = ItemKind::kModular;
};

// Marginal objective of adding experts to one server on top of a fixed prior
// placement: Value(X) = F(prior + X on server) - F(prior). Holds references;
// instance and prior must outlive the view.
class SubproblemView {
 public:
  SubproblemView(const Instance& instance, int server, const Placement& prior);

  int server() const { return server_; }
  const Placement& prior() const { return prior_; }

  double Value(std::span<const ExpertIndex> set) const;
  // Restricted to queries of models with top_k > 1.
  double SuperValue(std::span<const ExpertIndex> set) const;
  // Value(base + z) - Value(base), or the super-only variant.
  double Marginal(ExpertIndex z, std::span<const ExpertIndex> base,
                  bool super_only) const;

  // Singleton values for every demanded expert not yet on the server, in
  // ascending expert order.
  std::vector<ItemValue> ItemValues() const;
  // Demanded experts of top_k > 1 models not yet on the server.
  std::vector<ExpertIndex> SupermodularGroundSet() const;

 private:
  double Evaluate(std::span<const ExpertIndex> set, bool super_only) const;

  const Instance& instance_;
  int server_;
  const Placement& prior_;
  std::vector<double> prior_latency_;  // per query
};

struct GreedyStats {
  int steps = 0;
  std::int64_t marginal_evaluations = 0;
};

// Repeatedly adds the feasible (server, expert) pair with the largest
// marginal gain per byte until nothing fits. Ties go to the lowest server id,
// then the lowest expert index.
Placement GreedyPlacement(const Instance& instance, GreedyStats* stats = nullptr);

enum class KnapsackSolver { kDp, kAccelerated };
enum class ServerOrder { kAscendingId, kDescendingCapacity };

struct SuccessiveOptions {
  KnapsackSolver solver = KnapsackSolver::kAccelerated;
  ServerOrder order = ServerOrder::kAscendingId;
  ConvolutionMethod convolution = ConvolutionMethod::kMonotone;
  std::uint64_t fallback_unit = 1 << 20;
};

struct SuccessiveResult {
  Placement placement;
  std::vector<int> order;             // servers in processing order
  std::vector<Placement> priors;      // prior seen by order[i]
  std::vector<double> subproblem_value;  // Value(X_n) per server id
  std::vector<double> surrogate_value;   // knapsack optimum per server id
  std::uint64_t unit = 0;
};

// Grid unit for a catalog: gcd of every model's expert size.
std::uint64_t CatalogGridUnit(const ExpertCatalog& catalog,
                              std::uint64_t fallback = 1 << 20);

SuccessiveResult SuccessivePlacement(const Instance& instance,
                                     const SuccessiveOptions& options = {});

// Each server caches experts by decreasing request frequency from its own
// users (device-cached hits excluded), skipping any that no longer fit.
Placement LfuPlacement(const Instance& instance);

// Each server visits all experts in a seeded random order and caches those
// that still fit.
Placement RandomPlacement(const Instance& instance, std::uint64_t seed);

struct BruteForceResult {
  Placement placement;
  double value = 0.0;
  std::uint64_t evaluated = 0;
};

inline constexpr std::uint64_t kDefaultBruteForceCap = 10'000'000;

// Exhaustive search over capacity-feasible placements of demanded experts.
// Throws ComputationError when the search space exceeds `cap`. Ties keep the
// first placement found.
BruteForceResult BruteForceOptimal(const Instance& instance,
                                   std::uint64_t cap = kDefaultBruteForceCap);

}  // namespace moecache

#endif  // MOECACHE_OPTIMIZERS_H_
