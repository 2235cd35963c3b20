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

// Slow, independent reference computations used to cross-check the fast
// paths: exhaustive knapsack and routing enumeration, the single-expert
// routing closed form, a from-scratch objective, and exhaustive per-server
// subproblem search.

#ifndef MOECACHE_ORACLES_H_
#define MOECACHE_ORACLES_H_

#include <cstdint>
#include <span>
#include <vector>

#include "moecache/catalog.h"
#include "moecache/instance.h"
#include "moecache/knapsack.h"
#include "moecache/optimizers.h"
#include "moecache/placement.h"

namespace moecache {

// All 2^n subsets; at most 25 items. Weights are compared in bytes.
KnapsackResult ExhaustiveKnapsack(std::span<const KnapsackItem> items,
                                  std::uint64_t capacity);

// Single needed expert: cheapest forward + compute + return over the
// non-associated servers that cache it, from the link model directly.
double SingleExpertRoutingCost(const Instance& instance, int user,
                               ExpertIndex expert, const Placement& placement);

// Tries every assignment of needed experts to non-associated holders.
double ExhaustiveRoutingCost(const Instance& instance, int user,
                             std::span<const ExpertIndex> needed,
                             const Placement& placement);

// Objective summed straight from the activation profile through the
// breakdown path.
double ReferenceObjective(const Instance& instance, const Placement& placement);

struct SubproblemOptimum {
  std::vector<ExpertIndex> experts;
  double value = 0.0;
};

// max Value(X) (or SuperValue) over subsets of `candidates` that fit in
// `capacity` bytes. At most 25 candidates.
SubproblemOptimum BruteForceSubproblem(const SubproblemView& view,
                                       std::span<const ExpertIndex> candidates,
                                       std::uint64_t capacity, bool super_only);

}  // namespace moecache

#endif  // MOECACHE_ORACLES_H_
