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

// 0/1 knapsack over a quantized byte grid: a textbook DP with traceback and a
// grouped solver for items that come in a few distinct weights.
//
// The grouped solver exploits that, within a group of equal-weight items, the
// best value at capacity q is the sum of the floor(q / w) largest values. That
// sequence is w-step concave, so folding a group into the running DP table is
// a (max,+) convolution of an arbitrary sequence with a concave one, done per
// residue class modulo w.

#ifndef MOECACHE_KNAPSACK_H_
#define MOECACHE_KNAPSACK_H_

#include <cstdint>
#include <span>
#include <vector>

namespace moecache {

struct KnapsackItem {
  std::uint64_t weight = 0;
  double value = 0.0;
};

struct KnapsackResult {
  std::vector<int> selected;  // indices into the item list, ascending
  double value = 0.0;
};

enum class ConvolutionMethod {
  kDirect,    // full O(n^2) scan per residue class
  kMonotone,  // divide and conquer on the monotone argmax
};

// Greatest common divisor of the item weights, or `fallback` if there are
// no items.
std::uint64_t GridUnit(std::span<const KnapsackItem> items,
                       std::uint64_t fallback = 1 << 20);

// Exact optimum. `unit` must divide every weight; capacity is floor-divided
// by it. On ties an item is left out. Items with value <= 0 are never taken.
KnapsackResult DpKnapsack(std::span<const KnapsackItem> items,
                          std::int64_t capacity, std::uint64_t unit);

// Same optimum via per-weight groups and (max,+) convolution. Within a group,
// ties between equal values go to the lower item index; between groups the
// smaller item count wins.
KnapsackResult AcceleratedKnapsack(
    std::span<const KnapsackItem> items, std::int64_t capacity,
    std::uint64_t unit, ConvolutionMethod method = ConvolutionMethod::kMonotone);

// (a (+) z)_q = max_{0 <= l <= q/step, l < z.size()} a[q - l*step] + z[l].
// `z` must be concave (nonincreasing increments) for kMonotone; z[0] is the
// empty-group value. `argmax` (if non-null) receives the smallest maximizing l
// for kDirect; for kMonotone it receives a maximizing l.
std::vector<double> MaxPlusConvolveStep(std::span<const double> a,
                                        std::span<const double> z, int step,
                                        ConvolutionMethod method,
                                        std::vector<int>* argmax = nullptr);

}  // namespace moecache

#endif  // MOECACHE_KNAPSACK_H_
