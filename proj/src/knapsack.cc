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

#include "moecache/knapsack.h"

#include <algorithm>
#include <map>
#include <numeric>

#include "moecache/error.h"

namespace moecache {
namespace {

std::int64_t GridCapacity(std::span<const KnapsackItem> items,
                          std::int64_t capacity, std::uint64_t unit) {
  if (capacity < 0) throw ValidationError("capacity", "must be >= 0");
  if (unit == 0) throw ValidationError("unit", "must be > 0");
  for (const KnapsackItem& item : items) {
    if (item.weight == 0) throw ValidationError("weight", "must be > 0");
    if (item.weight % unit != 0) {
      throw ValidationError("unit", "must divide every item weight");
    }
  }
  return capacity / static_cast<std::int64_t>(unit);
}

// For output positions [p_lo, p_hi] of one residue class, the chosen source
// positions are confined to [j_lo, j_hi]. Picks the largest maximizing j.
void SolveMonotone(std::span<const double> y, std::span<const double> z,
                   int p_lo, int p_hi, int j_lo, int j_hi,
                   std::vector<double>& out, std::vector<int>& best_j) {
  if (p_lo > p_hi) return;
  const int p = p_lo + (p_hi - p_lo) / 2;
  const int zmax = static_cast<int>(z.size()) - 1;
  const int lo = std::max(j_lo, p - zmax);
  const int hi = std::min(j_hi, p);
  int arg = hi;
  double best = y[hi] + z[p - hi];
  for (int j = hi - 1; j >= lo; --j) {
    const double v = y[j] + z[p - j];
    if (v > best) {
      best = v;
      arg = j;
    }
  }
  out[p] = best;
  best_j[p] = arg;
  SolveMonotone(y, z, p_lo, p - 1, j_lo, arg, out, best_j);
  SolveMonotone(y, z, p + 1, p_hi, arg, j_hi, out, best_j);
}

}  // namespace

std::uint64_t GridUnit(std::span<const KnapsackItem> items,
                       std::uint64_t fallback) {
  std::uint64_t g = 0;
  for (const KnapsackItem& item : items) g = std::gcd(g, item.weight);
  return g == 0 ? fallback : g;
}

std::vector<double> MaxPlusConvolveStep(std::span<const double> a,
                                        std::span<const double> z, int step,
                                        ConvolutionMethod method,
                                        std::vector<int>* argmax) {
  if (step < 1) throw ValidationError("step", "must be >= 1");
  if (z.empty()) throw ValidationError("z", "must contain z[0]");
  const int n = static_cast<int>(a.size());
  std::vector<double> out(n);
  if (argmax) argmax->assign(n, 0);
  std::vector<double> y, res;
  std::vector<int> best_j;
  for (int r = 0; r < std::min(step, n); ++r) {
    y.clear();
    for (int q = r; q < n; q += step) y.push_back(a[q]);
    const int len = static_cast<int>(y.size());
    res.assign(len, 0.0);
    best_j.assign(len, 0);
    if (method == ConvolutionMethod::kDirect) {
      const int zmax = static_cast<int>(z.size()) - 1;
      for (int p = 0; p < len; ++p) {
        int arg = p;
        double best = y[p] + z[0];
        for (int j = p - 1; j >= std::max(0, p - zmax); --j) {
          const double v = y[j] + z[p - j];
          if (v > best) {
            best = v;
            arg = j;
          }
        }
        res[p] = best;
        best_j[p] = arg;
      }
    } else {
      SolveMonotone(y, z, 0, len - 1, 0, len - 1, res, best_j);
    }
    for (int p = 0; p < len; ++p) {
      out[r + p * step] = res[p];
      if (argmax) (*argmax)[r + p * step] = p - best_j[p];
    }
  }
  return out;
}

KnapsackResult DpKnapsack(std::span<const KnapsackItem> items,
                          std::int64_t capacity, std::uint64_t unit) {
  const std::int64_t grid = GridCapacity(items, capacity, unit);
  std::vector<int> candidates;
  for (int i = 0; i < static_cast<int>(items.size()); ++i) {
    if (items[i].value > 0.0 &&
        static_cast<std::int64_t>(items[i].weight / unit) <= grid) {
      candidates.push_back(i);
    }
  }
  const size_t width = static_cast<size_t>(grid) + 1;
  std::vector<double> best(width, 0.0);
  std::vector<std::uint8_t> keep(candidates.size() * width, 0);
  for (size_t c = 0; c < candidates.size(); ++c) {
    const KnapsackItem& item = items[candidates[c]];
    const auto w = static_cast<std::int64_t>(item.weight / unit);
    std::uint8_t* row = keep.data() + c * width;
    for (std::int64_t q = grid; q >= w; --q) {
      const double take = best[q - w] + item.value;
      if (take > best[q]) {
        best[q] = take;
        row[q] = 1;
      }
    }
  }
  KnapsackResult result;
  result.value = best[grid];
  std::int64_t q = grid;
  for (size_t c = candidates.size(); c-- > 0;) {
    if (keep[c * width + q]) {
      result.selected.push_back(candidates[c]);
      q -= static_cast<std::int64_t>(items[candidates[c]].weight / unit);
    }
  }
  std::sort(result.selected.begin(), result.selected.end());
  return result;
}

KnapsackResult AcceleratedKnapsack(std::span<const KnapsackItem> items,
                                   std::int64_t capacity, std::uint64_t unit,
                                   ConvolutionMethod method) {
  const std::int64_t grid = GridCapacity(items, capacity, unit);
  std::map<std::int64_t, std::vector<int>> groups;
  for (int i = 0; i < static_cast<int>(items.size()); ++i) {
    const auto w = static_cast<std::int64_t>(items[i].weight / unit);
    if (items[i].value > 0.0 && w <= grid) groups[w].push_back(i);
  }

  struct Group {
    int step = 0;
    std::vector<int> order;  // by value descending, index ascending on ties
    std::vector<int> count;  // items taken at each capacity
  };
  std::vector<Group> folded;
  std::vector<double> table(static_cast<size_t>(grid) + 1, 0.0);
  for (auto& [w, members] : groups) {
    Group g;
    g.step = static_cast<int>(w);
    g.order = members;
    std::stable_sort(g.order.begin(), g.order.end(), [&](int a, int b) {
      return items[a].value > items[b].value;
    });
    const size_t usable = std::min<size_t>(g.order.size(), static_cast<size_t>(grid / w));
    g.order.resize(usable);
    std::vector<double> prefix(usable + 1, 0.0);
    for (size_t l = 0; l < usable; ++l) prefix[l + 1] = prefix[l] + items[g.order[l]].value;
    table = MaxPlusConvolveStep(table, prefix, g.step, method, &g.count);
    folded.push_back(std::move(g));
  }

  KnapsackResult result;
  result.value = table[grid];
  std::int64_t q = grid;
  for (size_t t = folded.size(); t-- > 0;) {
    const Group& g = folded[t];
    const int l = g.count[q];
    for (int i = 0; i < l; ++i) result.selected.push_back(g.order[i]);
    q -= static_cast<std::int64_t>(l) * g.step;
  }
  std::sort(result.selected.begin(), result.selected.end());
  return result;
}

}  // namespace moecache
