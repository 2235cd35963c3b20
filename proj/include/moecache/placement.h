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

#ifndef MOECACHE_PLACEMENT_H_
#define MOECACHE_PLACEMENT_H_

#include <cstdint>
#include <span>
#include <vector>

#include "moecache/catalog.h"

namespace moecache {

struct Topology;

// Which experts each edge server caches. Stored per expert as a bitmask of
// holding servers, so at most 64 servers. Keeps a non-owning pointer to the
// catalog for byte accounting; the catalog must outlive the placement.
class Placement {
 public:
  Placement() = default;
  Placement(const ExpertCatalog& catalog, int num_servers);

  int num_servers() const { return static_cast<int>(used_bytes_.size()); }
  int num_experts() const { return static_cast<int>(holders_.size()); }
  const ExpertCatalog& catalog() const { return *catalog_; }

  bool Contains(int server, ExpertIndex e) const {
    return (holders_[e] >> server) & 1U;
  }
  // Both are no-ops when the state already matches. Capacity is not checked.
  void Add(int server, ExpertIndex e);
  void Remove(int server, ExpertIndex e);

  std::uint64_t used_bytes(int server) const { return used_bytes_.at(server); }
  std::uint64_t holders(ExpertIndex e) const { return holders_[e]; }
  std::span<const std::uint64_t> holder_masks() const { return holders_; }

  std::vector<ExpertIndex> ExpertsOn(int server) const;
  // Number of cached (server, expert) pairs.
  int size() const;

  bool operator==(const Placement& other) const {
    return holders_ == other.holders_;
  }

 private:
  const ExpertCatalog* catalog_ = nullptr;
  std::vector<std::uint64_t> holders_;
  std::vector<std::uint64_t> used_bytes_;
};

Placement Union(const Placement& a, const Placement& b);
Placement Intersection(const Placement& a, const Placement& b);

// Servers whose cached bytes exceed their capacity (ascending).
std::vector<int> CapacityViolations(const Placement& placement,
                                    const Topology& topology);
bool SatisfiesCapacity(const Placement& placement, const Topology& topology);

}  // namespace moecache

#endif  // MOECACHE_PLACEMENT_H_
