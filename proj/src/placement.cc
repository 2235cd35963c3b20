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

#include "moecache/placement.h"

#include <bit>
#include <stdexcept>

#include "moecache/error.h"
#include "moecache/network.h"

namespace moecache {

Placement::Placement(const ExpertCatalog& catalog, int num_servers)
    : catalog_(&catalog),
      holders_(catalog.num_experts(), 0),
      used_bytes_(num_servers, 0) {
  if (num_servers < 0 || num_servers > 64) {
    throw ValidationError("num_servers", "must be in [0, 64]");
  }
}

void Placement::Add(int server, ExpertIndex e) {
  if (server < 0 || server >= num_servers()) throw std::out_of_range("server");
  const std::uint64_t bit = std::uint64_t{1} << server;
  if (holders_.at(e) & bit) return;
  holders_[e] |= bit;
  used_bytes_[server] += catalog_->ExpertBytes(e);
}

void Placement::Remove(int server, ExpertIndex e) {
  if (server < 0 || server >= num_servers()) throw std::out_of_range("server");
  const std::uint64_t bit = std::uint64_t{1} << server;
  if (!(holders_.at(e) & bit)) return;
  holders_[e] &= ~bit;
  used_bytes_[server] -= catalog_->ExpertBytes(e);
}

std::vector<ExpertIndex> Placement::ExpertsOn(int server) const {
  std::vector<ExpertIndex> out;
  for (ExpertIndex e = 0; e < num_experts(); ++e) {
    if (Contains(server, e)) out.push_back(e);
  }
  return out;
}

int Placement::size() const {
  int total = 0;
  for (std::uint64_t h : holders_) total += std::popcount(h);
  return total;
}

namespace {

void CheckCompatible(const Placement& a, const Placement& b) {
  if (a.num_servers() != b.num_servers() || a.num_experts() != b.num_experts()) {
    throw ValidationError("placement", "shapes differ");
  }
}

}  // namespace

Placement Union(const Placement& a, const Placement& b) {
  CheckCompatible(a, b);
  Placement out = a;
  for (ExpertIndex e = 0; e < b.num_experts(); ++e) {
    std::uint64_t extra = b.holders(e) & ~a.holders(e);
    while (extra) {
      out.Add(std::countr_zero(extra), e);
      extra &= extra - 1;
    }
  }
  return out;
}

Placement Intersection(const Placement& a, const Placement& b) {
  CheckCompatible(a, b);
  Placement out = a;
  for (ExpertIndex e = 0; e < a.num_experts(); ++e) {
    std::uint64_t gone = a.holders(e) & ~b.holders(e);
    while (gone) {
      out.Remove(std::countr_zero(gone), e);
      gone &= gone - 1;
    }
  }
  return out;
}

std::vector<int> CapacityViolations(const Placement& placement,
                                    const Topology& topology) {
  if (placement.num_servers() != topology.num_servers()) {
    throw ValidationError("placement", "server count differs from topology");
  }
  std::vector<int> over;
  for (int n = 0; n < placement.num_servers(); ++n) {
    if (placement.used_bytes(n) > topology.servers[n].capacity_bytes) {
      over.push_back(n);
    }
  }
  return over;
}

bool SatisfiesCapacity(const Placement& placement, const Topology& topology) {
  return CapacityViolations(placement, topology).empty();
}

}  // namespace moecache
