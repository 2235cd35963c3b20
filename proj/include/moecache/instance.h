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

// An immutable scenario (catalog, topology, activation profile and user
// caches) together with every latency constant the objective needs, and the
// flattened list of weighted (user, model, layer, subset) queries.

#ifndef MOECACHE_INSTANCE_H_
#define MOECACHE_INSTANCE_H_

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "moecache/catalog.h"
#include "moecache/network.h"
#include "moecache/workload.h"

namespace moecache {

inline constexpr int kMaxTopK = 8;

struct Query {
  int user = 0;
  int model = 0;
  int layer = 0;
  int server = 0;  // the user's associated server
  int k = 0;
  std::array<ExpertIndex, kMaxTopK> experts{};
  std::uint32_t local_mask = 0;  // bit i set when experts[i] is on the device
  double weight = 0.0;           // p_{u,m} * p_{u,S} / U
  double max_latency = 0.0;      // all non-local experts served by the cloud

  std::span<const ExpertIndex> subset() const { return {experts.data(), static_cast<size_t>(k)}; }
};

struct InstanceOptions {
  // Routing over non-associated servers is solved exactly up to this many
  // servers and by a greedy heuristic beyond it.
  int exact_routing_server_cap = 16;
};

class Instance {
 public:
  Instance(ExpertCatalog catalog, Topology topology, ActivationProfile profile,
           LocalCache local_cache, InstanceOptions options = {});

  Instance(const Instance&) = delete;
  Instance& operator=(const Instance&) = delete;

  const ExpertCatalog& catalog() const { return catalog_; }
  const Topology& topology() const { return topology_; }
  const ActivationProfile& profile() const { return profile_; }
  const LocalCache& local_cache() const { return local_cache_; }

  int num_users() const { return topology_.num_users(); }
  int num_servers() const { return topology_.num_servers(); }
  int num_models() const { return catalog_.num_models(); }
  int num_experts() const { return catalog_.num_experts(); }
  int associated(int user) const { return topology_.users[user].associated_server; }
  bool exact_routing() const { return exact_routing_; }

  // Per-token, per-hop latencies (seconds).
  double uplink(int user, int model) const { return uplink_[UserModel(user, model)]; }
  double downlink(int user, int model) const { return downlink_[UserModel(user, model)]; }
  double local_compute(int user, int model) const { return local_compute_[UserModel(user, model)]; }
  double backhaul(int from, int to, int model) const {
    return backhaul_[(static_cast<size_t>(from) * num_servers() + to) * num_models() + model];
  }
  double to_cloud(int server, int model) const { return to_cloud_[ServerModel(server, model)]; }
  double from_cloud(int server, int model) const { return from_cloud_[ServerModel(server, model)]; }
  double edge_compute(int server, int model) const { return edge_compute_[ServerModel(server, model)]; }
  double cloud_compute(int model) const { return cloud_compute_[model]; }

  std::span<const Query> queries() const { return queries_; }
  // Indices into queries() whose subset contains `e` as a non-local expert.
  std::span<const int> queries_with(ExpertIndex e) const {
    return {query_ids_.data() + query_offsets_[e],
            static_cast<size_t>(query_offsets_[e + 1] - query_offsets_[e])};
  }
  // Experts that appear, not device-cached, in at least one query with
  // positive weight.
  std::span<const ExpertIndex> demanded_experts() const { return demanded_; }

  // sum_q weight_q * max_latency_q: the average latency with nothing cached
  // at the edge.
  double max_average_latency() const { return max_average_latency_; }

 private:
  size_t UserModel(int u, int m) const { return static_cast<size_t>(u) * num_models() + m; }
  size_t ServerModel(int n, int m) const { return static_cast<size_t>(n) * num_models() + m; }

  ExpertCatalog catalog_;
  Topology topology_;
  ActivationProfile profile_;
  LocalCache local_cache_;
  bool exact_routing_ = true;

  std::vector<double> uplink_, downlink_, local_compute_;
  std::vector<double> backhaul_, to_cloud_, from_cloud_, edge_compute_;
  std::vector<double> cloud_compute_;

  std::vector<Query> queries_;
  std::vector<int> query_offsets_;
  std::vector<int> query_ids_;
  std::vector<ExpertIndex> demanded_;
  double max_average_latency_ = 0.0;
};

}  // namespace moecache

#endif  // MOECACHE_INSTANCE_H_
