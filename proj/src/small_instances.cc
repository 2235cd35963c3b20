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

#include "moecache/small_instances.h"

#include <algorithm>
#include <cmath>
#include <random>

#include "moecache/error.h"
#include "moecache/latency.h"
#include "moecache/network.h"
#include "moecache/rng.h"
#include "moecache/workload.h"

namespace moecache {
namespace {

constexpr std::uint64_t kEmbeddingBytes = 4096;
constexpr int kMaxWitnessBits = 12;

}  // namespace

ModelSpec SmallModel(const std::string& id, int layers, int experts, int top_k,
                     std::uint64_t expert_bytes) {
  ModelSpec spec;
  spec.model_id = id;
  spec.num_moe_layers = layers;
  spec.experts_per_layer = experts;
  spec.top_k = top_k;
  spec.expert_bytes = expert_bytes;
  spec.embedding_bytes = kEmbeddingBytes;
  spec.expert_flops = 1e9;
  return spec;
}

std::unique_ptr<Instance> MakeSmallInstance(const SmallInstanceConfig& config,
                                            std::uint64_t seed) {
  if (config.models.empty()) throw ValidationError("models", "must not be empty");
  ExpertCatalog catalog = ExpertCatalog::Build(config.models);
  Rng rng(DeriveSeed(seed, {0x5a11}));
  std::uniform_real_distribution<double> coord(0.0, 1000.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> logit(0.0, 1.0);

  std::uint64_t largest = 0;
  for (const ModelSpec& spec : config.models) largest = std::max(largest, spec.expert_bytes);

  Topology topology;
  for (int n = 0; n < config.num_servers; ++n) {
    EdgeServerNode server;
    server.server_id = n;
    server.position = {coord(rng), coord(rng)};
    server.capacity_bytes = largest * static_cast<std::uint64_t>(config.experts_per_server);
    topology.servers.push_back(server);
  }
  for (int u = 0; u < config.num_users; ++u) {
    UserNode user;
    user.user_id = u;
    user.position = {coord(rng), coord(rng)};
    topology.users.push_back(user);
  }
  const int servers = config.num_servers;
  topology.link.backhaul_rate_bps.assign(servers, std::vector<double>(servers, 0.0));
  const double log_lo = std::log(config.min_backhaul_bps);
  const double log_hi = std::log(config.max_backhaul_bps);
  for (int a = 0; a < servers; ++a) {
    topology.link.backhaul_rate_bps[a][a] = config.max_backhaul_bps;
    for (int b = a + 1; b < servers; ++b) {
      const double rate = std::exp(log_lo + (log_hi - log_lo) * unit(rng));
      topology.link.backhaul_rate_bps[a][b] = rate;
      topology.link.backhaul_rate_bps[b][a] = rate;
    }
  }
  topology.link.cloud.assign(servers, CloudHop{CloudHop::Kind::kFixedLatency,
                                               config.cloud_latency_s});
  topology.AssociateUsers();

  ActivationProfile profile(config.num_users);
  for (int u = 0; u < config.num_users; ++u) {
    std::vector<ModelRequest> requests;
    double total = 0.0;
    for (int m = 0; m < catalog.num_models(); ++m) {
      const double w = 0.1 + unit(rng);
      requests.push_back({m, w});
      total += w;
    }
    for (ModelRequest& r : requests) r.probability /= total;
    profile.SetModelRequests(u, requests);
    for (int m = 0; m < catalog.num_models(); ++m) {
      for (int l = 0; l < catalog.model(m).num_moe_layers; ++l) {
        const ExpertIndex base = catalog.LayerBase(m, l);
        std::vector<SubsetProbability> entries;
        double mass = 0.0;
        const std::vector<std::vector<int>> subsets = LayerSubsets(catalog, m, l);
        for (const std::vector<int>& local : subsets) {
          const double w = std::exp(logit(rng));
          if (unit(rng) < config.sparsity) continue;
          ExpertSubset subset;
          for (int i : local) subset.push_back(base + i);
          entries.push_back({subset, w});
          mass += w;
        }
        if (entries.empty()) {
          ExpertSubset subset;
          for (int i : subsets.front()) subset.push_back(base + i);
          entries.push_back({subset, 1.0});
          mass = 1.0;
        }
        for (SubsetProbability& e : entries) e.probability /= mass;
        profile.SetLayerDistribution({u, m, l}, std::move(entries));
      }
    }
  }
  LocalCache local(config.num_users, catalog.num_experts());
  if (config.local_budget > 0) local = BuildLocalCache(catalog, profile, config.local_budget);
  return std::make_unique<Instance>(std::move(catalog), std::move(topology),
                                    std::move(profile), std::move(local));
}

std::unique_ptr<Instance> MakeWitnessInstance() {
  ExpertCatalog catalog = ExpertCatalog::Build({SmallModel("pair", 1, 2, 2)});
  Topology topology;
  for (int n = 0; n < 4; ++n) {
    EdgeServerNode server;
    server.server_id = n;
    server.position = {100.0 * n, 0.0};
    server.capacity_bytes = 2 << 20;
    topology.servers.push_back(server);
  }
  UserNode user;
  user.position = {10.0, 0.0};
  topology.users.push_back(user);
  // One-way hop between servers a and b takes |a - b| milliseconds.
  topology.link.backhaul_rate_bps.assign(4, std::vector<double>(4, 0.0));
  for (int a = 0; a < 4; ++a) {
    for (int b = 0; b < 4; ++b) {
      const int gap = std::max(1, std::abs(a - b));
      topology.link.backhaul_rate_bps[a][b] = 8.0 * kEmbeddingBytes / (1e-3 * gap);
    }
  }
  topology.link.cloud.assign(4, CloudHop{});
  topology.AssociateUsers();
  ActivationProfile profile(1);
  profile.SetModelRequests(0, {{0, 1.0}});
  profile.SetLayerDistribution({0, 0, 0}, {{{0, 1}, 1.0}});
  LocalCache local(1, catalog.num_experts());
  return std::make_unique<Instance>(std::move(catalog), std::move(topology),
                                    std::move(profile), std::move(local));
}

WitnessSearchResult SearchMarginalWitnesses(const Instance& instance,
                                            double tolerance) {
  const auto demanded = instance.demanded_experts();
  const int d = static_cast<int>(demanded.size());
  const int bits = instance.num_servers() * d;
  if (bits > kMaxWitnessBits) {
    throw ValidationError("instance", "too large for the witness search");
  }
  const std::uint32_t count = 1U << bits;
  auto holders_of = [&](std::uint32_t mask) {
    std::vector<std::uint64_t> holders(instance.num_experts(), 0);
    for (int b = 0; b < bits; ++b) {
      if ((mask >> b) & 1U) holders[demanded[b % d]] |= std::uint64_t{1} << (b / d);
    }
    return holders;
  };
  std::vector<double> value(count);
  for (std::uint32_t mask = 0; mask < count; ++mask) {
    const std::vector<std::uint64_t> holders = holders_of(mask);
    double total = 0.0;
    for (const Query& q : instance.queries()) {
      total += q.weight * (q.max_latency - QueryLatency(instance, q, holders));
    }
    value[mask] = total;
  }
  auto to_placement = [&](std::uint32_t mask) {
    Placement p(instance.catalog(), instance.num_servers());
    for (int b = 0; b < bits; ++b) {
      if ((mask >> b) & 1U) p.Add(b / d, demanded[b % d]);
    }
    return p;
  };

  WitnessSearchResult result;
  std::uint32_t pos[3] = {0, 0, 0}, neg[3] = {0, 0, 0};
  double best_pos = tolerance, best_neg = -tolerance;
  bool has_pos = false, has_neg = false;
  for (std::uint32_t large = 0; large < count; ++large) {
    // Every submask of `large`, including itself and zero.
    for (std::uint32_t small = large;; small = (small - 1) & large) {
      for (int b = 0; b < bits; ++b) {
        const std::uint32_t j = 1U << b;
        if (large & j) continue;
        ++result.triples;
        const double diff =
            (value[large | j] - value[large]) - (value[small | j] - value[small]);
        if (diff > best_pos) {
          best_pos = diff;
          pos[0] = small, pos[1] = large, pos[2] = static_cast<std::uint32_t>(b);
          has_pos = true;
        }
        if (diff < best_neg) {
          best_neg = diff;
          neg[0] = small, neg[1] = large, neg[2] = static_cast<std::uint32_t>(b);
          has_neg = true;
        }
      }
      if (small == 0) break;
    }
  }
  auto make = [&](const std::uint32_t w[3], double diff) {
    return MarginalWitness{to_placement(w[0]), to_placement(w[1]),
                           static_cast<int>(w[2]) / d, demanded[w[2] % d], diff};
  };
  if (has_pos) result.positive = make(pos, best_pos);
  if (has_neg) result.negative = make(neg, best_neg);
  return result;
}

}  // namespace moecache
