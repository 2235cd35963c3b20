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

#include "moecache/instance.h"

#include <algorithm>
#include <string>

#include "moecache/error.h"
#include "moecache/latency.h"

namespace moecache {

Instance::Instance(ExpertCatalog catalog, Topology topology,
                   ActivationProfile profile, LocalCache local_cache,
                   InstanceOptions options)
    : catalog_(std::move(catalog)),
      topology_(std::move(topology)),
      profile_(std::move(profile)),
      local_cache_(std::move(local_cache)) {
  topology_.Validate();
  profile_.Validate(catalog_);
  if (profile_.num_users() != num_users()) {
    throw ValidationError("profile", "user count differs from topology");
  }
  if (local_cache_.num_experts() != num_experts() ||
      local_cache_.num_users() != num_users()) {
    throw ValidationError("local_cache", "shape differs from users x experts");
  }
  for (const ModelSpec& spec : catalog_.models()) {
    if (spec.top_k > kMaxTopK) {
      throw ValidationError("model '" + spec.model_id + "'.top_k",
                            "at most " + std::to_string(kMaxTopK) + " supported");
    }
  }
  exact_routing_ = num_servers() <= options.exact_routing_server_cap;

  const int users = num_users();
  const int servers = num_servers();
  const int models = num_models();
  const LinkModel& link = topology_.link;

  uplink_.resize(static_cast<size_t>(users) * models);
  downlink_.resize(uplink_.size());
  local_compute_.resize(uplink_.size());
  for (int u = 0; u < users; ++u) {
    const UserNode& user = topology_.users[u];
    const EdgeServerNode& server = topology_.servers[user.associated_server];
    const double ul = UplinkRate(user, server, link);
    const double dl = DownlinkRate(user, server, link);
    for (int m = 0; m < models; ++m) {
      const ModelSpec& spec = catalog_.model(m);
      uplink_[UserModel(u, m)] = EmbeddingLatency(spec.embedding_bytes, ul);
      downlink_[UserModel(u, m)] = EmbeddingLatency(spec.embedding_bytes, dl);
      local_compute_[UserModel(u, m)] =
          ExpertComputeLatency(NodeKind::kUser, spec, user.compute_flops);
    }
  }

  backhaul_.assign(static_cast<size_t>(servers) * servers * models, 0.0);
  to_cloud_.resize(static_cast<size_t>(servers) * models);
  from_cloud_.resize(to_cloud_.size());
  edge_compute_.resize(to_cloud_.size());
  for (int n = 0; n < servers; ++n) {
    for (int m = 0; m < models; ++m) {
      const ModelSpec& spec = catalog_.model(m);
      for (int k = 0; k < servers; ++k) {
        if (k == n) continue;
        backhaul_[(static_cast<size_t>(n) * servers + k) * models + m] =
            EmbeddingLatency(spec.embedding_bytes, link.backhaul_rate_bps[n][k]);
      }
      to_cloud_[ServerModel(n, m)] = CloudHopLatency(spec.embedding_bytes, link.cloud[n]);
      from_cloud_[ServerModel(n, m)] = to_cloud_[ServerModel(n, m)];
      edge_compute_[ServerModel(n, m)] = ExpertComputeLatency(
          NodeKind::kEdge, spec, topology_.servers[n].per_expert_compute);
    }
  }
  cloud_compute_.resize(models);
  for (int m = 0; m < models; ++m) {
    cloud_compute_[m] = ExpertComputeLatency(NodeKind::kCloud, catalog_.model(m),
                                             link.cloud_per_expert_compute);
  }

  for (int u = 0; u < users; ++u) {
    for (const ModelRequest& req : profile_.requests(u)) {
      if (req.probability <= 0.0) continue;
      const ModelSpec& spec = catalog_.model(req.model);
      for (int l = 0; l < spec.num_moe_layers; ++l) {
        for (const SubsetProbability& sp : profile_.layer({u, req.model, l})) {
          if (sp.probability <= 0.0) continue;
          Query q;
          q.user = u;
          q.model = req.model;
          q.layer = l;
          q.server = associated(u);
          q.k = spec.top_k;
          for (int i = 0; i < q.k; ++i) {
            q.experts[i] = sp.experts[i];
            if (local_cache_.cached(u, sp.experts[i])) q.local_mask |= 1U << i;
          }
          q.weight = req.probability * sp.probability / users;
          q.max_latency = MaxTokenLatency(*this, u, q.subset());
          queries_.push_back(q);
        }
      }
    }
  }

  query_offsets_.assign(num_experts() + 1, 0);
  // Experts already on the user's device never change that query's latency.
  for (const Query& q : queries_) {
    for (int i = 0; i < q.k; ++i) {
      if (!((q.local_mask >> i) & 1U)) ++query_offsets_[q.experts[i] + 1];
    }
  }
  for (int e = 0; e < num_experts(); ++e) query_offsets_[e + 1] += query_offsets_[e];
  query_ids_.resize(query_offsets_.back());
  std::vector<int> fill(query_offsets_.begin(), query_offsets_.end() - 1);
  for (int qi = 0; qi < static_cast<int>(queries_.size()); ++qi) {
    const Query& q = queries_[qi];
    for (int i = 0; i < q.k; ++i) {
      if (!((q.local_mask >> i) & 1U)) query_ids_[fill[q.experts[i]]++] = qi;
    }
  }
  for (ExpertIndex e = 0; e < num_experts(); ++e) {
    if (query_offsets_[e + 1] > query_offsets_[e]) demanded_.push_back(e);
  }
  for (const Query& q : queries_) max_average_latency_ += q.weight * q.max_latency;
}

}  // namespace moecache
