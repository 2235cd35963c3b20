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

// Demand side of a scenario: which models each user requests, how often each
// size-K expert subset fires per layer, and which experts users keep locally.

#ifndef MOECACHE_WORKLOAD_H_
#define MOECACHE_WORKLOAD_H_

#include <compare>
#include <cstdint>
#include <map>
#include <span>
#include <utility>
#include <vector>

#include "moecache/catalog.h"

namespace moecache {

struct TopKSelection {
  std::vector<int> indices;     // ascending
  std::vector<double> weights;  // renormalized over the selected experts
};

// Picks the k largest affinities (ties to the lowest index) and renormalizes
// their weights to sum to one.
TopKSelection TopKSelect(std::span<const double> affinity, int k);

struct ModelRequest {
  int model = 0;
  double probability = 0.0;
};

struct SubsetProbability {
  ExpertSubset experts;
  double probability = 0.0;
};

struct LayerKey {
  int user = 0;
  int model = 0;
  int layer = 0;
  auto operator<=>(const LayerKey&) const = default;
};

inline constexpr double kProbabilityTolerance = 1e-9;

// Sparse per-layer tables: subsets that never fire are absent and count as
// probability zero everywhere.
class ActivationProfile {
 public:
  ActivationProfile() = default;
  explicit ActivationProfile(int num_users) : requests_(num_users) {}

  int num_users() const { return static_cast<int>(requests_.size()); }

  void SetModelRequests(int user, std::vector<ModelRequest> requests);
  const std::vector<ModelRequest>& requests(int user) const {
    return requests_.at(user);
  }
  double ModelProbability(int user, int model) const;

  // Entries are sorted by subset; duplicates are merged.
  void SetLayerDistribution(const LayerKey& key,
                            std::vector<SubsetProbability> entries);
  // Empty span when the layer has no table.
  std::span<const SubsetProbability> layer(const LayerKey& key) const;
  const std::map<LayerKey, std::vector<SubsetProbability>>& layers() const {
    return layers_;
  }

  // Normalization, subset sizes and layer membership. Every requested
  // (user, model) must carry a table for each of the model's layers.
  void Validate(const ExpertCatalog& catalog) const;

 private:
  std::vector<std::vector<ModelRequest>> requests_;
  std::map<LayerKey, std::vector<SubsetProbability>> layers_;
};

// Synthetic router: per (model, layer) a population-level mean logit vector,
// per user a personal offset, per token Gaussian noise; the token's affinity
// is the softmax and the activated subset its top-K.
struct GatingParams {
  double popularity_sharpness = 1.5;  // std-dev of shared mean logits
  double user_sharpness = 0.75;       // std-dev of per-user offsets
  double token_noise = 1.0;           // std-dev of per-token logit noise
  // Replaces the shared mean logits of a (model, layer); the vector length
  // must equal the layer's expert count.
  std::map<std::pair<int, int>, std::vector<double>> mean_logits_override;
};

// Empirical subset frequencies over `num_tokens` sampled tokens for every
// requested (user, model, layer). Deterministic in `seed`.
ActivationProfile SynthesizeProfile(
    const ExpertCatalog& catalog,
    const std::vector<std::vector<ModelRequest>>& requests,
    const GatingParams& gating, int num_tokens, std::uint64_t seed);

// p(rank r) proportional to r^-exponent over `ranked_models` (rank 1 first).
std::vector<ModelRequest> ZipfRequests(std::span<const int> ranked_models,
                                       double exponent);

// Dense (user, expert) flags for experts pre-stored on user devices.
class LocalCache {
 public:
  LocalCache() = default;
  LocalCache(int num_users, int num_experts)
      : num_experts_(num_experts),
        flags_(static_cast<size_t>(num_users) * num_experts, 0) {}

  int num_users() const {
    return num_experts_ == 0 ? 0 : static_cast<int>(flags_.size() / num_experts_);
  }
  int num_experts() const { return num_experts_; }
  bool cached(int user, ExpertIndex e) const {
    return flags_[static_cast<size_t>(user) * num_experts_ + e] != 0;
  }
  void Set(int user, ExpertIndex e, bool value = true);
  int Count(int user) const;
  std::vector<ExpertIndex> ExpertsOf(int user) const;

 private:
  int num_experts_ = 0;
  std::vector<std::uint8_t> flags_;
};

// The `budget` experts with the highest user-specific activation marginal
// p_{u,m} * sum_{S contains i} p_{u,S}, restricted to the user's requested
// models; ties by global index. Throws if the budget exceeds the experts of
// those models.
std::vector<ExpertIndex> AssignLocalCache(const ExpertCatalog& catalog,
                                          const ActivationProfile& profile,
                                          int user, int budget);

LocalCache BuildLocalCache(const ExpertCatalog& catalog,
                           const ActivationProfile& profile, int budget);

}  // namespace moecache

#endif  // MOECACHE_WORKLOAD_H_
