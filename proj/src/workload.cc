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

#include "moecache/workload.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "moecache/error.h"
#include "moecache/rng.h"

namespace moecache {

TopKSelection TopKSelect(std::span<const double> affinity, int k) {
  const int n = static_cast<int>(affinity.size());
  if (k < 1 || k > n) {
    throw ValidationError("k", "must satisfy 1 <= k <= number of experts");
  }
  double total = 0.0;
  for (double a : affinity) {
    if (!(a >= 0.0)) throw ValidationError("affinity", "entries must be >= 0");
    total += a;
  }
  if (std::abs(total - 1.0) > 1e-6) {
    throw ValidationError("affinity", "must sum to 1");
  }
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::partial_sort(order.begin(), order.begin() + k, order.end(),
                    [&](int a, int b) {
                      if (affinity[a] != affinity[b]) return affinity[a] > affinity[b];
                      return a < b;
                    });
  TopKSelection sel;
  sel.indices.assign(order.begin(), order.begin() + k);
  std::sort(sel.indices.begin(), sel.indices.end());
  double selected_mass = 0.0;
  for (int i : sel.indices) selected_mass += affinity[i];
  sel.weights.reserve(k);
  for (int i : sel.indices) {
    sel.weights.push_back(selected_mass > 0.0 ? affinity[i] / selected_mass
                                              : 1.0 / k);
  }
  return sel;
}

void ActivationProfile::SetModelRequests(int user,
                                         std::vector<ModelRequest> requests) {
  std::sort(requests.begin(), requests.end(),
            [](const ModelRequest& a, const ModelRequest& b) {
              return a.model < b.model;
            });
  requests_.at(user) = std::move(requests);
}

double ActivationProfile::ModelProbability(int user, int model) const {
  for (const ModelRequest& r : requests_.at(user)) {
    if (r.model == model) return r.probability;
  }
  return 0.0;
}

void ActivationProfile::SetLayerDistribution(
    const LayerKey& key, std::vector<SubsetProbability> entries) {
  for (SubsetProbability& e : entries) std::sort(e.experts.begin(), e.experts.end());
  std::sort(entries.begin(), entries.end(),
            [](const SubsetProbability& a, const SubsetProbability& b) {
              return a.experts < b.experts;
            });
  std::vector<SubsetProbability> merged;
  for (SubsetProbability& e : entries) {
    if (!merged.empty() && merged.back().experts == e.experts) {
      merged.back().probability += e.probability;
    } else {
      merged.push_back(std::move(e));
    }
  }
  std::erase_if(merged, [](const SubsetProbability& e) {
    return e.probability == 0.0;
  });
  layers_[key] = std::move(merged);
}

std::span<const SubsetProbability> ActivationProfile::layer(
    const LayerKey& key) const {
  auto it = layers_.find(key);
  if (it == layers_.end()) return {};
  return it->second;
}

void ActivationProfile::Validate(const ExpertCatalog& catalog) const {
  for (int u = 0; u < num_users(); ++u) {
    const std::string where = "profile.user[" + std::to_string(u) + "]";
    double total = 0.0;
    for (const ModelRequest& r : requests_[u]) {
      if (r.model < 0 || r.model >= catalog.num_models()) {
        throw ValidationError(where, "requests an unknown model");
      }
      if (!(r.probability >= 0.0)) {
        throw ValidationError(where, "negative model request probability");
      }
      total += r.probability;
    }
    if (std::abs(total - 1.0) > kProbabilityTolerance) {
      throw ValidationError(where, "model request probabilities must sum to 1");
    }
    for (const ModelRequest& r : requests_[u]) {
      if (r.probability == 0.0) continue;
      const ModelSpec& spec = catalog.model(r.model);
      for (int l = 0; l < spec.num_moe_layers; ++l) {
        const LayerKey key{u, r.model, l};
        const std::string lwhere =
            where + ".model '" + spec.model_id + "'.layer " + std::to_string(l);
        if (!layers_.contains(key)) throw ValidationError(lwhere, "missing table");
      }
    }
  }
  for (const auto& [key, entries] : layers_) {
    const std::string where = "profile.user[" + std::to_string(key.user) +
                              "].model[" + std::to_string(key.model) +
                              "].layer " + std::to_string(key.layer);
    if (key.user < 0 || key.user >= num_users() || key.model < 0 ||
        key.model >= catalog.num_models()) {
      throw ValidationError(where, "unknown user or model");
    }
    const ModelSpec& spec = catalog.model(key.model);
    if (key.layer < 0 || key.layer >= spec.num_moe_layers) {
      throw ValidationError(where, "unknown layer");
    }
    const ExpertIndex base = catalog.LayerBase(key.model, key.layer);
    double total = 0.0;
    for (const SubsetProbability& e : entries) {
      if (static_cast<int>(e.experts.size()) != spec.top_k) {
        throw ValidationError(where, "subset size differs from top_k");
      }
      for (size_t i = 0; i < e.experts.size(); ++i) {
        if (e.experts[i] < base || e.experts[i] >= base + spec.experts_per_layer) {
          throw ValidationError(where, "subset member outside the layer");
        }
        if (i > 0 && e.experts[i] == e.experts[i - 1]) {
          throw ValidationError(where, "repeated subset member");
        }
      }
      if (!(e.probability >= 0.0)) throw ValidationError(where, "negative probability");
      total += e.probability;
    }
    if (std::abs(total - 1.0) > kProbabilityTolerance) {
      throw ValidationError(where, "subset probabilities must sum to 1");
    }
  }
}

namespace {

void Softmax(std::span<const double> logits, std::vector<double>& out) {
  out.resize(logits.size());
  const double peak = *std::max_element(logits.begin(), logits.end());
  double total = 0.0;
  for (size_t i = 0; i < logits.size(); ++i) {
    out[i] = std::exp(logits[i] - peak);
    total += out[i];
  }
  for (double& v : out) v /= total;
}

constexpr std::uint64_t kSharedStream = 0x5ea7ed;
constexpr std::uint64_t kUserStream = 0x05e2;
constexpr std::uint64_t kTokenStream = 0x70c3;

}  // namespace

ActivationProfile SynthesizeProfile(
    const ExpertCatalog& catalog,
    const std::vector<std::vector<ModelRequest>>& requests,
    const GatingParams& gating, int num_tokens, std::uint64_t seed) {
  if (num_tokens < 1) throw ValidationError("num_tokens", "must be >= 1");
  if (gating.popularity_sharpness < 0 || gating.user_sharpness < 0 ||
      gating.token_noise < 0) {
    throw ValidationError("gating", "standard deviations must be >= 0");
  }
  const int num_users = static_cast<int>(requests.size());
  ActivationProfile profile(num_users);

  std::map<std::pair<int, int>, std::vector<double>> shared_means;
  auto shared = [&](int m, int l) -> const std::vector<double>& {
    auto key = std::make_pair(m, l);
    auto it = shared_means.find(key);
    if (it != shared_means.end()) return it->second;
    const int e = catalog.model(m).experts_per_layer;
    std::vector<double> mean(e, 0.0);
    if (auto ov = gating.mean_logits_override.find(key);
        ov != gating.mean_logits_override.end()) {
      if (static_cast<int>(ov->second.size()) != e) {
        throw ValidationError("gating.mean_logits_override",
                              "length must equal experts_per_layer");
      }
      mean = ov->second;
    } else {
      Rng rng(DeriveSeed(seed, {kSharedStream, static_cast<std::uint64_t>(m),
                                static_cast<std::uint64_t>(l)}));
      std::normal_distribution<double> dist(0.0, 1.0);
      for (double& v : mean) v = gating.popularity_sharpness * dist(rng);
    }
    return shared_means.emplace(key, std::move(mean)).first->second;
  };

  std::vector<double> logits, affinity;
  for (int u = 0; u < num_users; ++u) {
    profile.SetModelRequests(u, requests[u]);
    for (const ModelRequest& req : profile.requests(u)) {
      const ModelSpec& spec = catalog.model(req.model);
      const int e = spec.experts_per_layer;
      for (int l = 0; l < spec.num_moe_layers; ++l) {
        const std::vector<double>& mean = shared(req.model, l);
        const auto key_u = static_cast<std::uint64_t>(u);
        const auto key_m = static_cast<std::uint64_t>(req.model);
        const auto key_l = static_cast<std::uint64_t>(l);
        Rng user_rng(DeriveSeed(seed, {kUserStream, key_u, key_m, key_l}));
        Rng token_rng(DeriveSeed(seed, {kTokenStream, key_u, key_m, key_l}));
        // One distribution per engine: normal_distribution caches a spare
        // draw, which must not leak between streams.
        std::normal_distribution<double> user_dist(0.0, 1.0);
        std::normal_distribution<double> dist(0.0, 1.0);
        std::vector<double> personal(e);
        for (int i = 0; i < e; ++i) {
          personal[i] = mean[i] + gating.user_sharpness * user_dist(user_rng);
        }
        std::map<std::vector<int>, int> counts;
        logits.resize(e);
        for (int t = 0; t < num_tokens; ++t) {
          for (int i = 0; i < e; ++i) {
            logits[i] = personal[i] + gating.token_noise * dist(token_rng);
          }
          Softmax(logits, affinity);
          ++counts[TopKSelect(affinity, spec.top_k).indices];
        }
        const ExpertIndex base = catalog.LayerBase(req.model, l);
        std::vector<SubsetProbability> entries;
        entries.reserve(counts.size());
        for (const auto& [subset, count] : counts) {
          SubsetProbability sp;
          for (int i : subset) sp.experts.push_back(base + i);
          sp.probability = static_cast<double>(count) / num_tokens;
          entries.push_back(std::move(sp));
        }
        profile.SetLayerDistribution({u, req.model, l}, std::move(entries));
      }
    }
  }
  return profile;
}

std::vector<ModelRequest> ZipfRequests(std::span<const int> ranked_models,
                                       double exponent) {
  if (ranked_models.empty()) {
    throw ValidationError("requested_models", "must not be empty");
  }
  if (!(exponent >= 0.0)) throw ValidationError("zipf_exponent", "must be >= 0");
  std::vector<double> mass(ranked_models.size());
  double total = 0.0;
  for (size_t r = 0; r < ranked_models.size(); ++r) {
    mass[r] = std::pow(static_cast<double>(r + 1), -exponent);
    total += mass[r];
  }
  std::vector<ModelRequest> out;
  for (size_t r = 0; r < ranked_models.size(); ++r) {
    out.push_back({ranked_models[r], mass[r] / total});
  }
  return out;
}

void LocalCache::Set(int user, ExpertIndex e, bool value) {
  flags_.at(static_cast<size_t>(user) * num_experts_ + e) = value ? 1 : 0;
}

int LocalCache::Count(int user) const {
  const auto begin = flags_.begin() + static_cast<std::ptrdiff_t>(user) * num_experts_;
  return static_cast<int>(std::count(begin, begin + num_experts_, 1));
}

std::vector<ExpertIndex> LocalCache::ExpertsOf(int user) const {
  std::vector<ExpertIndex> out;
  for (ExpertIndex e = 0; e < num_experts_; ++e) {
    if (cached(user, e)) out.push_back(e);
  }
  return out;
}

std::vector<ExpertIndex> AssignLocalCache(const ExpertCatalog& catalog,
                                          const ActivationProfile& profile,
                                          int user, int budget) {
  if (budget < 0) throw ValidationError("local_budget", "must be >= 0");
  std::vector<std::pair<double, ExpertIndex>> scored;
  for (const ModelRequest& req : profile.requests(user)) {
    const ModelSpec& spec = catalog.model(req.model);
    const ExpertIndex base = catalog.LayerBase(req.model, 0);
    const int count = spec.num_moe_layers * spec.experts_per_layer;
    std::vector<double> marginal(count, 0.0);
    for (int l = 0; l < spec.num_moe_layers; ++l) {
      for (const SubsetProbability& sp : profile.layer({user, req.model, l})) {
        for (ExpertIndex e : sp.experts) marginal[e - base] += sp.probability;
      }
    }
    for (int i = 0; i < count; ++i) {
      scored.emplace_back(req.probability * marginal[i], base + i);
    }
  }
  if (budget > static_cast<int>(scored.size())) {
    throw ValidationError("local_budget",
                          "user " + std::to_string(user) + " requests only " +
                              std::to_string(scored.size()) + " experts");
  }
  std::sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first > b.first;
    return a.second < b.second;
  });
  std::vector<ExpertIndex> chosen;
  for (int i = 0; i < budget; ++i) chosen.push_back(scored[i].second);
  std::sort(chosen.begin(), chosen.end());
  return chosen;
}

LocalCache BuildLocalCache(const ExpertCatalog& catalog,
                           const ActivationProfile& profile, int budget) {
  LocalCache cache(profile.num_users(), catalog.num_experts());
  for (int u = 0; u < profile.num_users(); ++u) {
    for (ExpertIndex e : AssignLocalCache(catalog, profile, u, budget)) {
      cache.Set(u, e);
    }
  }
  return cache;
}

}  // namespace moecache
