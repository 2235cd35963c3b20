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

// Structural description of MoE models and a dense global numbering of every
// expert in the library.
//
// Experts are numbered by (model position, layer, index), all zero-based, so
// the experts of one layer occupy a contiguous block of global indices.

#ifndef MOECACHE_CATALOG_H_
#define MOECACHE_CATALOG_H_

#include <compare>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace moecache {

using ExpertIndex = std::int32_t;

// Sorted (ascending) global indices of the experts activated together.
using ExpertSubset = std::vector<ExpertIndex>;

inline constexpr std::uint64_t kDefaultSubsetLimit = 1'000'000;

struct ModelSpec {
  std::string model_id;
  int num_moe_layers = 1;
  int experts_per_layer = 1;
  int top_k = 1;
  std::uint64_t expert_bytes = 0;
  std::uint64_t embedding_bytes = 0;
  double expert_flops = 0.0;  // FLOPs per token through one expert.

  // Throws ValidationError naming the offending field.
  void Validate() const;
};

struct ExpertId {
  int model = 0;  // position in the catalog
  int layer = 0;
  int index = 0;

  auto operator<=>(const ExpertId&) const = default;
};

class ExpertCatalog {
 public:
  ExpertCatalog() = default;

  // Validates every model and rejects duplicate model ids.
  static ExpertCatalog Build(std::vector<ModelSpec> models);

  int num_models() const { return static_cast<int>(models_.size()); }
  int num_experts() const { return static_cast<int>(model_of_.size()); }
  const std::vector<ModelSpec>& models() const { return models_; }
  const ModelSpec& model(int m) const { return models_.at(m); }

  std::optional<int> FindModel(std::string_view model_id) const;

  ExpertIndex IndexOf(const ExpertId& id) const;
  ExpertId ExpertOf(ExpertIndex index) const;
  int ModelOf(ExpertIndex index) const { return model_of_.at(index); }
  std::uint64_t ExpertBytes(ExpertIndex index) const {
    return models_[model_of_.at(index)].expert_bytes;
  }

  // Global index of expert 0 in (model, layer).
  ExpertIndex LayerBase(int model, int layer) const;

 private:
  std::vector<ModelSpec> models_;
  std::vector<ExpertIndex> model_base_;
  std::vector<int> model_of_;
};

// C(n, k), or nullopt when it does not fit in 64 bits.
std::optional<std::uint64_t> Binomial(int n, int k);

// All size-K subsets of the layer's experts as local (within-layer) indices,
// in lexicographic order. Throws ComputationError when C(E, K) exceeds
// `limit`; such layers need sparse probability tables instead.
std::vector<std::vector<int>> LayerSubsets(
    const ExpertCatalog& catalog, int model, int layer,
    std::uint64_t limit = kDefaultSubsetLimit);

}  // namespace moecache

#endif  // MOECACHE_CATALOG_H_
