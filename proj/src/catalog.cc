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

#include "moecache/catalog.h"

#include <set>
#include <string>

#include "moecache/error.h"

namespace moecache {

void ModelSpec::Validate() const {
  const std::string where = "model '" + model_id + "'";
  if (model_id.empty()) throw ValidationError("model_id", "must not be empty");
  if (num_moe_layers < 1) {
    throw ValidationError(where + ".num_moe_layers", "must be >= 1");
  }
  if (experts_per_layer < 1) {
    throw ValidationError(where + ".experts_per_layer", "must be >= 1");
  }
  if (top_k < 1 || top_k > experts_per_layer) {
    throw ValidationError(where + ".top_k",
                          "must satisfy 1 <= top_k <= experts_per_layer");
  }
  if (expert_bytes == 0) {
    throw ValidationError(where + ".expert_bytes", "must be > 0");
  }
  if (embedding_bytes == 0) {
    throw ValidationError(where + ".embedding_bytes", "must be > 0");
  }
  if (!(expert_flops > 0.0)) {
    throw ValidationError(where + ".expert_flops", "must be > 0");
  }
}

ExpertCatalog ExpertCatalog::Build(std::vector<ModelSpec> models) {
  ExpertCatalog catalog;
  std::set<std::string> seen;
  for (const ModelSpec& spec : models) {
    spec.Validate();
    if (!seen.insert(spec.model_id).second) {
      throw ValidationError("models", "duplicate model_id '" + spec.model_id + "'");
    }
  }
  catalog.models_ = std::move(models);
  ExpertIndex next = 0;
  for (int m = 0; m < catalog.num_models(); ++m) {
    const ModelSpec& spec = catalog.models_[m];
    catalog.model_base_.push_back(next);
    const std::int64_t count =
        static_cast<std::int64_t>(spec.num_moe_layers) * spec.experts_per_layer;
    if (next + count > INT32_MAX) {
      throw ValidationError("models", "too many experts for 32-bit indexing");
    }
    catalog.model_of_.insert(catalog.model_of_.end(), count, m);
    next += static_cast<ExpertIndex>(count);
  }
  return catalog;
}

std::optional<int> ExpertCatalog::FindModel(std::string_view model_id) const {
  for (int m = 0; m < num_models(); ++m) {
    if (models_[m].model_id == model_id) return m;
  }
  return std::nullopt;
}

ExpertIndex ExpertCatalog::LayerBase(int model, int layer) const {
  if (model < 0 || model >= num_models()) {
    throw std::out_of_range("unknown model position " + std::to_string(model));
  }
  const ModelSpec& spec = models_[model];
  if (layer < 0 || layer >= spec.num_moe_layers) {
    throw std::out_of_range("model '" + spec.model_id + "' has no layer " +
                            std::to_string(layer));
  }
  return model_base_[model] + layer * spec.experts_per_layer;
}

ExpertIndex ExpertCatalog::IndexOf(const ExpertId& id) const {
  const ExpertIndex base = LayerBase(id.model, id.layer);
  if (id.index < 0 || id.index >= models_[id.model].experts_per_layer) {
    throw std::out_of_range("expert index " + std::to_string(id.index) +
                            " out of range");
  }
  return base + id.index;
}

ExpertId ExpertCatalog::ExpertOf(ExpertIndex index) const {
  const int m = model_of_.at(index);
  const int offset = index - model_base_[m];
  const int e = models_[m].experts_per_layer;
  return ExpertId{m, offset / e, offset % e};
}

std::optional<std::uint64_t> Binomial(int n, int k) {
  if (k < 0 || k > n) return 0;
  k = std::min(k, n - k);
  std::uint64_t result = 1;
  for (int i = 1; i <= k; ++i) {
    // result * (n - k + i) / i stays integral at every step.
    const std::uint64_t factor = static_cast<std::uint64_t>(n - k + i);
    if (result > UINT64_MAX / factor) return std::nullopt;
    result = result * factor / static_cast<std::uint64_t>(i);
  }
  return result;
}

std::vector<std::vector<int>> LayerSubsets(const ExpertCatalog& catalog,
                                           int model, int layer,
                                           std::uint64_t limit) {
  catalog.LayerBase(model, layer);  // range check
  const ModelSpec& spec = catalog.model(model);
  const int n = spec.experts_per_layer;
  const int k = spec.top_k;
  const std::optional<std::uint64_t> count = Binomial(n, k);
  if (!count || *count > limit) {
    throw ComputationError("layer of model '" + spec.model_id +
                           "' has more than " + std::to_string(limit) +
                           " size-" + std::to_string(k) +
                           " subsets; supply a sparse probability table");
  }
  std::vector<std::vector<int>> subsets;
  subsets.reserve(*count);
  std::vector<int> current(k);
  for (int i = 0; i < k; ++i) current[i] = i;
  while (true) {
    subsets.push_back(current);
    int pos = k - 1;
    while (pos >= 0 && current[pos] == n - k + pos) --pos;
    if (pos < 0) break;
    ++current[pos];
    for (int i = pos + 1; i < k; ++i) current[i] = current[i - 1] + 1;
  }
  return subsets;
}

}  // namespace moecache
