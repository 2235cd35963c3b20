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

#include <cmath>
#include <map>
#include <vector>

#include "gtest/gtest.h"
#include "moecache/error.h"
#include "test_instances.h"

namespace moecache {
namespace {

using testing::Model;

TEST(TopKSelectTest, RenormalizesSelectedWeights) {
  const std::vector<double> affinity = {0.5, 0.3, 0.2};
  const TopKSelection s = TopKSelect(affinity, 2);
  EXPECT_EQ(s.indices, (std::vector<int>{0, 1}));
  EXPECT_DOUBLE_EQ(s.weights[0], 0.5 / 0.8);
  EXPECT_DOUBLE_EQ(s.weights[1], 0.3 / 0.8);
  EXPECT_DOUBLE_EQ(s.weights[0], 0.625);
  EXPECT_DOUBLE_EQ(s.weights[1], 0.375);
}

TEST(TopKSelectTest, FullSelectionKeepsWeights) {
  const std::vector<double> affinity = {0.1, 0.6, 0.3};
  const TopKSelection s = TopKSelect(affinity, 3);
  EXPECT_EQ(s.indices, (std::vector<int>{0, 1, 2}));
  for (int i = 0; i < 3; ++i) EXPECT_DOUBLE_EQ(s.weights[i], affinity[i]);
}

TEST(TopKSelectTest, TiesGoToLowestIndex) {
  const std::vector<double> affinity = {0.25, 0.25, 0.25, 0.25};
  EXPECT_EQ(TopKSelect(affinity, 1).indices, (std::vector<int>{0}));
  EXPECT_EQ(TopKSelect(affinity, 2).indices, (std::vector<int>{0, 1}));
}

TEST(TopKSelectTest, RejectsBadInput) {
  const std::vector<double> affinity = {0.5, 0.5};
  EXPECT_THROW(TopKSelect(affinity, 0), ValidationError);
  EXPECT_THROW(TopKSelect(affinity, 3), ValidationError);
  const std::vector<double> unnormalized = {0.5, 0.6};
  EXPECT_THROW(TopKSelect(unnormalized, 1), ValidationError);
}

TEST(ZipfTest, HarmonicNormalization) {
  const std::vector<int> ranked = {4, 1, 7};
  const auto r = ZipfRequests(ranked, 1.0);
  ASSERT_EQ(r.size(), 3u);
  EXPECT_EQ(r[0].model, 4);
  EXPECT_DOUBLE_EQ(r[0].probability, 6.0 / 11.0);
  EXPECT_DOUBLE_EQ(r[1].probability, 3.0 / 11.0);
  EXPECT_DOUBLE_EQ(r[2].probability, 2.0 / 11.0);
}

TEST(ZipfTest, ZeroExponentIsUniform) {
  const std::vector<int> ranked = {0, 1, 2, 3};
  for (const ModelRequest& r : ZipfRequests(ranked, 0.0)) {
    EXPECT_DOUBLE_EQ(r.probability, 0.25);
  }
}

TEST(ZipfTest, SumsToOne) {
  const std::vector<int> ranked = {0, 1, 2, 3, 4};
  double total = 0.0;
  for (const ModelRequest& r : ZipfRequests(ranked, 1.2)) total += r.probability;
  EXPECT_NEAR(total, 1.0, 1e-15);
  EXPECT_THROW(ZipfRequests(ranked, -1.0), ValidationError);
}

class SynthesizeTest : public ::testing::Test {
 protected:
  ExpertCatalog catalog_ =
      ExpertCatalog::Build({Model("two", 2, 6, 2), Model("one", 1, 4, 1)});
  std::vector<std::vector<ModelRequest>> requests_ = {{{0, 0.7}, {1, 0.3}},
                                                      {{1, 1.0}}};
};

TEST_F(SynthesizeTest, ConcentratedLogitsPickTheirPair) {
  GatingParams g;
  g.user_sharpness = 0.0;
  g.token_noise = 0.1;
  g.mean_logits_override[{0, 0}] = {0.0, 0.0, 20.0, 0.0, 0.0, 20.0};
  const ActivationProfile p = SynthesizeProfile(catalog_, requests_, g, 2000, 3);
  const auto layer = p.layer({0, 0, 0});
  ASSERT_EQ(layer.size(), 1u);
  EXPECT_EQ(layer[0].experts, (ExpertSubset{2, 5}));
  EXPECT_DOUBLE_EQ(layer[0].probability, 1.0);
}

TEST_F(SynthesizeTest, UniformLogitsAreNearUniform) {
  GatingParams g;
  g.popularity_sharpness = 0.0;
  g.user_sharpness = 0.0;
  const int tokens = 40000;
  const ActivationProfile p = SynthesizeProfile(catalog_, requests_, g, tokens, 11);
  const auto layer = p.layer({1, 1, 0});
  std::vector<double> counts(4, 0.0);
  for (const SubsetProbability& s : layer) {
    counts[s.experts[0] - catalog_.LayerBase(1, 0)] += s.probability * tokens;
  }
  double chi2 = 0.0;
  for (double c : counts) chi2 += (c - tokens / 4.0) * (c - tokens / 4.0) / (tokens / 4.0);
  // 3 degrees of freedom, p = 0.001.
  EXPECT_LT(chi2, 16.27);
}

TEST_F(SynthesizeTest, TablesAreNormalizedAndDeterministic) {
  const GatingParams g;
  const ActivationProfile a = SynthesizeProfile(catalog_, requests_, g, 500, 5);
  const ActivationProfile b = SynthesizeProfile(catalog_, requests_, g, 500, 5);
  a.Validate(catalog_);
  ASSERT_EQ(a.layers().size(), b.layers().size());
  for (const auto& [key, entries] : a.layers()) {
    const auto other = b.layer(key);
    ASSERT_EQ(entries.size(), other.size());
    double total = 0.0;
    for (size_t i = 0; i < entries.size(); ++i) {
      EXPECT_EQ(entries[i].experts, other[i].experts);
      EXPECT_EQ(entries[i].probability, other[i].probability);
      total += entries[i].probability;
    }
    EXPECT_NEAR(total, 1.0, 1e-12);
  }
}

TEST_F(SynthesizeTest, MarginalEqualsEmpiricalActivationFrequency) {
  const GatingParams g;
  const int tokens = 777;
  const ActivationProfile p = SynthesizeProfile(catalog_, requests_, g, tokens, 9);
  std::map<ExpertIndex, double> marginal;
  for (const SubsetProbability& s : p.layer({0, 0, 1})) {
    for (ExpertIndex e : s.experts) marginal[e] += s.probability;
  }
  double total = 0.0;
  for (const auto& [e, m] : marginal) {
    // Each marginal is a count over the token budget.
    EXPECT_NEAR(m * tokens, std::round(m * tokens), 1e-9);
    total += m;
  }
  EXPECT_NEAR(total, 2.0, 1e-12);
}

TEST(ProfileTest, ValidateNamesTheProblem) {
  const ExpertCatalog c = ExpertCatalog::Build({Model("m", 1, 3, 2)});
  ActivationProfile p(1);
  p.SetModelRequests(0, {{0, 1.0}});
  EXPECT_THROW(p.Validate(c), ValidationError);  // missing table
  p.SetLayerDistribution({0, 0, 0}, {{{0, 1}, 0.5}, {{1, 2}, 0.4}});
  EXPECT_THROW(p.Validate(c), ValidationError);  // mass 0.9
  p.SetLayerDistribution({0, 0, 0}, {{{0, 1}, 0.5}, {{1, 2}, 0.5}});
  EXPECT_NO_THROW(p.Validate(c));
  p.SetLayerDistribution({0, 0, 0}, {{{0}, 1.0}});
  EXPECT_THROW(p.Validate(c), ValidationError);  // wrong subset size
}

TEST(LocalCacheTest, BudgetZeroIsEmpty) {
  const ExpertCatalog c = ExpertCatalog::Build({Model("m", 1, 3, 1)});
  ActivationProfile p(1);
  p.SetModelRequests(0, {{0, 1.0}});
  p.SetLayerDistribution({0, 0, 0}, {{{0}, 0.2}, {{1}, 0.5}, {{2}, 0.3}});
  EXPECT_TRUE(AssignLocalCache(c, p, 0, 0).empty());
  EXPECT_EQ(AssignLocalCache(c, p, 0, 2), (std::vector<ExpertIndex>{1, 2}));
  EXPECT_EQ(BuildLocalCache(c, p, 3).Count(0), 3);
  EXPECT_THROW(AssignLocalCache(c, p, 0, 4), ValidationError);
}

}  // namespace
}  // namespace moecache
