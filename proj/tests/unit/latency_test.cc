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


#include "moecache/latency.h"

#include <cmath>
#include <random>
#include <vector>

#include "gtest/gtest.h"
#include "moecache/error.h"
#include "moecache/oracles.h"
#include "moecache/rng.h"
#include "moecache/small_instances.h"
#include "test_instances.h"

namespace moecache {
namespace {

using testing::HandTopology;
using testing::Model;
using testing::SingleModelInstance;

constexpr double kEmbeddingBits = 4096 * 8.0;

// Hop latencies recomputed from the link formulas for the hand topology.
struct Hops {
  double ul, dl, bh, cp_edge, cp_cloud, cp_user, cloud;
};

Hops HopsFor(const Instance& inst, double user_to_server_m, double backhaul_bps) {
  const LinkModel& link = inst.topology().link;
  const double noise = link.noise_psd_w_per_hz * 5e6;
  const double path = std::pow(user_to_server_m, -4.0);
  Hops h;
  h.ul = kEmbeddingBits / (5e6 * std::log2(1.0 + 0.01 * path / noise));
  h.dl = kEmbeddingBits / (5e6 * std::log2(1.0 + 6.30957344480193 * path / noise));
  h.bh = kEmbeddingBits / backhaul_bps;
  h.cp_edge = 1e9 / 82.58e12;
  h.cp_cloud = 1e9 / 312e12;
  h.cp_user = 1e9 * inst.catalog().model(0).experts_per_layer / 50e12;
  h.cloud = 0.01;
  return h;
}

TEST(LatencyTest, HopConstantsMatchFormulas) {
  const auto inst = SingleModelInstance(Model("m", 1, 2, 1), {}, {{{0}, 1.0}});
  const Hops h = HopsFor(*inst, 10.0, 1e7);
  EXPECT_NEAR(inst->uplink(0, 0), h.ul, 1e-12 * h.ul);
  EXPECT_NEAR(inst->downlink(0, 0), h.dl, 1e-12 * h.dl);
  EXPECT_DOUBLE_EQ(inst->backhaul(0, 1, 0), h.bh);
  EXPECT_DOUBLE_EQ(inst->edge_compute(1, 0), h.cp_edge);
  EXPECT_DOUBLE_EQ(inst->cloud_compute(0), h.cp_cloud);
  EXPECT_DOUBLE_EQ(inst->to_cloud(0, 0), 0.01);
}

TEST(LatencyTest, FullLocalHitIsLocalCompute) {
  const auto inst =
      SingleModelInstance(Model("m", 1, 3, 2), {}, {{{0, 1}, 1.0}}, {{0, 1}});
  const Placement empty(inst->catalog(), 2);
  const ExpertIndex s[] = {0, 1};
  const Hops h = HopsFor(*inst, 10.0, 1e7);
  EXPECT_DOUBLE_EQ(TokenLatency(*inst, 0, s, empty).total, h.cp_user);
  EXPECT_DOUBLE_EQ(MaxTokenLatency(*inst, 0, s), h.cp_user);
  const BetaCounts b = CountActivated(*inst, 0, s, empty);
  EXPECT_EQ(b.local, 2);
  EXPECT_EQ(b.cloud, 0);
}

TEST(LatencyTest, TopOneCloudMiss) {
  const auto inst = SingleModelInstance(Model("m", 1, 2, 1), {}, {{{0}, 1.0}});
  const Placement empty(inst->catalog(), 2);
  const ExpertIndex s[] = {0};
  const Hops h = HopsFor(*inst, 10.0, 1e7);
  const double expected = h.ul + h.dl + h.cloud + h.cp_cloud + h.cloud;
  EXPECT_NEAR(TokenLatency(*inst, 0, s, empty).total, expected, 1e-15);
  const BetaCounts b = CountActivated(*inst, 0, s, empty);
  EXPECT_EQ(b.cloud, 1);
}

TEST(LatencyTest, TopTwoBothOnAssociatedServerComputeOnce) {
  const auto inst = SingleModelInstance(Model("m", 1, 3, 2), {}, {{{0, 1}, 1.0}});
  Placement x(inst->catalog(), 2);
  x.Add(0, 0);
  x.Add(0, 1);
  const ExpertIndex s[] = {0, 1};
  const Hops h = HopsFor(*inst, 10.0, 1e7);
  EXPECT_NEAR(TokenLatency(*inst, 0, s, x).total, h.ul + 2 * h.dl + h.cp_edge, 1e-15);
  const BetaCounts b = CountActivated(*inst, 0, s, x);
  EXPECT_EQ(b.associated, 2);
}

TEST(LatencyTest, OneAssociatedOneRemote) {
  const auto inst = SingleModelInstance(Model("m", 1, 3, 2), {}, {{{0, 1}, 1.0}});
  Placement x(inst->catalog(), 2);
  x.Add(0, 0);
  x.Add(1, 1);
  const ExpertIndex s[] = {0, 1};
  const BetaCounts b = CountActivated(*inst, 0, s, x);
  EXPECT_EQ(b.local, 0);
  EXPECT_EQ(b.associated, 1);
  EXPECT_EQ(b.cloud, 0);
  EXPECT_EQ(b.other_edges, 1);
  const Hops h = HopsFor(*inst, 10.0, 1e7);
  const double expected = h.ul + 2 * h.dl + h.cp_edge + (h.bh + h.cp_edge + h.bh);
  EXPECT_NEAR(TokenLatency(*inst, 0, s, x).total, expected, 1e-15);
}

TEST(LatencyTest, MaxLatencyWithOneLocalExpert) {
  const auto inst =
      SingleModelInstance(Model("m", 1, 3, 2), {}, {{{0, 1}, 1.0}}, {{0}});
  const ExpertIndex s[] = {0, 1};
  const Hops h = HopsFor(*inst, 10.0, 1e7);
  EXPECT_NEAR(MaxTokenLatency(*inst, 0, s),
              h.ul + h.dl + h.cloud + h.cp_cloud + h.cloud, 1e-15);
}

// Three servers; server 1 is close to server 0 (fast link), server 2 far.
HandTopology ThreeServers() {
  HandTopology h;
  h.server_x = {0.0, 100.0, 200.0};
  h.backhaul_matrix = {{0, 1e8, 1e7}, {1e8, 0, 1e7}, {1e7, 1e7, 0}};
  return h;
}

TEST(RoutingTest, SingleExpertGoesToCheapestRoundTrip) {
  const auto inst = SingleModelInstance(Model("m", 1, 3, 1), ThreeServers(), {{{0}, 1.0}});
  Placement x(inst->catalog(), 3);
  x.Add(1, 0);
  x.Add(2, 0);
  const ExpertIndex needed[] = {0};
  const RoutingDecision r = RouteOtherEdges(*inst, 0, needed, x);
  ASSERT_EQ(r.assignment.size(), 1u);
  EXPECT_EQ(r.assignment[0].server, 1);
  EXPECT_DOUBLE_EQ(r.cost, SingleExpertRoutingCost(*inst, 0, 0, x));
  const double bh = kEmbeddingBits / 1e8;
  EXPECT_NEAR(r.cost, bh + 1e9 / 82.58e12 + bh, 1e-15);
}

TEST(RoutingTest, TwoExpertsOnOneServerShareForwardAndCompute) {
  const auto inst = SingleModelInstance(Model("m", 1, 3, 2), ThreeServers(), {{{0, 1}, 1.0}});
  Placement x(inst->catalog(), 3);
  x.Add(2, 0);
  x.Add(2, 1);
  const ExpertIndex needed[] = {0, 1};
  const RoutingDecision r = RouteOtherEdges(*inst, 0, needed, x);
  const double bh = kEmbeddingBits / 1e7;
  EXPECT_NEAR(r.cost, bh + 1e9 / 82.58e12 + 2 * bh, 1e-15);
  EXPECT_NEAR(r.cost, ExhaustiveRoutingCost(*inst, 0, needed, x), 1e-15);
  EXPECT_EQ(r.served[2], 2);
}

TEST(RoutingTest, ExclusiveServersAddUp) {
  const auto inst = SingleModelInstance(Model("m", 1, 3, 2), ThreeServers(), {{{0, 1}, 1.0}});
  Placement x(inst->catalog(), 3);
  x.Add(1, 0);
  x.Add(2, 1);
  const ExpertIndex needed[] = {0, 1};
  const RoutingDecision r = RouteOtherEdges(*inst, 0, needed, x);
  const double fast = kEmbeddingBits / 1e8, slow = kEmbeddingBits / 1e7;
  const double cp = 1e9 / 82.58e12;
  EXPECT_NEAR(r.cost, (2 * fast + cp) + (2 * slow + cp), 1e-15);
}

TEST(RoutingTest, MissingHolderIsAnError) {
  const auto inst = SingleModelInstance(Model("m", 1, 3, 1), ThreeServers(), {{{0}, 1.0}});
  const Placement x(inst->catalog(), 3);
  const ExpertIndex needed[] = {0};
  EXPECT_THROW(RouteOtherEdges(*inst, 0, needed, x), ComputationError);
}

TEST(ObjectiveTest, EmptyPlacementIsZeroAndMaximal) {
  const auto inst = SingleModelInstance(Model("m", 2, 3, 2), {}, {{{0, 1}, 0.6}, {{1, 2}, 0.4}});
  const Placement empty(inst->catalog(), 2);
  EXPECT_DOUBLE_EQ(Objective(*inst, empty), 0.0);
  for (const Query& q : inst->queries()) {
    EXPECT_DOUBLE_EQ(TokenLatency(*inst, q.user, q.subset(), empty).total, q.max_latency);
  }
  EXPECT_NEAR(AverageLatency(*inst, empty), inst->max_average_latency(), 1e-15);
}

TEST(ObjectiveTest, AvgModelLatencyOfSingleSubsetLayer) {
  const auto inst = SingleModelInstance(Model("m", 1, 3, 2), {}, {{{0, 2}, 1.0}});
  Placement x(inst->catalog(), 2);
  x.Add(1, 2);
  const ExpertIndex s[] = {0, 2};
  EXPECT_DOUBLE_EQ(AvgModelLatency(*inst, 0, 0, x), TokenLatency(*inst, 0, s, x).total);
}

TEST(ObjectiveTest, EmptyPlacementModelLatencyIsSumOfMaxima) {
  const auto inst = SingleModelInstance(Model("m", 3, 3, 1), {}, {{{1}, 1.0}});
  const Placement empty(inst->catalog(), 2);
  double sum = 0.0;
  for (const Query& q : inst->queries()) sum += q.max_latency;
  EXPECT_NEAR(AvgModelLatency(*inst, 0, 0, empty), sum, 1e-15);
}

TEST(ObjectiveTest, CapacityViolationIsRejected) {
  HandTopology h;
  h.capacity = 1 << 20;
  const auto inst = SingleModelInstance(Model("m", 1, 3, 1), h, {{{0}, 1.0}});
  Placement x(inst->catalog(), 2);
  x.Add(0, 0);
  x.Add(0, 1);
  EXPECT_THROW(Objective(*inst, x), ValidationError);
  EXPECT_GT(ObjectiveUnchecked(*inst, x), 0.0);
}

TEST(ObjectiveTest, FullAssociatedCachingIsBestOfItsSupport) {
  // Every expert on every server: no other support can do better.
  SmallInstanceConfig c;
  c.models = {SmallModel("p", 1, 3, 2), SmallModel("s", 1, 2, 1)};
  const auto inst = MakeSmallInstance(c, 17);
  Placement all(inst->catalog(), inst->num_servers());
  for (int n = 0; n < inst->num_servers(); ++n) {
    for (ExpertIndex e = 0; e < inst->num_experts(); ++e) all.Add(n, e);
  }
  const double best = ObjectiveUnchecked(*inst, all);
  const int bits = inst->num_servers() * inst->num_experts();
  for (std::uint32_t mask = 0; mask < (1U << bits); ++mask) {
    Placement x(inst->catalog(), inst->num_servers());
    for (int b = 0; b < bits; ++b) {
      if ((mask >> b) & 1U) x.Add(b / inst->num_experts(), b % inst->num_experts());
    }
    EXPECT_LE(ObjectiveUnchecked(*inst, x), best + 1e-12);
  }
}

class ObjectiveOracleTest : public ::testing::TestWithParam<int> {};

TEST_P(ObjectiveOracleTest, MatchesReferenceEvaluation) {
  SmallInstanceConfig c;
  c.num_servers = 3;
  c.local_budget = 1;
  c.models = {SmallModel("p", 2, 4, 2), SmallModel("q", 1, 4, 3), SmallModel("s", 1, 3, 1)};
  const auto seed = static_cast<std::uint64_t>(GetParam());
  const auto inst = MakeSmallInstance(c, seed);
  Rng rng(DeriveSeed(seed, {99}));
  std::bernoulli_distribution coin(0.4);
  for (int trial = 0; trial < 10; ++trial) {
    Placement x(inst->catalog(), inst->num_servers());
    for (int n = 0; n < inst->num_servers(); ++n) {
      for (ExpertIndex e = 0; e < inst->num_experts(); ++e) {
        if (coin(rng)) x.Add(n, e);
      }
    }
    const double fast = ObjectiveUnchecked(*inst, x);
    const double slow = ReferenceObjective(*inst, x);
    EXPECT_NEAR(fast, slow, 1e-12 * std::max(1.0, slow));
    EXPECT_NEAR(AverageLatency(*inst, x), inst->max_average_latency() - fast, 1e-12);
  }
}

INSTANTIATE_TEST_SUITE_P(Seeds, ObjectiveOracleTest, ::testing::Range(0, 8));

}  // namespace
}  // namespace moecache
