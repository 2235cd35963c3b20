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


#include "moecache/network.h"

#include <cmath>

#include "gtest/gtest.h"
#include "moecache/error.h"

namespace moecache {
namespace {

UserNode UserAt(double x) {
  UserNode u;
  u.position = {x, 0.0};
  u.bandwidth_hz = 5e6;
  u.tx_power_w = 0.01;
  return u;
}

EdgeServerNode ServerAt(double x, double power_w) {
  EdgeServerNode s;
  s.position = {x, 0.0};
  s.tx_power_w = power_w;
  return s;
}

// Reference values evaluated with 30-digit arithmetic for B = 5 MHz, G = 1,
// alpha = 4, -174 dBm/Hz noise and d = 100 m.
constexpr double kUplink100m = 61474213.3382985240788;     // 0.01 W
constexpr double kDownlink100m = 107979773.217205453552;   // 38 dBm

TEST(NetworkTest, UplinkRateMatchesReference) {
  const LinkModel link;
  const double r = UplinkRate(UserAt(100.0), ServerAt(0.0, 6.30957344480193), link);
  EXPECT_NEAR(r, kUplink100m, 1e-9 * kUplink100m);
}

TEST(NetworkTest, DownlinkRateMatchesReference) {
  const LinkModel link;
  const double r = DownlinkRate(UserAt(100.0), ServerAt(0.0, 6.30957344480193), link);
  EXPECT_NEAR(r, kDownlink100m, 1e-9 * kDownlink100m);
  EXPECT_GT(r, UplinkRate(UserAt(100.0), ServerAt(0.0, 6.30957344480193), link));
}

TEST(NetworkTest, SymmetricPowersGiveEqualRates) {
  const LinkModel link;
  const EdgeServerNode s = ServerAt(0.0, 0.01);
  EXPECT_DOUBLE_EQ(UplinkRate(UserAt(250.0), s, link), DownlinkRate(UserAt(250.0), s, link));
}

TEST(NetworkTest, RateVanishesWithPower) {
  const LinkModel link;
  EXPECT_LT(ShannonRate(5e6, 1e-30, 1.0, 100.0, link), 1e-6);
}

TEST(NetworkTest, RateIsLinearInBandwidthAtFixedSnr) {
  LinkModel a;
  LinkModel b = a;
  b.noise_psd_w_per_hz = a.noise_psd_w_per_hz / 2.0;
  const double r1 = ShannonRate(5e6, 0.01, 1.0, 100.0, a);
  const double r2 = ShannonRate(10e6, 0.01, 1.0, 100.0, b);
  EXPECT_NEAR(r2, 2.0 * r1, 1e-9 * r2);
}

TEST(NetworkTest, DistanceClampAndZeroDistance) {
  LinkModel link;
  EXPECT_DOUBLE_EQ(ShannonRate(5e6, 0.01, 1.0, 0.0, link),
                   ShannonRate(5e6, 0.01, 1.0, 1.0, link));
  link.min_distance_m = 0.0;
  EXPECT_THROW(ShannonRate(5e6, 0.01, 1.0, 0.0, link), ValidationError);
}

TEST(NetworkTest, EmbeddingLatency) {
  EXPECT_DOUBLE_EQ(EmbeddingLatency(0, 1e6), 0.0);
  EXPECT_DOUBLE_EQ(EmbeddingLatency(1250, 1e6), 0.01);
  EXPECT_THROW(EmbeddingLatency(1, 0.0), ValidationError);
}

TEST(NetworkTest, CloudHop) {
  EXPECT_DOUBLE_EQ(CloudHopLatency(1 << 20, {CloudHop::Kind::kFixedLatency, 0.01}), 0.01);
  EXPECT_DOUBLE_EQ(CloudHopLatency(1250, {CloudHop::Kind::kRate, 1e6}), 0.01);
}

TEST(NetworkTest, ExpertComputeLatency) {
  ModelSpec m;
  m.experts_per_layer = 8;
  m.expert_flops = 1e9;
  EXPECT_NEAR(ExpertComputeLatency(NodeKind::kUser, m, 50e12), 1.6e-4, 1e-18);
  EXPECT_DOUBLE_EQ(ExpertComputeLatency(NodeKind::kEdge, m, 82.58e12), 1e9 / 82.58e12);
  EXPECT_THROW(ExpertComputeLatency(NodeKind::kEdge, m, 0.0), ValidationError);
}

TEST(NetworkTest, BackhaulRatesAreSymmetricAndUseWeakerPower) {
  const LinkModel link;
  const std::vector<EdgeServerNode> servers = {ServerAt(0.0, 1.0), ServerAt(300.0, 4.0)};
  const auto rates = ShannonBackhaulRates(servers, 1e8, link);
  EXPECT_DOUBLE_EQ(rates[0][1], rates[1][0]);
  EXPECT_DOUBLE_EQ(rates[0][1], ShannonRate(1e8, 1.0, 1.0, 300.0, link));
}

TEST(NetworkTest, AssociationPicksNearestWithLowIdTies) {
  Topology t;
  t.servers = {ServerAt(0.0, 1.0), ServerAt(100.0, 1.0)};
  t.users = {UserAt(49.0), UserAt(50.0), UserAt(51.0)};
  t.AssociateUsers();
  EXPECT_EQ(t.users[0].associated_server, 0);
  EXPECT_EQ(t.users[1].associated_server, 0);
  EXPECT_EQ(t.users[2].associated_server, 1);
}

}  // namespace
}  // namespace moecache
