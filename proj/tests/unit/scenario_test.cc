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


#include "moecache/scenario.h"

#include <filesystem>
#include <fstream>
#include <string>

#include "gtest/gtest.h"
#include "moecache/error.h"
#include "moecache/latency.h"

namespace moecache {
namespace {

std::string FieldOf(const std::string& json) {
  try {
    ParseScenario(json, ".");
  } catch (const ValidationError& e) {
    return e.field();
  }
  return "";
}

TEST(ScenarioTest, EmptyDocumentGivesDefaults) {
  const Scenario s = ParseScenario("{}", ".");
  EXPECT_EQ(s.topology.num_servers, 4);
  EXPECT_EQ(s.topology.num_users, 20);
  EXPECT_EQ(s.topology.server_capacity_bytes, 5'000'000'000ULL);
  EXPECT_DOUBLE_EQ(s.topology.server_compute_flops, 82.58e12);
  EXPECT_DOUBLE_EQ(s.topology.user_compute_flops, 50e12);
  EXPECT_DOUBLE_EQ(s.topology.user_tx_power_w, 0.01);
  EXPECT_NEAR(s.topology.server_tx_power_w, 6.30957344480193, 1e-12);
  EXPECT_DOUBLE_EQ(s.topology.path_loss_exponent, 4.0);
  EXPECT_EQ(s.models.size(), 12u);
  EXPECT_EQ(s.seeds.size(), 10u);
  EXPECT_EQ(s.sweep.values.size(), 5u);
}

TEST(ScenarioTest, ServerCountOverrideResamplesPositions) {
  const Scenario s = ParseScenario(R"({"topology": {"num_servers": 10}})", ".");
  const auto a = BuildInstance(s, 3);
  const auto b = BuildInstance(s, 3);
  const auto c = BuildInstance(s, 4);
  ASSERT_EQ(a->num_servers(), 10);
  for (int n = 0; n < 10; ++n) {
    EXPECT_EQ(a->topology().servers[n].position.x, b->topology().servers[n].position.x);
  }
  EXPECT_NE(a->topology().servers[0].position.x, c->topology().servers[0].position.x);
}

TEST(ScenarioTest, ErrorsNameTheField) {
  EXPECT_EQ(FieldOf(R"({"topology": {"server_capacity": -5}})"), "topology.server_capacity");
  EXPECT_NE(FieldOf(R"({"topology": {"sever_capacity": 5}})"), "");
  EXPECT_NE(FieldOf(R"({"algorithms": ["magic"]})"), "");
  EXPECT_NE(FieldOf(R"({"workload": {"zipf_exponent": -1}})"), "");
  EXPECT_THROW(ParseScenario("{not json", "."), ValidationError);
}

TEST(ScenarioTest, UnitsAreParsed) {
  const Scenario s = ParseScenario(R"({"topology": {
      "server_capacity": "6.25GB", "server_tx_power": "38dBm",
      "user_bandwidth": "10MHz", "noise_psd": "-174dBm/Hz",
      "cloud": {"latency": "20ms"}}})", ".");
  EXPECT_EQ(s.topology.server_capacity_bytes, 6'250'000'000ULL);
  EXPECT_NEAR(s.topology.server_tx_power_w, 6.30957344480193, 1e-12);
  EXPECT_DOUBLE_EQ(s.topology.user_bandwidth_hz, 1e7);
  EXPECT_NEAR(s.topology.noise_psd_w_per_hz, 3.981071705534972e-21, 1e-33);
  EXPECT_DOUBLE_EQ(s.topology.cloud.value, 0.02);
}

TEST(QuantityTest, Parsers) {
  EXPECT_EQ(ParseBytes("512KiB"), 512u * 1024u);
  EXPECT_EQ(ParseBytes("2 MB"), 2'000'000u);
  EXPECT_EQ(ParseBytes("1GiB"), 1ULL << 30);
  EXPECT_DOUBLE_EQ(ParsePowerWatts("10mW"), 0.01);
  EXPECT_NEAR(ParsePowerWatts("30dBm"), 1.0, 1e-15);
  EXPECT_DOUBLE_EQ(ParseFrequencyHz("5MHz"), 5e6);
  EXPECT_DOUBLE_EQ(ParseFlops("50TFLOPs"), 50e12);
  EXPECT_DOUBLE_EQ(ParseSeconds("250us"), 250e-6);
  EXPECT_THROW(ParseBytes("5 parsecs"), ValidationError);
}

TEST(ScenarioTest, InstanceDoesNotDependOnCapacity) {
  const Scenario s = ParseScenario("{}", ".");
  const auto a = BuildInstance(WithAxisValue(s, SweepAxis::kServerCapacity, 1.25e9), 2);
  const auto b = BuildInstance(WithAxisValue(s, SweepAxis::kServerCapacity, 7.5e9), 2);
  EXPECT_EQ(a->topology().servers[0].capacity_bytes, 1'250'000'000ULL);
  ASSERT_EQ(a->queries().size(), b->queries().size());
  EXPECT_EQ(a->max_average_latency(), b->max_average_latency());
}

TEST(ScenarioTest, DefaultWorkloadShape) {
  const auto inst = BuildInstance(ParseScenario("{}", "."), 0);
  for (int u = 0; u < inst->num_users(); ++u) {
    const auto& req = inst->profile().requests(u);
    EXPECT_GE(req.size(), 3u);
    EXPECT_LE(req.size(), 5u);
    EXPECT_EQ(inst->local_cache().Count(u), 50);
  }
}

class CsvScenarioTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = std::filesystem::temp_directory_path() /
           ("moecache_scenario_" + std::to_string(::testing::UnitTest::GetInstance()->random_seed()));
    std::filesystem::create_directories(dir_);
    Write("requests.csv", "user,model,probability\n0,tiny,1\n");
    Write("subsets.csv",
          "user,model,layer,subset,probability\n0,tiny,0,0;1,0.75\n0,tiny,0,1;2,0.25\n");
    Write("local.csv", "user,model,layer,expert_index\n0,tiny,0,2\n");
  }
  void TearDown() override { std::filesystem::remove_all(dir_); }
  void Write(const std::string& name, const std::string& text) {
    std::ofstream(dir_ / name) << text;
  }
  std::filesystem::path dir_;
};

TEST_F(CsvScenarioTest, ProfileAndLocalCacheFromTables) {
  const std::string json = R"({
    "models": [{"model_id": "tiny", "num_moe_layers": 1, "experts_per_layer": 3,
                "top_k": 2, "expert_bytes": "1MiB", "embedding_bytes": 4096,
                "expert_flops": 1e9}],
    "topology": {"num_servers": 2, "num_users": 1},
    "workload": {"requests_csv": "requests.csv", "subsets_csv": "subsets.csv",
                 "local_cache_csv": "local.csv"}})";
  const Scenario s = ParseScenario(json, dir_.string());
  const auto inst = BuildInstance(s, 0);
  const auto layer = inst->profile().layer({0, 0, 0});
  ASSERT_EQ(layer.size(), 2u);
  EXPECT_EQ(layer[0].experts, (ExpertSubset{0, 1}));
  EXPECT_DOUBLE_EQ(layer[0].probability, 0.75);
  EXPECT_TRUE(inst->local_cache().cached(0, 2));
  EXPECT_EQ(inst->local_cache().Count(0), 1);
}

TEST_F(CsvScenarioTest, BadTableIsRejected) {
  Write("subsets.csv", "user,model,layer,subset,probability\n0,tiny,0,0;1,0.5\n");
  const std::string json = R"({
    "models": [{"model_id": "tiny", "num_moe_layers": 1, "experts_per_layer": 3,
                "top_k": 2, "expert_bytes": "1MiB", "embedding_bytes": 4096,
                "expert_flops": 1e9}],
    "topology": {"num_servers": 2, "num_users": 1},
    "workload": {"requests_csv": "requests.csv", "subsets_csv": "subsets.csv"}})";
  EXPECT_THROW(BuildInstance(ParseScenario(json, dir_.string()), 0), ValidationError);
}

}  // namespace
}  // namespace moecache
