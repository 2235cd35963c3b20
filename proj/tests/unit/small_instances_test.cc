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

#include "gtest/gtest.h"
#include "moecache/latency.h"
#include "moecache/scenario.h"
#include "moecache/verify.h"

namespace moecache {
namespace {

TEST(WitnessTest, FindsBothSigns) {
  const auto inst = MakeWitnessInstance();
  EXPECT_EQ(inst->num_servers(), 4);
  const WitnessSearchResult w = SearchMarginalWitnesses(*inst);
  ASSERT_TRUE(w.positive.has_value());
  ASSERT_TRUE(w.negative.has_value());
  EXPECT_GT(w.positive->difference, 0.0);
  EXPECT_LT(w.negative->difference, 0.0);
  // Recompute the reported difference from the objective.
  for (const MarginalWitness* m : {&*w.positive, &*w.negative}) {
    Placement small_plus = m->smaller, large_plus = m->larger;
    small_plus.Add(m->server, m->expert);
    large_plus.Add(m->server, m->expert);
    const double d = (ObjectiveUnchecked(*inst, large_plus) - ObjectiveUnchecked(*inst, m->larger)) -
                     (ObjectiveUnchecked(*inst, small_plus) - ObjectiveUnchecked(*inst, m->smaller));
    EXPECT_NEAR(d, m->difference, 1e-15);
    EXPECT_TRUE(Intersection(m->smaller, m->larger) == m->smaller);
  }
}

TEST(SmallInstanceTest, DeterministicInSeed) {
  SmallInstanceConfig c;
  c.models = {SmallModel("p", 1, 4, 2)};
  const auto a = MakeSmallInstance(c, 8);
  const auto b = MakeSmallInstance(c, 8);
  EXPECT_EQ(a->max_average_latency(), b->max_average_latency());
  EXPECT_EQ(a->queries().size(), b->queries().size());
}

TEST(VerifySuiteTest, ReducedSuitePasses) {
  VerifyOptions o;
  o.trial_scale = 0.05;
  const Scenario s = ParseScenario(R"({"topology": {"num_users": 4}})", ".");
  const VerifyReport report = RunVerifySuite(s, o);
  for (const CheckResult& c : report.checks) EXPECT_TRUE(c.passed) << c.name << ": " << c.detail;
  EXPECT_TRUE(report.all_passed());
  EXPECT_NE(report.ToJson().find("scenario_capacity"), std::string::npos);
}

}  // namespace
}  // namespace moecache
