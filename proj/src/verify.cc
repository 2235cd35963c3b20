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

#include "moecache/verify.h"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include <nlohmann/json.hpp>
#include "moecache/curvature.h"
#include "moecache/error.h"
#include "moecache/latency.h"
#include "moecache/oracles.h"
#include "moecache/optimizers.h"
#include "moecache/rng.h"
#include "moecache/small_instances.h"
#include "moecache/sweep.h"

namespace moecache {
namespace {

constexpr double kTol = 1e-9;

int Trials(const VerifyOptions& o, int n) {
  return std::max(1, static_cast<int>(std::lround(n * o.trial_scale)));
}

Placement RandomSubset(const Instance& instance, Rng& rng, double p) {
  Placement x(instance.catalog(), instance.num_servers());
  std::bernoulli_distribution coin(p);
  for (int n = 0; n < instance.num_servers(); ++n) {
    for (ExpertIndex e = 0; e < instance.num_experts(); ++e) {
      if (coin(rng)) x.Add(n, e);
    }
  }
  return x;
}

SmallInstanceConfig K1Config(int servers) {
  SmallInstanceConfig c;
  c.num_servers = servers;
  c.models = {SmallModel("a", 2, 3, 1), SmallModel("b", 1, 4, 1, 2 << 20)};
  return c;
}

SmallInstanceConfig MixedConfig(int servers) {
  SmallInstanceConfig c;
  c.num_servers = servers;
  c.models = {SmallModel("p", 1, 4, 2), SmallModel("q", 1, 3, 2, 2 << 20),
              SmallModel("s", 1, 3, 1)};
  return c;
}

CheckResult Submodularity(const VerifyOptions& o) {
  CheckResult r{"submodularity_top1", true, ""};
  const auto instance = MakeSmallInstance(K1Config(3), DeriveSeed(o.seed, {1}));
  Rng rng(DeriveSeed(o.seed, {2}));
  int violations = 0;
  const int trials = Trials(o, 1000);
  for (int t = 0; t < trials; ++t) {
    const Placement x = RandomSubset(*instance, rng, 0.4);
    const Placement y = RandomSubset(*instance, rng, 0.4);
    const double lhs = ObjectiveUnchecked(*instance, x) + ObjectiveUnchecked(*instance, y);
    const double rhs = ObjectiveUnchecked(*instance, Union(x, y)) +
                       ObjectiveUnchecked(*instance, Intersection(x, y));
    if (lhs < rhs - kTol * std::max(1.0, std::abs(rhs))) ++violations;
  }
  r.passed = violations == 0;
  r.detail = std::to_string(violations) + " violations in " + std::to_string(trials) + " pairs";
  return r;
}

CheckResult Monotonicity(const VerifyOptions& o) {
  CheckResult r{"monotonicity", true, ""};
  Rng rng(DeriveSeed(o.seed, {3}));
  int violations = 0;
  const int trials = Trials(o, 1000);
  const int per_instance = 50;
  for (int t = 0; t < trials;) {
    const bool mixed = (t / per_instance) % 2 == 1;
    const auto instance = MakeSmallInstance(mixed ? MixedConfig(3) : K1Config(3),
                                            DeriveSeed(o.seed, {4, static_cast<std::uint64_t>(t)}));
    for (int i = 0; i < per_instance && t < trials; ++i, ++t) {
      Placement x = RandomSubset(*instance, rng, 0.3);
      const double before = ObjectiveUnchecked(*instance, x);
      const int n = static_cast<int>(rng() % instance->num_servers());
      const auto e = static_cast<ExpertIndex>(rng() % instance->num_experts());
      x.Add(n, e);
      if (ObjectiveUnchecked(*instance, x) < before - kTol * std::max(1.0, before)) ++violations;
    }
  }
  r.passed = violations == 0;
  r.detail = std::to_string(violations) + " decreases in " + std::to_string(trials) + " additions";
  return r;
}

CheckResult Witnesses() {
  CheckResult r{"non_submodular_witnesses", true, ""};
  const auto instance = MakeWitnessInstance();
  const WitnessSearchResult w = SearchMarginalWitnesses(*instance);
  r.passed = w.positive.has_value() && w.negative.has_value();
  std::ostringstream d;
  d << "searched " << w.triples << " triples";
  if (w.positive) d << "; max difference " << w.positive->difference;
  if (w.negative) d << "; min difference " << w.negative->difference;
  r.detail = d.str();
  return r;
}

CheckResult RoutingClosedForm(const VerifyOptions& o) {
  CheckResult r{"top1_routing_closed_form", true, ""};
  int mismatches = 0, compared = 0;
  for (int t = 0; t < Trials(o, 100); ++t) {
    const auto instance = MakeSmallInstance(K1Config(4), DeriveSeed(o.seed, {5, static_cast<std::uint64_t>(t)}));
    Rng rng(DeriveSeed(o.seed, {6, static_cast<std::uint64_t>(t)}));
    const Placement x = RandomSubset(*instance, rng, 0.35);
    for (const Query& q : instance->queries()) {
      const ExpertIndex e = q.experts[0];
      if (q.local_mask || x.Contains(q.server, e) || x.holders(e) == 0) continue;
      const ExpertIndex needed[] = {e};
      const double fast = RouteOtherEdges(*instance, q.user, needed, x).cost;
      const double closed = SingleExpertRoutingCost(*instance, q.user, e, x);
      ++compared;
      if (fast != closed) ++mismatches;
    }
  }
  r.passed = mismatches == 0 && compared > 0;
  r.detail = std::to_string(mismatches) + " mismatches in " + std::to_string(compared) + " queries";
  return r;
}

CheckResult RoutingExhaustive(const VerifyOptions& o) {
  CheckResult r{"routing_vs_exhaustive_assignment", true, ""};
  int mismatches = 0, compared = 0;
  for (int t = 0; t < Trials(o, 50); ++t) {
    SmallInstanceConfig c;
    c.num_servers = 5;
    c.models = {SmallModel("t", 1, 5, 3)};
    const auto instance = MakeSmallInstance(c, DeriveSeed(o.seed, {7, static_cast<std::uint64_t>(t)}));
    Rng rng(DeriveSeed(o.seed, {8, static_cast<std::uint64_t>(t)}));
    const Placement x = RandomSubset(*instance, rng, 0.4);
    for (const Query& q : instance->queries()) {
      std::vector<ExpertIndex> needed;
      for (ExpertIndex e : q.subset()) {
        const std::uint64_t others = x.holders(e) & ~(std::uint64_t{1} << q.server);
        if (!x.Contains(q.server, e) && others) needed.push_back(e);
      }
      if (needed.empty()) continue;
      const double fast = RouteOtherEdges(*instance, q.user, needed, x).cost;
      const double slow = ExhaustiveRoutingCost(*instance, q.user, needed, x);
      ++compared;
      if (std::abs(fast - slow) > 1e-12) ++mismatches;
    }
  }
  r.passed = mismatches == 0 && compared > 0;
  r.detail = std::to_string(mismatches) + " mismatches in " + std::to_string(compared) + " routings";
  return r;
}

CheckResult ObjectiveReference(const VerifyOptions& o) {
  CheckResult r{"objective_vs_reference", true, ""};
  int mismatches = 0;
  const int trials = Trials(o, 50);
  for (int t = 0; t < trials; ++t) {
    SmallInstanceConfig c = MixedConfig(3);
    c.local_budget = 2;
    const auto instance = MakeSmallInstance(c, DeriveSeed(o.seed, {9, static_cast<std::uint64_t>(t)}));
    Rng rng(DeriveSeed(o.seed, {10, static_cast<std::uint64_t>(t)}));
    const Placement x = RandomSubset(*instance, rng, 0.3);
    const double fast = ObjectiveUnchecked(*instance, x);
    const double slow = ReferenceObjective(*instance, x);
    if (std::abs(fast - slow) > 1e-12 * std::max(1.0, std::abs(slow))) ++mismatches;
  }
  r.passed = mismatches == 0;
  r.detail = std::to_string(mismatches) + " mismatches in " + std::to_string(trials) + " placements";
  return r;
}

CheckResult Telescoping(const VerifyOptions& o) {
  CheckResult r{"telescoping", true, ""};
  double worst = 0.0;
  const int trials = Trials(o, 100);
  for (int t = 0; t < trials; ++t) {
    SmallInstanceConfig c = MixedConfig(2 + t % 3);
    c.experts_per_server = 1 + t % 4;
    const auto instance = MakeSmallInstance(c, DeriveSeed(o.seed, {11, static_cast<std::uint64_t>(t)}));
    const SuccessiveResult s = SuccessivePlacement(*instance);
    double sum = 0.0;
    for (double v : s.subproblem_value) sum += v;
    const double f = ObjectiveUnchecked(*instance, s.placement);
    worst = std::max(worst, std::abs(f - sum) / std::max(1.0, f));
  }
  r.passed = worst <= kTol;
  r.detail = "max scaled gap " + std::to_string(worst);
  return r;
}

CheckResult Knapsacks(const VerifyOptions& o) {
  CheckResult r{"knapsack_exactness", true, ""};
  Rng rng(DeriveSeed(o.seed, {12}));
  int dp_bad = 0, accel_bad = 0;
  const int dp_trials = Trials(o, 500), accel_trials = Trials(o, 100);
  for (int t = 0; t < dp_trials; ++t) {
    std::vector<KnapsackItem> items(1 + rng() % 15);
    for (KnapsackItem& it : items) {
      it.weight = 1 + rng() % 10;
      it.value = static_cast<double>(rng() % 100);
    }
    const auto cap = static_cast<std::int64_t>(rng() % 40);
    if (DpKnapsack(items, cap, 1).value != ExhaustiveKnapsack(items, cap).value) ++dp_bad;
  }
  for (int t = 0; t < accel_trials; ++t) {
    std::vector<KnapsackItem> items(1 + rng() % 60);
    const std::uint64_t weights[] = {2, 3, 7};
    for (KnapsackItem& it : items) {
      it.weight = weights[rng() % 3];
      it.value = static_cast<double>(rng() % 1000);
    }
    const auto cap = static_cast<std::int64_t>(rng() % 150);
    const double dp = DpKnapsack(items, cap, 1).value;
    if (AcceleratedKnapsack(items, cap, 1, ConvolutionMethod::kMonotone).value != dp ||
        AcceleratedKnapsack(items, cap, 1, ConvolutionMethod::kDirect).value != dp) {
      ++accel_bad;
    }
  }
  r.passed = dp_bad == 0 && accel_bad == 0;
  r.detail = std::to_string(dp_bad) + " dp and " + std::to_string(accel_bad) +
             " grouped mismatches";
  return r;
}

CheckResult Approximation(const VerifyOptions& o) {
  CheckResult r{"approximation_bounds", true, ""};
  int bad_greedy = 0, bad_global = 0, bad_single = 0;
  const int trials = Trials(o, 50);
  for (int t = 0; t < trials; ++t) {
    const auto key = static_cast<std::uint64_t>(t);
    SmallInstanceConfig k1 = K1Config(2);
    k1.experts_per_server = 1 + t % 2;
    const auto a = MakeSmallInstance(k1, DeriveSeed(o.seed, {13, key}));
    const double fa = BruteForceOptimal(*a).value;
    if (ObjectiveUnchecked(*a, GreedyPlacement(*a)) < (1.0 - 1.0 / std::exp(1.0)) * fa - kTol) {
      ++bad_greedy;
    }
    SmallInstanceConfig mixed = MixedConfig(2);
    mixed.experts_per_server = 1 + t % 2;
    const auto b = MakeSmallInstance(mixed, DeriveSeed(o.seed, {14, key}));
    const SuccessiveResult sb = SuccessivePlacement(*b);
    const CurvatureReport rb = BuildCurvatureReport(*b, sb);
    if (ObjectiveUnchecked(*b, sb.placement) <
        rb.implied_bound * BruteForceOptimal(*b).value - kTol) {
      ++bad_global;
    }
    SmallInstanceConfig single = MixedConfig(1);
    single.experts_per_server = 2 + t % 3;
    const auto c = MakeSmallInstance(single, DeriveSeed(o.seed, {15, key}));
    const SuccessiveResult sc = SuccessivePlacement(*c);
    const double kappa = BuildCurvatureReport(*c, sc).global;
    if (ObjectiveUnchecked(*c, sc.placement) <
        (1.0 - kappa) * BruteForceOptimal(*c).value - kTol) {
      ++bad_single;
    }
  }
  r.passed = bad_greedy == 0 && bad_global == 0 && bad_single == 0;
  r.detail = std::to_string(bad_greedy) + " greedy, " + std::to_string(bad_global) +
             " two-server, " + std::to_string(bad_single) + " one-server violations in " +
             std::to_string(trials) + " instances each";
  return r;
}

CheckResult Sandwich(const VerifyOptions& o) {
  CheckResult r{"supermodular_sandwich", true, ""};
  int violations = 0, tested = 0;
  Rng rng(DeriveSeed(o.seed, {16}));
  for (int t = 0; t < Trials(o, 5); ++t) {
    SmallInstanceConfig c = MixedConfig(2);
    const auto instance = MakeSmallInstance(c, DeriveSeed(o.seed, {17, static_cast<std::uint64_t>(t)}));
    const SuccessiveResult s = SuccessivePlacement(*instance);
    for (size_t i = 0; i < s.order.size(); ++i) {
      const int n = s.order[i];
      const SubproblemView view(*instance, n, s.priors[i]);
      const double kappa = SupermodularCurvature(*instance, n, s.priors[i]);
      const std::vector<ExpertIndex> ground = view.SupermodularGroundSet();
      for (int a = 0; a < 200; ++a) {
        std::vector<ExpertIndex> set;
        for (ExpertIndex e : ground) {
          if (rng() & 1U) set.push_back(e);
        }
        const double whole = view.SuperValue(set);
        double singles = 0.0;
        for (ExpertIndex e : set) singles += view.SuperValue(std::span(&e, 1));
        const double tol = kTol * std::max(1.0, std::abs(whole));
        ++tested;
        if ((1.0 - kappa) * whole > singles + tol || singles > whole + tol) ++violations;
      }
    }
  }
  r.passed = violations == 0;
  r.detail = std::to_string(violations) + " violations in " + std::to_string(tested) + " subsets";
  return r;
}

CheckResult ScenarioCapacity(const Scenario& scenario) {
  CheckResult r{"scenario_capacity", true, ""};
  const auto instance = BuildInstance(scenario, scenario.seeds.front());
  std::ostringstream d;
  for (const std::string& algorithm : scenario.algorithms) {
    if (algorithm == "brute") continue;
    RunOptions options = OptionsFor(scenario);
    options.compute_curvature = false;
    const AlgorithmRun run = RunAlgorithm(*instance, algorithm, scenario.seeds.front(), options);
    if (!run.capacity_ok) {
      r.passed = false;
      d << algorithm << " over capacity; ";
    }
  }
  // Injected violation: fill server 0 past its capacity and expect detection.
  Placement bad(instance->catalog(), instance->num_servers());
  const std::uint64_t cap = instance->topology().servers[0].capacity_bytes;
  for (ExpertIndex e = 0; e < instance->num_experts() && bad.used_bytes(0) <= cap; ++e) {
    bad.Add(0, e);
  }
  bool detected = !SatisfiesCapacity(bad, instance->topology());
  try {
    Objective(*instance, bad);
    detected = false;
  } catch (const ValidationError&) {
  }
  if (bad.used_bytes(0) <= cap) {
    d << "library too small to overfill server 0; ";
  } else if (!detected) {
    r.passed = false;
    d << "injected violation not detected; ";
  }
  d << "algorithms checked: " << scenario.algorithms.size();
  r.detail = d.str();
  return r;
}

}  // namespace

bool VerifyReport::all_passed() const {
  return std::all_of(checks.begin(), checks.end(),
                     [](const CheckResult& c) { return c.passed; });
}

std::string VerifyReport::ToJson() const {
  nlohmann::json j;
  j["passed"] = all_passed();
  j["checks"] = nlohmann::json::array();
  for (const CheckResult& c : checks) {
    j["checks"].push_back({{"name", c.name}, {"passed", c.passed}, {"detail", c.detail}});
  }
  return j.dump(2) + "\n";
}

VerifyReport RunVerifySuite(const Scenario& scenario, const VerifyOptions& options) {
  VerifyReport report;
  auto run = [&](auto fn) {
    try {
      report.checks.push_back(fn());
    } catch (const std::exception& e) {
      report.checks.push_back({"exception", false, e.what()});
    }
  };
  run([&] { return Submodularity(options); });
  run([&] { return Monotonicity(options); });
  run([&] { return Witnesses(); });
  run([&] { return RoutingClosedForm(options); });
  run([&] { return RoutingExhaustive(options); });
  run([&] { return ObjectiveReference(options); });
  run([&] { return Telescoping(options); });
  run([&] { return Knapsacks(options); });
  run([&] { return Approximation(options); });
  run([&] { return Sandwich(options); });
  if (options.scenario_checks) run([&] { return ScenarioCapacity(scenario); });
  return report;
}

}  // namespace moecache
