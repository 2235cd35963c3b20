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

#include "moecache/curvature.h"

#include <algorithm>
#include <limits>

#include "moecache/error.h"
#include "moecache/latency.h"

namespace moecache {

double SupermodularCurvature(const Instance& instance, int server,
                             const Placement& prior) {
  const SubproblemView view(instance, server, prior);
  const std::vector<ExpertIndex> ground = view.SupermodularGroundSet();
  double min_ratio = std::numeric_limits<double>::infinity();
  std::vector<ExpertIndex> rest;
  for (size_t i = 0; i < ground.size(); ++i) {
    rest.assign(ground.begin(), ground.end());
    rest.erase(rest.begin() + static_cast<std::ptrdiff_t>(i));
    const double full = view.Marginal(ground[i], rest, true);
    if (full <= 0.0) continue;
    const double alone = view.Marginal(ground[i], {}, true);
    min_ratio = std::min(min_ratio, alone / full);
  }
  if (min_ratio == std::numeric_limits<double>::infinity()) return 0.0;
  return std::clamp(1.0 - min_ratio, 0.0, 1.0);
}

std::optional<double> CurvatureEstimate(double backhaul, double compute) {
  const double denom = 2.0 * backhaul - compute;
  if (denom <= 0.0) return std::nullopt;
  return (backhaul - compute) / denom;
}

ClosedFormCurvature CurvatureClosedForm(const Instance& instance) {
  if (instance.num_servers() < 2) {
    throw ValidationError("servers", "closed-form curvature needs two servers");
  }
  const Topology& topology = instance.topology();
  ClosedFormCurvature out;
  double best_distance = std::numeric_limits<double>::infinity();
  for (int a = 0; a < instance.num_servers(); ++a) {
    for (int b = a + 1; b < instance.num_servers(); ++b) {
      const double d = Distance(topology.servers[a].position, topology.servers[b].position);
      if (d < best_distance) {
        best_distance = d;
        out.server_a = a;
        out.server_b = b;
      }
    }
  }
  double slowest = -1.0;
  for (int m = 0; m < instance.num_models(); ++m) {
    const double c = instance.edge_compute(out.server_a, m);
    if (c > slowest) {
      slowest = c;
      out.model = m;
    }
  }
  out.compute = slowest;
  out.backhaul = instance.backhaul(out.server_a, out.server_b, out.model);
  out.value = CurvatureEstimate(out.backhaul, out.compute);
  if (!out.value) {
    out.diagnostic = "edge compute latency is at least twice the backhaul latency";
  }
  return out;
}

CurvatureReport BuildCurvatureReport(const Instance& instance,
                                     const SuccessiveResult& result) {
  CurvatureReport report;
  report.per_server.assign(instance.num_servers(), 0.0);
  for (size_t i = 0; i < result.order.size(); ++i) {
    const int n = result.order[i];
    report.per_server[n] = SupermodularCurvature(instance, n, result.priors[i]);
    report.global = std::max(report.global, report.per_server[n]);
  }
  report.implied_bound = (1.0 - report.global) / 2.0;
  if (instance.num_servers() >= 2) report.closed_form = CurvatureClosedForm(instance);
  return report;
}

}  // namespace moecache
