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

// Supermodular curvature of the per-server co-activation term and the
// closed-form estimate built from backhaul and edge compute latencies.

#ifndef MOECACHE_CURVATURE_H_
#define MOECACHE_CURVATURE_H_

#include <optional>
#include <string>
#include <vector>

#include "moecache/instance.h"
#include "moecache/optimizers.h"
#include "moecache/placement.h"

namespace moecache {

// kappa = 1 - min_z g(z | {}) / g(z | V - z) over the demanded top_k > 1
// experts z with a positive denominator, clamped to [0, 1]; 0 when no expert
// qualifies.
double SupermodularCurvature(const Instance& instance, int server,
                             const Placement& prior);

struct ClosedFormCurvature {
  std::optional<double> value;
  std::string diagnostic;  // set when value is empty
  int model = -1;          // model with the slowest edge compute
  int server_a = -1;       // closest server pair
  int server_b = -1;
  double backhaul = 0.0;   // seconds, server_a -> server_b for `model`
  double compute = 0.0;    // seconds, edge compute for `model`
};

// (T - c) / (2T - c) for backhaul latency T and compute latency c; empty
// when 2T - c <= 0.
std::optional<double> CurvatureEstimate(double backhaul, double compute);

// Needs at least two servers.
ClosedFormCurvature CurvatureClosedForm(const Instance& instance);

struct CurvatureReport {
  std::vector<double> per_server;  // indexed by server id
  double global = 0.0;             // max over servers
  double implied_bound = 0.5;      // (1 - global) / 2
  ClosedFormCurvature closed_form;
};

// Per-server curvature against the priors the successive solver used.
CurvatureReport BuildCurvatureReport(const Instance& instance,
                                     const SuccessiveResult& result);

}  // namespace moecache

#endif  // MOECACHE_CURVATURE_H_
