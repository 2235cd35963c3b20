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

// File outputs: results and timings CSV, placement CSV, per-query latency
// breakdown CSV and the solve summary JSON.

#ifndef MOECACHE_IO_H_
#define MOECACHE_IO_H_

#include <optional>
#include <string>
#include <vector>

#include "moecache/curvature.h"
#include "moecache/instance.h"
#include "moecache/placement.h"
#include "moecache/sweep.h"

namespace moecache {

inline constexpr int kResultsSchemaVersion = 1;

// Shortest round-trip representation ("%.17g").
std::string FormatDouble(double v);

// Deterministic columns only; wall-clock runtimes go to the timings file.
std::string ResultsCsv(const std::vector<ResultRow>& rows);
std::string TimingsCsv(const std::vector<ResultRow>& rows);
// server_id,model,layer,expert_index
std::string PlacementCsv(const Instance& instance, const Placement& placement);
std::string BreakdownCsv(const Instance& instance, const Placement& placement);
std::string CurvatureJson(const CurvatureReport& report);
std::string SummaryJson(const Instance& instance, const AlgorithmRun& run,
                        std::uint64_t seed);

// Reads a placement.csv back; unknown models or out-of-range indices throw
// ValidationError.
Placement ParsePlacementCsv(const std::string& text, const Instance& instance);

void WriteFile(const std::string& path, const std::string& contents);

}  // namespace moecache

#endif  // MOECACHE_IO_H_
