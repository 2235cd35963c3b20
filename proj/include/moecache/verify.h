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

// Self-check suite behind the `verify` command: structural properties and
// oracle cross-checks on generated tiny instances, plus capacity checks on
// the scenario's own instance.

#ifndef MOECACHE_VERIFY_H_
#define MOECACHE_VERIFY_H_

#include <cstdint>
#include <string>
#include <vector>

#include "moecache/scenario.h"

namespace moecache {

struct CheckResult {
  std::string name;
  bool passed = false;
  std::string detail;
};

struct VerifyReport {
  std::vector<CheckResult> checks;
  bool all_passed() const;
  std::string ToJson() const;
};

struct VerifyOptions {
  std::uint64_t seed = 0;
  // Multiplies every trial count; 1 runs the full suite.
  double trial_scale = 1.0;
  bool scenario_checks = true;
};

VerifyReport RunVerifySuite(const Scenario& scenario, const VerifyOptions& options = {});

}  // namespace moecache

#endif  // MOECACHE_VERIFY_H_
