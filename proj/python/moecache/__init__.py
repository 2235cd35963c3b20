# Copyright 2026 The MoECache Authors.
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

"""Expert placement across edge servers for MoE inference."""

from moecache._core import (
    ComputationError,
    Instance,
    RESULTS_SCHEMA_VERSION,
    Scenario,
    ValidationError,
    accelerated_knapsack,
    average_latency,
    build_instance,
    curvature,
    dp_knapsack,
    load_scenario,
    objective,
    parse_scenario,
    solve,
    sweep_results_csv,
    topk_select,
    verify,
    zipf_probabilities,
)
from moecache.results import load_results

__all__ = [
    "ComputationError",
    "Instance",
    "RESULTS_SCHEMA_VERSION",
    "Scenario",
    "ValidationError",
    "accelerated_knapsack",
    "average_latency",
    "build_instance",
    "curvature",
    "dp_knapsack",
    "load_results",
    "load_scenario",
    "objective",
    "parse_scenario",
    "solve",
    "sweep_results_csv",
    "topk_select",
    "verify",
    "zipf_probabilities",
]
