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

"""Reader for results.csv, the interface consumed by the plotting scripts."""

import csv
import io
import os

_FLOAT_COLUMNS = {
    "sweep_value", "average_latency_s", "objective_s", "runtime_s",
    "kappa_max", "implied_bound", "kappa_closed_form",
}
_INT_COLUMNS = {
    "schema_version", "seed", "placed_experts", "capacity_ok", "exact_routing",
}


def _convert(key, value):
    if value == "":
        return None
    if key in _FLOAT_COLUMNS:
        return float(value)
    if key in _INT_COLUMNS:
        return int(value)
    return value


def load_results(source):
    """Parses results.csv from a path or from the CSV text itself.

    Returns a list of dicts; empty cells become None.
    """
    if os.path.exists(str(source)):
        with open(source, newline="") as f:
            text = f.read()
    else:
        text = str(source)
    reader = csv.DictReader(io.StringIO(text))
    return [{k: _convert(k, v) for k, v in row.items()} for row in reader]
