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


// Python bindings for the placement library.

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <memory>
#include <string>
#include <tuple>
#include <vector>

#include "moecache/curvature.h"
#include "moecache/error.h"
#include "moecache/io.h"
#include "moecache/knapsack.h"
#include "moecache/latency.h"
#include "moecache/optimizers.h"
#include "moecache/scenario.h"
#include "moecache/sweep.h"
#include "moecache/verify.h"
#include "moecache/workload.h"

namespace py = pybind11;

namespace moecache {
namespace {

// (server_id, model_id, layer, expert_index)
using PlacementRow = std::tuple<int, std::string, int, int>;

std::vector<PlacementRow> ToRows(const Instance& instance, const Placement& placement) {
  const ExpertCatalog& catalog = instance.catalog();
  std::vector<PlacementRow> rows;
  for (int n = 0; n < placement.num_servers(); ++n) {
    for (ExpertIndex e : placement.ExpertsOn(n)) {
      const ExpertId id = catalog.ExpertOf(e);
      rows.emplace_back(n, catalog.model(id.model).model_id, id.layer, id.index);
    }
  }
  return rows;
}

Placement FromRows(const Instance& instance, const std::vector<PlacementRow>& rows) {
  const ExpertCatalog& catalog = instance.catalog();
  Placement placement(catalog, instance.num_servers());
  for (const auto& [server, model_id, layer, index] : rows) {
    const auto m = catalog.FindModel(model_id);
    if (!m) throw ValidationError("placement", "unknown model '" + model_id + "'");
    if (server < 0 || server >= instance.num_servers()) {
      throw ValidationError("placement", "server id out of range");
    }
    try {
      placement.Add(server, catalog.IndexOf({*m, layer, index}));
    } catch (const std::out_of_range& e) {
      throw ValidationError("placement", e.what());
    }
  }
  return placement;
}

std::vector<KnapsackItem> Items(const std::vector<std::uint64_t>& weights,
                                const std::vector<double>& values) {
  if (weights.size() != values.size()) {
    throw ValidationError("values", "length differs from weights");
  }
  std::vector<KnapsackItem> items;
  for (size_t i = 0; i < weights.size(); ++i) items.push_back({weights[i], values[i]});
  return items;
}

py::dict RunToDict(const Instance& instance, const AlgorithmRun& run) {
  py::dict d;
  d["algorithm"] = run.algorithm;
  d["objective"] = run.objective;
  d["average_latency"] = run.average_latency;
  d["max_average_latency"] = run.max_average_latency;
  d["runtime_s"] = run.runtime_s;
  d["capacity_ok"] = run.capacity_ok;
  d["placement"] = ToRows(instance, run.placement);
  if (run.curvature) {
    d["kappa_max"] = run.curvature->global;
    d["implied_bound"] = run.curvature->implied_bound;
  }
  return d;
}

}  // namespace
}  // namespace moecache

PYBIND11_MODULE(_core, m) {
  using namespace moecache;
  m.doc() = "Expert placement across edge servers for MoE inference.";

  py::register_exception<ValidationError>(m, "ValidationError", PyExc_ValueError);
  py::register_exception<ComputationError>(m, "ComputationError", PyExc_RuntimeError);

  py::class_<Scenario>(m, "Scenario")
      .def_property_readonly("num_servers", [](const Scenario& s) { return s.topology.num_servers; })
      .def_property_readonly("num_users", [](const Scenario& s) { return s.topology.num_users; })
      .def_property_readonly("server_capacity",
                             [](const Scenario& s) { return s.topology.server_capacity_bytes; })
      .def_property_readonly("algorithms", [](const Scenario& s) { return s.algorithms; })
      .def_property_readonly("seeds", [](const Scenario& s) { return s.seeds; })
      .def_property_readonly("sweep_axis", [](const Scenario& s) { return SweepAxisName(s.sweep.axis); })
      .def_property_readonly("sweep_values", [](const Scenario& s) { return s.sweep.values; })
      .def("with_axis_value", [](const Scenario& s, double value) {
        return WithAxisValue(s, s.sweep.axis, value);
      }, py::arg("value"));

  m.def("parse_scenario", &ParseScenario, py::arg("json_text"), py::arg("base_dir") = ".");
  m.def("load_scenario", &LoadScenario, py::arg("path"));

  py::class_<Instance, std::shared_ptr<Instance>>(m, "Instance")
      .def_property_readonly("num_servers", &Instance::num_servers)
      .def_property_readonly("num_users", &Instance::num_users)
      .def_property_readonly("num_models", &Instance::num_models)
      .def_property_readonly("num_experts", &Instance::num_experts)
      .def_property_readonly("num_queries", [](const Instance& i) { return i.queries().size(); })
      .def_property_readonly("max_average_latency", &Instance::max_average_latency)
      .def_property_readonly("exact_routing", &Instance::exact_routing);

  m.def("build_instance", [](const Scenario& s, std::uint64_t seed) {
    return std::shared_ptr<Instance>(BuildInstance(s, seed));
  }, py::arg("scenario"), py::arg("seed") = 0);

  m.def("solve", [](const Instance& instance, const std::string& algorithm,
                    std::uint64_t seed) {
    return RunToDict(instance, RunAlgorithm(instance, algorithm, seed));
  }, py::arg("instance"), py::arg("algorithm"), py::arg("seed") = 0,
     "Runs greedy | dp | accel | lfu | random | brute.");

  m.def("objective", [](const Instance& instance, const std::vector<PlacementRow>& rows) {
    return Objective(instance, FromRows(instance, rows));
  }, py::arg("instance"), py::arg("placement"));
  m.def("average_latency", [](const Instance& instance, const std::vector<PlacementRow>& rows) {
    return AverageLatency(instance, FromRows(instance, rows));
  }, py::arg("instance"), py::arg("placement"));

  m.def("curvature", [](const Instance& instance) {
    const CurvatureReport r = BuildCurvatureReport(instance, SuccessivePlacement(instance));
    py::dict d;
    d["per_server"] = r.per_server;
    d["kappa_max"] = r.global;
    d["implied_bound"] = r.implied_bound;
    if (r.closed_form.value) d["closed_form"] = *r.closed_form.value;
    else d["closed_form"] = py::none();
    return d;
  }, py::arg("instance"));

  m.def("dp_knapsack", [](const std::vector<std::uint64_t>& weights,
                          const std::vector<double>& values, std::int64_t capacity,
                          std::uint64_t unit) {
    const KnapsackResult r = DpKnapsack(Items(weights, values), capacity, unit);
    return std::make_pair(r.value, r.selected);
  }, py::arg("weights"), py::arg("values"), py::arg("capacity"), py::arg("unit") = 1);
  m.def("accelerated_knapsack", [](const std::vector<std::uint64_t>& weights,
                                   const std::vector<double>& values, std::int64_t capacity,
                                   std::uint64_t unit) {
    const KnapsackResult r = AcceleratedKnapsack(Items(weights, values), capacity, unit);
    return std::make_pair(r.value, r.selected);
  }, py::arg("weights"), py::arg("values"), py::arg("capacity"), py::arg("unit") = 1);

  m.def("topk_select", [](const std::vector<double>& affinity, int k) {
    const TopKSelection s = TopKSelect(affinity, k);
    return std::make_pair(s.indices, s.weights);
  }, py::arg("affinity"), py::arg("k"));
  m.def("zipf_probabilities", [](int count, double exponent) {
    std::vector<int> ranked(count);
    for (int i = 0; i < count; ++i) ranked[i] = i;
    std::vector<double> p;
    for (const ModelRequest& r : ZipfRequests(ranked, exponent)) p.push_back(r.probability);
    return p;
  }, py::arg("count"), py::arg("exponent"));

  m.def("sweep_results_csv", [](const Scenario& s) {
    py::gil_scoped_release release;
    return ResultsCsv(RunSweep(s));
  }, py::arg("scenario"));

  m.def("verify", [](const Scenario& s, double scale, std::uint64_t seed) {
    VerifyOptions o;
    o.trial_scale = scale;
    o.seed = seed;
    const VerifyReport report = RunVerifySuite(s, o);
    py::list checks;
    for (const CheckResult& c : report.checks) {
      py::dict d;
      d["name"] = c.name;
      d["passed"] = c.passed;
      d["detail"] = c.detail;
      checks.append(d);
    }
    return py::make_tuple(report.all_passed(), checks);
  }, py::arg("scenario"), py::arg("scale") = 1.0, py::arg("seed") = 0);

  m.attr("RESULTS_SCHEMA_VERSION") = kResultsSchemaVersion;
}
