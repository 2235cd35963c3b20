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

#include "moecache/io.h"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>
#include "moecache/error.h"
#include "moecache/latency.h"

namespace moecache {
namespace {

std::string Optional(const std::optional<double>& v) {
  return v ? FormatDouble(*v) : "";
}

std::string CsvSafe(std::string s) {
  for (char& c : s) {
    if (c == ',' || c == '\n' || c == '\r' || c == '"') c = ' ';
  }
  return s;
}

nlohmann::json JsonNumber(double v) {
  if (!std::isfinite(v)) return nullptr;
  return v;
}

nlohmann::json CurvatureObject(const CurvatureReport& report) {
  nlohmann::json j;
  j["per_server"] = report.per_server;
  j["kappa_max"] = report.global;
  j["implied_bound"] = report.implied_bound;
  const ClosedFormCurvature& cf = report.closed_form;
  nlohmann::json c;
  c["value"] = cf.value ? nlohmann::json(*cf.value) : nlohmann::json(nullptr);
  if (!cf.diagnostic.empty()) c["diagnostic"] = cf.diagnostic;
  c["model"] = cf.model;
  c["server_pair"] = {cf.server_a, cf.server_b};
  c["backhaul_s"] = cf.backhaul;
  c["edge_compute_s"] = cf.compute;
  j["closed_form"] = c;
  return j;
}

}  // namespace

std::string FormatDouble(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string ResultsCsv(const std::vector<ResultRow>& rows) {
  std::ostringstream out;
  out << "schema_version,axis,sweep_value,algorithm,seed,status,average_latency_s,"
         "objective_s,placed_experts,capacity_ok,exact_routing,kappa_max,"
         "implied_bound,kappa_closed_form,error\n";
  for (const ResultRow& r : rows) {
    out << kResultsSchemaVersion << ',' << r.axis << ',' << FormatDouble(r.sweep_value)
        << ',' << r.algorithm << ',' << r.seed << ',' << (r.ok ? "ok" : "error") << ',';
    if (r.ok) {
      out << FormatDouble(r.average_latency) << ',' << FormatDouble(r.objective) << ','
          << r.placed << ',' << (r.capacity_ok ? 1 : 0) << ',' << (r.exact_routing ? 1 : 0);
    } else {
      out << ",,,,";
    }
    out << ',' << Optional(r.kappa_max) << ',' << Optional(r.implied_bound) << ','
        << Optional(r.kappa_closed_form) << ',' << CsvSafe(r.error) << '\n';
  }
  return out.str();
}

std::string TimingsCsv(const std::vector<ResultRow>& rows) {
  std::ostringstream out;
  out << "schema_version,axis,sweep_value,algorithm,seed,runtime_s\n";
  for (const ResultRow& r : rows) {
    out << kResultsSchemaVersion << ',' << r.axis << ',' << FormatDouble(r.sweep_value)
        << ',' << r.algorithm << ',' << r.seed << ','
        << (r.ok ? FormatDouble(r.runtime_s) : "") << '\n';
  }
  return out.str();
}

std::string PlacementCsv(const Instance& instance, const Placement& placement) {
  const ExpertCatalog& catalog = instance.catalog();
  std::ostringstream out;
  out << "server_id,model,layer,expert_index\n";
  for (int n = 0; n < placement.num_servers(); ++n) {
    for (ExpertIndex e : placement.ExpertsOn(n)) {
      const ExpertId id = catalog.ExpertOf(e);
      out << n << ',' << catalog.model(id.model).model_id << ',' << id.layer << ','
          << id.index << '\n';
    }
  }
  return out.str();
}

Placement ParsePlacementCsv(const std::string& text, const Instance& instance) {
  const ExpertCatalog& catalog = instance.catalog();
  Placement placement(catalog, instance.num_servers());
  std::istringstream in(text);
  std::string line;
  bool header = true;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (header) {
      if (line != "server_id,model,layer,expert_index") {
        throw ValidationError("placement.csv", "unexpected header");
      }
      header = false;
      continue;
    }
    std::istringstream cells(line);
    std::string server, model, layer, index;
    std::getline(cells, server, ',');
    std::getline(cells, model, ',');
    std::getline(cells, layer, ',');
    std::getline(cells, index, ',');
    const std::string where = "placement.csv line " + std::to_string(line_no);
    const auto m = catalog.FindModel(model);
    if (!m) throw ValidationError(where, "unknown model '" + model + "'");
    try {
      const int n = std::stoi(server);
      const int l = std::stoi(layer);
      const int i = std::stoi(index);
      const ModelSpec& spec = catalog.model(*m);
      if (n < 0 || n >= instance.num_servers() || l < 0 || l >= spec.num_moe_layers ||
          i < 0 || i >= spec.experts_per_layer) {
        throw ValidationError(where, "index out of range");
      }
      placement.Add(n, catalog.IndexOf({*m, l, i}));
    } catch (const std::logic_error& e) {
      if (dynamic_cast<const ValidationError*>(&e)) throw;
      throw ValidationError(where, "malformed row");
    }
  }
  return placement;
}

std::string BreakdownCsv(const Instance& instance, const Placement& placement) {
  const ExpertCatalog& catalog = instance.catalog();
  std::ostringstream out;
  out << "user,model,layer,subset,probability,uplink_s,downlink_s,edge_compute_s,"
         "backhaul_s,cloud_s,local_compute_s,total_s\n";
  for (const QueryBreakdownRow& r : AllBreakdowns(instance, placement)) {
    out << r.user << ',' << catalog.model(r.model).model_id << ',' << r.layer << ',';
    const ExpertIndex base = catalog.LayerBase(r.model, r.layer);
    for (size_t i = 0; i < r.subset.size(); ++i) {
      out << (i ? ";" : "") << (r.subset[i] - base);
    }
    const LatencyBreakdown& b = r.latency;
    out << ',' << FormatDouble(r.probability) << ',' << FormatDouble(b.uplink) << ','
        << FormatDouble(b.downlink) << ',' << FormatDouble(b.edge_compute) << ','
        << FormatDouble(b.backhaul) << ',' << FormatDouble(b.cloud) << ','
        << FormatDouble(b.local_compute) << ',' << FormatDouble(b.total) << '\n';
  }
  return out.str();
}

std::string CurvatureJson(const CurvatureReport& report) {
  return CurvatureObject(report).dump(2) + "\n";
}

std::string SummaryJson(const Instance& instance, const AlgorithmRun& run,
                        std::uint64_t seed) {
  nlohmann::json j;
  j["schema_version"] = kResultsSchemaVersion;
  j["algorithm"] = run.algorithm;
  j["seed"] = seed;
  j["objective_s"] = JsonNumber(run.objective);
  j["average_latency_s"] = JsonNumber(run.average_latency);
  j["max_average_latency_s"] = JsonNumber(run.max_average_latency);
  j["runtime_s"] = run.runtime_s;
  j["placed_experts"] = run.placement.size();
  j["capacity_ok"] = run.capacity_ok;
  j["exact_routing"] = instance.exact_routing();
  nlohmann::json servers = nlohmann::json::array();
  for (int n = 0; n < instance.num_servers(); ++n) {
    servers.push_back({{"server_id", n},
                       {"used_bytes", run.placement.used_bytes(n)},
                       {"capacity_bytes", instance.topology().servers[n].capacity_bytes}});
  }
  j["servers"] = servers;
  if (run.curvature) j["curvature"] = CurvatureObject(*run.curvature);
  if (run.greedy_stats) {
    j["greedy"] = {{"steps", run.greedy_stats->steps},
                   {"marginal_evaluations", run.greedy_stats->marginal_evaluations}};
  }
  return j.dump(2) + "\n";
}

void WriteFile(const std::string& path, const std::string& contents) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ComputationError("cannot write '" + path + "'");
  out << contents;
  if (!out) throw ComputationError("failed writing '" + path + "'");
}

}  // namespace moecache
