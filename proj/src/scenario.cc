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

#include "moecache/scenario.h"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <random>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>
#include "moecache/error.h"
#include "moecache/rng.h"

namespace moecache {
namespace {

using nlohmann::json;

constexpr std::uint64_t kServerStream = 1;
constexpr std::uint64_t kUserStream = 2;
constexpr std::uint64_t kModelStream = 3;
constexpr std::uint64_t kProfileStream = 4;

ModelSpec Spec(std::string id, int layers, int experts, int k,
               std::uint64_t bytes, std::uint64_t embedding, double flops) {
  ModelSpec s;
  s.model_id = std::move(id);
  s.num_moe_layers = layers;
  s.experts_per_layer = experts;
  s.top_k = k;
  s.expert_bytes = bytes;
  s.embedding_bytes = embedding;
  s.expert_flops = flops;
  return s;
}

// ---- quantities -----------------------------------------------------------

struct Amount {
  double number = 0.0;
  std::string unit;
};

Amount SplitQuantity(const std::string& text) {
  const char* begin = text.c_str();
  char* end = nullptr;
  const double number = std::strtod(begin, &end);
  if (end == begin) throw ValidationError("quantity", "no number in '" + text + "'");
  std::string unit(end);
  unit.erase(std::remove_if(unit.begin(), unit.end(),
                            [](unsigned char c) { return std::isspace(c); }),
             unit.end());
  return {number, unit};
}

double Scaled(const std::string& text, const std::map<std::string, double>& units,
              const char* what) {
  const Amount q = SplitQuantity(text);
  const auto it = units.find(q.unit);
  if (it == units.end()) {
    throw ValidationError(what, "unknown unit '" + q.unit + "' in '" + text + "'");
  }
  return q.number * it->second;
}

// ---- JSON helpers ---------------------------------------------------------

void CheckKeys(const json& obj, const std::set<std::string>& allowed,
               const std::string& path) {
  if (!obj.is_object()) throw ValidationError(path, "must be an object");
  for (const auto& [key, value] : obj.items()) {
    if (!allowed.count(key)) {
      throw ValidationError(path.empty() ? key : path + "." + key, "unknown field");
    }
  }
}

std::string Join(const std::string& path, const std::string& key) {
  return path.empty() ? key : path + "." + key;
}

template <typename Fn>
auto Field(const std::string& field, Fn fn) {
  try {
    return fn();
  } catch (const ValidationError& e) {
    if (e.field() == field) throw;
    throw ValidationError(field, e.what());
  } catch (const json::exception& e) {
    throw ValidationError(field, e.what());
  }
}

double Number(const json& v, const std::string& field) {
  if (!v.is_number()) throw ValidationError(field, "must be a number");
  return v.get<double>();
}

std::int64_t Integer(const json& v, const std::string& field) {
  if (!v.is_number_integer()) throw ValidationError(field, "must be an integer");
  return v.get<std::int64_t>();
}

double Quantity(const json& v, const std::string& field,
                double (*parse)(const std::string&)) {
  return Field(field, [&] {
    if (v.is_number()) return v.get<double>();
    if (v.is_string()) return parse(v.get<std::string>());
    throw ValidationError(field, "must be a number or a unit-tagged string");
  });
}

std::uint64_t Bytes(const json& v, const std::string& field) {
  return Field(field, [&]() -> std::uint64_t {
    if (v.is_number_integer()) {
      if (v.get<std::int64_t>() < 0) throw ValidationError(field, "must be >= 0");
      return v.get<std::uint64_t>();
    }
    if (v.is_number()) {
      const double d = v.get<double>();
      if (!(d >= 0.0)) throw ValidationError(field, "must be >= 0");
      return static_cast<std::uint64_t>(std::llround(d));
    }
    if (v.is_string()) return ParseBytes(v.get<std::string>());
    throw ValidationError(field, "must be a byte count or a unit-tagged string");
  });
}

double PositiveNumber(const json& v, const std::string& field) {
  const double d = Number(v, field);
  if (!(d > 0.0)) throw ValidationError(field, "must be > 0");
  return d;
}

int CountField(const json& v, const std::string& field, int min_value) {
  const std::int64_t n = Integer(v, field);
  if (n < min_value) {
    throw ValidationError(field, "must be >= " + std::to_string(min_value));
  }
  return static_cast<int>(n);
}

std::vector<NodePosition> Positions(const json& v, const std::string& field) {
  if (!v.is_array()) throw ValidationError(field, "must be an array of [x, y]");
  std::vector<NodePosition> out;
  for (size_t i = 0; i < v.size(); ++i) {
    const std::string f = field + "[" + std::to_string(i) + "]";
    if (!v[i].is_array() || v[i].size() != 2) throw ValidationError(f, "must be [x, y]");
    out.push_back({Number(v[i][0], f), Number(v[i][1], f)});
  }
  return out;
}

ModelSpec ParseModel(const json& v, const std::string& path) {
  CheckKeys(v, {"model_id", "num_moe_layers", "experts_per_layer", "top_k",
                "expert_bytes", "embedding_bytes", "expert_flops"},
            path);
  ModelSpec s;
  for (const char* key : {"model_id", "num_moe_layers", "experts_per_layer", "top_k",
                          "expert_bytes", "embedding_bytes", "expert_flops"}) {
    if (!v.contains(key)) throw ValidationError(Join(path, key), "missing");
  }
  if (!v["model_id"].is_string()) throw ValidationError(Join(path, "model_id"), "must be a string");
  s.model_id = v["model_id"].get<std::string>();
  s.num_moe_layers = CountField(v["num_moe_layers"], Join(path, "num_moe_layers"), 1);
  s.experts_per_layer = CountField(v["experts_per_layer"], Join(path, "experts_per_layer"), 1);
  s.top_k = CountField(v["top_k"], Join(path, "top_k"), 1);
  s.expert_bytes = Bytes(v["expert_bytes"], Join(path, "expert_bytes"));
  s.embedding_bytes = Bytes(v["embedding_bytes"], Join(path, "embedding_bytes"));
  s.expert_flops = Quantity(v["expert_flops"], Join(path, "expert_flops"), ParseFlops);
  Field(path, [&] {
    s.Validate();
    return 0;
  });
  return s;
}

void ParseTopology(const json& t, TopologySpec& spec) {
  const std::string p = "topology";
  CheckKeys(t, {"num_servers", "num_users", "area_m", "server_positions", "user_positions",
                "server_capacity", "server_capacities", "server_tx_power",
                "server_compute_flops", "user_bandwidth", "user_tx_power",
                "user_compute_flops", "backhaul_bandwidth", "backhaul_rates_bps",
                "cloud", "cloud_compute_flops", "path_loss_exponent", "noise_psd",
                "antenna_gain_ul", "antenna_gain_dl", "min_distance_m"},
            p);
  if (t.contains("num_servers")) spec.num_servers = CountField(t["num_servers"], p + ".num_servers", 1);
  if (t.contains("num_users")) spec.num_users = CountField(t["num_users"], p + ".num_users", 1);
  if (t.contains("area_m")) spec.area_m = PositiveNumber(t["area_m"], p + ".area_m");
  if (t.contains("server_positions")) {
    spec.server_positions = Positions(t["server_positions"], p + ".server_positions");
  }
  if (t.contains("user_positions")) {
    spec.user_positions = Positions(t["user_positions"], p + ".user_positions");
  }
  if (t.contains("server_capacity")) {
    spec.server_capacity_bytes = Bytes(t["server_capacity"], p + ".server_capacity");
  }
  if (t.contains("server_capacities")) {
    const json& v = t["server_capacities"];
    if (!v.is_array()) throw ValidationError(p + ".server_capacities", "must be an array");
    std::vector<std::uint64_t> caps;
    for (size_t i = 0; i < v.size(); ++i) {
      caps.push_back(Bytes(v[i], p + ".server_capacities[" + std::to_string(i) + "]"));
    }
    spec.server_capacities = caps;
  }
  auto positive = [&](const char* key, double (*parse)(const std::string&), double& out) {
    if (!t.contains(key)) return;
    const std::string f = p + "." + key;
    out = Quantity(t[key], f, parse);
    if (!(out > 0.0) || !std::isfinite(out)) throw ValidationError(f, "must be > 0");
  };
  positive("server_tx_power", ParsePowerWatts, spec.server_tx_power_w);
  positive("server_compute_flops", ParseFlops, spec.server_compute_flops);
  positive("user_bandwidth", ParseFrequencyHz, spec.user_bandwidth_hz);
  positive("user_tx_power", ParsePowerWatts, spec.user_tx_power_w);
  positive("user_compute_flops", ParseFlops, spec.user_compute_flops);
  positive("backhaul_bandwidth", ParseFrequencyHz, spec.backhaul_bandwidth_hz);
  positive("cloud_compute_flops", ParseFlops, spec.cloud_compute_flops);
  positive("noise_psd", ParseNoisePsd, spec.noise_psd_w_per_hz);
  if (t.contains("path_loss_exponent")) {
    spec.path_loss_exponent = PositiveNumber(t["path_loss_exponent"], p + ".path_loss_exponent");
  }
  if (t.contains("antenna_gain_ul")) {
    spec.antenna_gain_ul = PositiveNumber(t["antenna_gain_ul"], p + ".antenna_gain_ul");
  }
  if (t.contains("antenna_gain_dl")) {
    spec.antenna_gain_dl = PositiveNumber(t["antenna_gain_dl"], p + ".antenna_gain_dl");
  }
  if (t.contains("min_distance_m")) {
    spec.min_distance_m = Number(t["min_distance_m"], p + ".min_distance_m");
    if (spec.min_distance_m < 0.0) throw ValidationError(p + ".min_distance_m", "must be >= 0");
  }
  if (t.contains("backhaul_rates_bps")) {
    const std::string f = p + ".backhaul_rates_bps";
    const json& v = t["backhaul_rates_bps"];
    if (!v.is_array()) throw ValidationError(f, "must be a square matrix");
    std::vector<std::vector<double>> rates;
    for (size_t i = 0; i < v.size(); ++i) {
      if (!v[i].is_array()) throw ValidationError(f, "must be a square matrix");
      std::vector<double> row;
      for (const json& x : v[i]) row.push_back(Number(x, f));
      rates.push_back(row);
    }
    spec.backhaul_rates_bps = rates;
  }
  if (t.contains("cloud")) {
    const json& c = t["cloud"];
    const std::string f = p + ".cloud";
    CheckKeys(c, {"latency", "rate_bps"}, f);
    if (c.contains("latency") == c.contains("rate_bps")) {
      throw ValidationError(f, "give exactly one of latency or rate_bps");
    }
    if (c.contains("latency")) {
      spec.cloud = {CloudHop::Kind::kFixedLatency,
                    Quantity(c["latency"], f + ".latency", ParseSeconds)};
      if (spec.cloud.value < 0.0) throw ValidationError(f + ".latency", "must be >= 0");
    } else {
      spec.cloud = {CloudHop::Kind::kRate, PositiveNumber(c["rate_bps"], f + ".rate_bps")};
    }
  }
}

void ParseWorkload(const json& w, WorkloadSpec& spec, const std::string& base_dir) {
  const std::string p = "workload";
  CheckKeys(w, {"zipf_exponent", "models_per_user", "local_budget", "num_tokens", "gating",
                "requests_csv", "subsets_csv", "local_cache_csv"},
            p);
  if (w.contains("zipf_exponent")) {
    spec.zipf_exponent = Number(w["zipf_exponent"], p + ".zipf_exponent");
    if (spec.zipf_exponent < 0.0) throw ValidationError(p + ".zipf_exponent", "must be >= 0");
  }
  if (w.contains("models_per_user")) {
    const json& v = w["models_per_user"];
    const std::string f = p + ".models_per_user";
    if (v.is_number_integer()) {
      spec.models_per_user_min = spec.models_per_user_max = CountField(v, f, 1);
    } else if (v.is_array() && v.size() == 2) {
      spec.models_per_user_min = CountField(v[0], f, 1);
      spec.models_per_user_max = CountField(v[1], f, 1);
    } else {
      throw ValidationError(f, "must be an integer or [min, max]");
    }
  }
  if (w.contains("local_budget")) spec.local_budget = CountField(w["local_budget"], p + ".local_budget", 0);
  if (w.contains("num_tokens")) spec.num_tokens = CountField(w["num_tokens"], p + ".num_tokens", 1);
  if (w.contains("gating")) {
    const json& g = w["gating"];
    const std::string f = p + ".gating";
    CheckKeys(g, {"popularity_sharpness", "user_sharpness", "token_noise"}, f);
    auto nonneg = [&](const char* key, double& out) {
      if (!g.contains(key)) return;
      out = Number(g[key], f + "." + key);
      if (out < 0.0) throw ValidationError(f + "." + key, "must be >= 0");
    };
    nonneg("popularity_sharpness", spec.gating.popularity_sharpness);
    nonneg("user_sharpness", spec.gating.user_sharpness);
    nonneg("token_noise", spec.gating.token_noise);
  }
  auto path = [&](const char* key, std::optional<std::string>& out) {
    if (!w.contains(key)) return;
    if (!w[key].is_string()) throw ValidationError(p + "." + key, "must be a path string");
    std::filesystem::path file(w[key].get<std::string>());
    if (file.is_relative()) file = std::filesystem::path(base_dir) / file;
    out = file.string();
  };
  path("requests_csv", spec.requests_csv);
  path("subsets_csv", spec.subsets_csv);
  path("local_cache_csv", spec.local_cache_csv);
  if (spec.requests_csv.has_value() != spec.subsets_csv.has_value()) {
    throw ValidationError(p + ".subsets_csv", "requests_csv and subsets_csv go together");
  }
}

SweepAxis ParseAxis(const std::string& name) {
  static const std::map<std::string, SweepAxis> kAxes = {
      {"server_capacity", SweepAxis::kServerCapacity},
      {"local_budget", SweepAxis::kLocalBudget},
      {"models_per_user", SweepAxis::kModelsPerUser},
      {"user_bandwidth", SweepAxis::kUserBandwidth},
      {"num_servers", SweepAxis::kNumServers},
      {"num_users", SweepAxis::kNumUsers},
  };
  const auto it = kAxes.find(name);
  if (it == kAxes.end()) throw ValidationError("sweep.axis", "unknown axis '" + name + "'");
  return it->second;
}

double AxisValue(SweepAxis axis, const json& v, const std::string& field) {
  switch (axis) {
    case SweepAxis::kServerCapacity:
      return static_cast<double>(Bytes(v, field));
    case SweepAxis::kUserBandwidth:
      return Quantity(v, field, ParseFrequencyHz);
    default:
      return static_cast<double>(CountField(v, field, 0));
  }
}

// ---- CSV ------------------------------------------------------------------

std::string Trim(std::string s) {
  const auto not_space = [](unsigned char c) { return !std::isspace(c); };
  s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
  s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
  return s;
}

std::vector<std::string> SplitOn(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, sep)) out.push_back(Trim(cell));
  if (!line.empty() && line.back() == sep) out.emplace_back();
  return out;
}

struct CsvTable {
  std::string path;
  std::vector<std::vector<std::string>> rows;  // without the header
};

CsvTable ReadCsv(const std::string& path, const std::vector<std::string>& header) {
  std::ifstream in(path);
  if (!in) throw ValidationError(path, "cannot open file");
  CsvTable table{path, {}};
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    line = Trim(line);
    if (line.empty() || line[0] == '#') continue;
    std::vector<std::string> cells = SplitOn(line, ',');
    if (first) {
      if (cells != header) throw ValidationError(path, "unexpected header");
      first = false;
      continue;
    }
    if (cells.size() != header.size()) {
      throw ValidationError(path, "row has " + std::to_string(cells.size()) + " cells");
    }
    table.rows.push_back(std::move(cells));
  }
  if (first) throw ValidationError(path, "missing header");
  return table;
}

long CsvInt(const CsvTable& t, const std::string& cell) {
  char* end = nullptr;
  const long v = std::strtol(cell.c_str(), &end, 10);
  if (cell.empty() || *end != '\0') throw ValidationError(t.path, "not an integer: '" + cell + "'");
  return v;
}

double CsvDouble(const CsvTable& t, const std::string& cell) {
  char* end = nullptr;
  const double v = std::strtod(cell.c_str(), &end);
  if (cell.empty() || *end != '\0') throw ValidationError(t.path, "not a number: '" + cell + "'");
  return v;
}

int CsvUser(const CsvTable& t, const std::string& cell, int num_users) {
  const long u = CsvInt(t, cell);
  if (u < 0 || u >= num_users) throw ValidationError(t.path, "user out of range: " + cell);
  return static_cast<int>(u);
}

int CsvModel(const CsvTable& t, const std::string& cell, const ExpertCatalog& catalog) {
  const auto m = catalog.FindModel(cell);
  if (!m) throw ValidationError(t.path, "unknown model '" + cell + "'");
  return *m;
}

int CsvLayer(const CsvTable& t, const std::string& cell, const ModelSpec& spec) {
  const long l = CsvInt(t, cell);
  if (l < 0 || l >= spec.num_moe_layers) throw ValidationError(t.path, "layer out of range: " + cell);
  return static_cast<int>(l);
}

ActivationProfile LoadProfile(const WorkloadSpec& w, const ExpertCatalog& catalog,
                              int num_users) {
  ActivationProfile profile(num_users);
  const CsvTable requests = ReadCsv(*w.requests_csv, {"user", "model", "probability"});
  std::vector<std::vector<ModelRequest>> per_user(num_users);
  for (const auto& row : requests.rows) {
    per_user[CsvUser(requests, row[0], num_users)].push_back(
        {CsvModel(requests, row[1], catalog), CsvDouble(requests, row[2])});
  }
  for (int u = 0; u < num_users; ++u) profile.SetModelRequests(u, per_user[u]);

  const CsvTable subsets =
      ReadCsv(*w.subsets_csv, {"user", "model", "layer", "subset", "probability"});
  std::map<LayerKey, std::vector<SubsetProbability>> layers;
  for (const auto& row : subsets.rows) {
    const int u = CsvUser(subsets, row[0], num_users);
    const int m = CsvModel(subsets, row[1], catalog);
    const ModelSpec& spec = catalog.model(m);
    const int l = CsvLayer(subsets, row[2], spec);
    ExpertSubset members;
    for (const std::string& cell : SplitOn(row[3], ';')) {
      const long i = CsvInt(subsets, cell);
      if (i < 0 || i >= spec.experts_per_layer) {
        throw ValidationError(subsets.path, "expert index out of range: " + cell);
      }
      members.push_back(catalog.LayerBase(m, l) + static_cast<ExpertIndex>(i));
    }
    std::sort(members.begin(), members.end());
    layers[{u, m, l}].push_back({members, CsvDouble(subsets, row[4])});
  }
  for (auto& [key, entries] : layers) profile.SetLayerDistribution(key, std::move(entries));
  return profile;
}

LocalCache LoadLocalCache(const std::string& path, const ExpertCatalog& catalog,
                          int num_users) {
  const CsvTable t = ReadCsv(path, {"user", "model", "layer", "expert_index"});
  LocalCache cache(num_users, catalog.num_experts());
  for (const auto& row : t.rows) {
    const int u = CsvUser(t, row[0], num_users);
    const int m = CsvModel(t, row[1], catalog);
    const ModelSpec& spec = catalog.model(m);
    const int l = CsvLayer(t, row[2], spec);
    const long i = CsvInt(t, row[3]);
    if (i < 0 || i >= spec.experts_per_layer) {
      throw ValidationError(path, "expert index out of range: " + row[3]);
    }
    cache.Set(u, catalog.IndexOf({m, l, static_cast<int>(i)}));
  }
  return cache;
}

std::vector<Position> SamplePositions(int count, double area, std::uint64_t seed) {
  Rng rng(seed);
  std::uniform_real_distribution<double> coord(0.0, area);
  std::vector<Position> out(count);
  for (Position& p : out) {
    p.x = coord(rng);
    p.y = coord(rng);
  }
  return out;
}

}  // namespace

std::vector<ModelSpec> DefaultModelLibrary() {
  struct Base {
    const char* id;
    int layers, experts, k;
    std::uint64_t bytes, embedding;
    double flops;
  };
  const Base bases[] = {
      {"switch-base-8", 12, 8, 1, 18'874'368, 3072, 9'437'184.0},
      {"switch-base-16", 12, 16, 1, 18'874'368, 3072, 9'437'184.0},
      {"switch-base-32", 12, 32, 1, 18'874'368, 3072, 9'437'184.0},
      {"moe-llava-stablelm-1.6b-4e", 12, 4, 2, 69'206'016, 4096, 69'206'016.0},
      {"moe-llava-qwen-1.8b-4e", 12, 4, 2, 67'633'152, 4096, 67'633'152.0},
      {"moe-llava-phi2-2.7b-4e", 16, 4, 2, 104'857'600, 5120, 104'857'600.0},
  };
  std::vector<ModelSpec> out;
  for (const char* variant : {"sqa", "vqa"}) {
    for (const Base& b : bases) {
      out.push_back(Spec(std::string(b.id) + "-" + variant, b.layers, b.experts, b.k,
                         b.bytes, b.embedding, b.flops));
    }
  }
  return out;
}

std::string SweepAxisName(SweepAxis axis) {
  switch (axis) {
    case SweepAxis::kServerCapacity: return "server_capacity";
    case SweepAxis::kLocalBudget: return "local_budget";
    case SweepAxis::kModelsPerUser: return "models_per_user";
    case SweepAxis::kUserBandwidth: return "user_bandwidth";
    case SweepAxis::kNumServers: return "num_servers";
    case SweepAxis::kNumUsers: return "num_users";
  }
  return "unknown";
}

std::uint64_t ParseBytes(const std::string& text) {
  static const std::map<std::string, double> kUnits = {
      {"", 1.0},     {"B", 1.0},          {"KB", 1e3},          {"MB", 1e6},
      {"GB", 1e9},   {"KiB", 1024.0},     {"MiB", 1048576.0},   {"GiB", 1073741824.0}};
  const double v = Scaled(text, kUnits, "bytes");
  if (!(v >= 0.0) || !std::isfinite(v)) throw ValidationError("bytes", "must be >= 0");
  return static_cast<std::uint64_t>(std::llround(v));
}

double ParsePowerWatts(const std::string& text) {
  const Amount q = SplitQuantity(text);
  if (q.unit == "dBm") return std::pow(10.0, (q.number - 30.0) / 10.0);
  static const std::map<std::string, double> kUnits = {{"", 1.0}, {"W", 1.0}, {"mW", 1e-3}};
  return Scaled(text, kUnits, "power");
}

double ParseFrequencyHz(const std::string& text) {
  static const std::map<std::string, double> kUnits = {
      {"", 1.0}, {"Hz", 1.0}, {"kHz", 1e3}, {"MHz", 1e6}, {"GHz", 1e9}};
  return Scaled(text, kUnits, "frequency");
}

double ParseNoisePsd(const std::string& text) {
  const Amount q = SplitQuantity(text);
  if (q.unit == "dBm/Hz") return std::pow(10.0, (q.number - 30.0) / 10.0);
  static const std::map<std::string, double> kUnits = {{"", 1.0}, {"W/Hz", 1.0}};
  return Scaled(text, kUnits, "noise_psd");
}

double ParseFlops(const std::string& text) {
  static const std::map<std::string, double> kUnits = {
      {"", 1.0},       {"FLOPs", 1.0},     {"GFLOPs", 1e9},   {"TFLOPs", 1e12},
      {"FLOP/s", 1.0}, {"GFLOP/s", 1e9},   {"TFLOP/s", 1e12}};
  return Scaled(text, kUnits, "flops");
}

double ParseSeconds(const std::string& text) {
  static const std::map<std::string, double> kUnits = {
      {"", 1.0}, {"s", 1.0}, {"ms", 1e-3}, {"us", 1e-6}};
  return Scaled(text, kUnits, "seconds");
}

void Scenario::Validate() const {
  if (models.empty()) throw ValidationError("models", "must not be empty");
  std::set<std::string> ids;
  for (size_t i = 0; i < models.size(); ++i) {
    Field("models[" + std::to_string(i) + "]", [&] {
      models[i].Validate();
      return 0;
    });
    if (!ids.insert(models[i].model_id).second) {
      throw ValidationError("models[" + std::to_string(i) + "].model_id", "duplicate");
    }
  }
  const TopologySpec& t = topology;
  if (t.num_servers < 1 || t.num_servers > 64) {
    throw ValidationError("topology.num_servers", "must be in [1, 64]");
  }
  if (t.num_users < 1) throw ValidationError("topology.num_users", "must be >= 1");
  if (t.server_positions && static_cast<int>(t.server_positions->size()) != t.num_servers) {
    throw ValidationError("topology.server_positions", "length must equal num_servers");
  }
  if (t.user_positions && static_cast<int>(t.user_positions->size()) != t.num_users) {
    throw ValidationError("topology.user_positions", "length must equal num_users");
  }
  if (t.server_capacities && static_cast<int>(t.server_capacities->size()) != t.num_servers) {
    throw ValidationError("topology.server_capacities", "length must equal num_servers");
  }
  if (t.backhaul_rates_bps && static_cast<int>(t.backhaul_rates_bps->size()) != t.num_servers) {
    throw ValidationError("topology.backhaul_rates_bps", "must be num_servers x num_servers");
  }
  const WorkloadSpec& w = workload;
  if (w.models_per_user_min > w.models_per_user_max) {
    throw ValidationError("workload.models_per_user", "min exceeds max");
  }
  if (!w.requests_csv && w.models_per_user_max > static_cast<int>(models.size())) {
    throw ValidationError("workload.models_per_user", "exceeds the number of models");
  }
  static const std::set<std::string> kAlgorithms = {"greedy", "dp", "accel", "lfu",
                                                    "random", "brute"};
  if (algorithms.empty()) throw ValidationError("algorithms", "must not be empty");
  for (const std::string& a : algorithms) {
    if (!kAlgorithms.count(a)) throw ValidationError("algorithms", "unknown algorithm '" + a + "'");
  }
  if (sweep.values.empty()) throw ValidationError("sweep.values", "must not be empty");
  if (seeds.empty()) throw ValidationError("seeds", "must not be empty");
}

Scenario ParseScenario(const std::string& json_text, const std::string& base_dir) {
  Scenario s;
  json root;
  try {
    root = json_text.find_first_not_of(" \t\r\n") == std::string::npos
               ? json::object()
               : json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ValidationError("scenario", std::string("invalid JSON: ") + e.what());
  }
  CheckKeys(root, {"models", "topology", "workload", "algorithms", "sweep", "seeds",
                   "routing", "successive", "brute_force_cap"},
            "");
  if (root.contains("models")) {
    const json& v = root["models"];
    if (!v.is_array()) throw ValidationError("models", "must be an array");
    s.models.clear();
    for (size_t i = 0; i < v.size(); ++i) {
      s.models.push_back(ParseModel(v[i], "models[" + std::to_string(i) + "]"));
    }
  }
  if (root.contains("topology")) ParseTopology(root["topology"], s.topology);
  if (root.contains("workload")) ParseWorkload(root["workload"], s.workload, base_dir);
  if (root.contains("algorithms")) {
    const json& v = root["algorithms"];
    if (!v.is_array()) throw ValidationError("algorithms", "must be an array of names");
    s.algorithms.clear();
    for (const json& a : v) {
      if (!a.is_string()) throw ValidationError("algorithms", "must be an array of names");
      s.algorithms.push_back(a.get<std::string>());
    }
  }
  if (root.contains("sweep")) {
    const json& v = root["sweep"];
    CheckKeys(v, {"axis", "values"}, "sweep");
    if (v.contains("axis")) {
      if (!v["axis"].is_string()) throw ValidationError("sweep.axis", "must be a string");
      s.sweep.axis = ParseAxis(v["axis"].get<std::string>());
      if (!v.contains("values")) throw ValidationError("sweep.values", "required with axis");
    }
    if (v.contains("values")) {
      if (!v["values"].is_array()) throw ValidationError("sweep.values", "must be an array");
      s.sweep.values.clear();
      for (size_t i = 0; i < v["values"].size(); ++i) {
        s.sweep.values.push_back(AxisValue(s.sweep.axis, v["values"][i],
                                           "sweep.values[" + std::to_string(i) + "]"));
      }
    }
  }
  if (root.contains("seeds")) {
    const json& v = root["seeds"];
    s.seeds.clear();
    if (v.is_number_integer()) {
      const int n = CountField(v, "seeds", 1);
      for (int i = 0; i < n; ++i) s.seeds.push_back(static_cast<std::uint64_t>(i));
    } else if (v.is_array()) {
      for (size_t i = 0; i < v.size(); ++i) {
        s.seeds.push_back(static_cast<std::uint64_t>(
            CountField(v[i], "seeds[" + std::to_string(i) + "]", 0)));
      }
    } else {
      throw ValidationError("seeds", "must be a count or an array of seeds");
    }
  }
  if (root.contains("routing")) {
    const json& v = root["routing"];
    CheckKeys(v, {"exact_server_cap"}, "routing");
    if (v.contains("exact_server_cap")) {
      s.instance_options.exact_routing_server_cap =
          CountField(v["exact_server_cap"], "routing.exact_server_cap", 0);
    }
  }
  if (root.contains("successive")) {
    const json& v = root["successive"];
    CheckKeys(v, {"server_order", "convolution", "fallback_unit"}, "successive");
    if (v.contains("server_order")) {
      const std::string o = v["server_order"].is_string() ? v["server_order"].get<std::string>() : "";
      if (o == "ascending_id") {
        s.successive.order = ServerOrder::kAscendingId;
      } else if (o == "descending_capacity") {
        s.successive.order = ServerOrder::kDescendingCapacity;
      } else {
        throw ValidationError("successive.server_order",
                              "must be ascending_id or descending_capacity");
      }
    }
    if (v.contains("convolution")) {
      const std::string c = v["convolution"].is_string() ? v["convolution"].get<std::string>() : "";
      if (c == "monotone") {
        s.successive.convolution = ConvolutionMethod::kMonotone;
      } else if (c == "direct") {
        s.successive.convolution = ConvolutionMethod::kDirect;
      } else {
        throw ValidationError("successive.convolution", "must be monotone or direct");
      }
    }
    if (v.contains("fallback_unit")) {
      s.successive.fallback_unit = Bytes(v["fallback_unit"], "successive.fallback_unit");
      if (s.successive.fallback_unit == 0) {
        throw ValidationError("successive.fallback_unit", "must be > 0");
      }
    }
  }
  if (root.contains("brute_force_cap")) {
    s.brute_force_cap = static_cast<std::uint64_t>(
        CountField(root["brute_force_cap"], "brute_force_cap", 1));
  }
  s.Validate();
  return s;
}

Scenario LoadScenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("scenario", "cannot open '" + path + "'");
  std::stringstream buffer;
  buffer << in.rdbuf();
  const std::string dir = std::filesystem::path(path).parent_path().string();
  return ParseScenario(buffer.str(), dir.empty() ? "." : dir);
}

Scenario WithAxisValue(const Scenario& scenario, SweepAxis axis, double value) {
  Scenario s = scenario;
  const auto count = static_cast<int>(std::llround(value));
  switch (axis) {
    case SweepAxis::kServerCapacity:
      s.topology.server_capacity_bytes = static_cast<std::uint64_t>(std::llround(value));
      s.topology.server_capacities.reset();
      break;
    case SweepAxis::kLocalBudget:
      s.workload.local_budget = count;
      break;
    case SweepAxis::kModelsPerUser:
      s.workload.models_per_user_min = s.workload.models_per_user_max = count;
      break;
    case SweepAxis::kUserBandwidth:
      s.topology.user_bandwidth_hz = value;
      break;
    case SweepAxis::kNumServers:
      s.topology.num_servers = count;
      s.topology.server_positions.reset();
      s.topology.server_capacities.reset();
      s.topology.backhaul_rates_bps.reset();
      break;
    case SweepAxis::kNumUsers:
      s.topology.num_users = count;
      s.topology.user_positions.reset();
      break;
  }
  s.Validate();
  return s;
}

std::unique_ptr<Instance> BuildInstance(const Scenario& scenario, std::uint64_t seed) {
  scenario.Validate();
  const TopologySpec& t = scenario.topology;
  const WorkloadSpec& w = scenario.workload;
  ExpertCatalog catalog = ExpertCatalog::Build(scenario.models);

  Topology topology;
  topology.link.antenna_gain_ul = t.antenna_gain_ul;
  topology.link.antenna_gain_dl = t.antenna_gain_dl;
  topology.link.path_loss_exponent = t.path_loss_exponent;
  topology.link.noise_psd_w_per_hz = t.noise_psd_w_per_hz;
  topology.link.min_distance_m = t.min_distance_m;
  topology.link.cloud_per_expert_compute = t.cloud_compute_flops;
  topology.link.cloud.assign(t.num_servers, t.cloud);

  const std::vector<Position> server_pos =
      SamplePositions(t.num_servers, t.area_m, DeriveSeed(seed, {kServerStream}));
  const std::vector<Position> user_pos =
      SamplePositions(t.num_users, t.area_m, DeriveSeed(seed, {kUserStream}));
  for (int n = 0; n < t.num_servers; ++n) {
    EdgeServerNode server;
    server.server_id = n;
    server.position = t.server_positions
                          ? Position{(*t.server_positions)[n].x, (*t.server_positions)[n].y}
                          : server_pos[n];
    server.capacity_bytes =
        t.server_capacities ? (*t.server_capacities)[n] : t.server_capacity_bytes;
    server.tx_power_w = t.server_tx_power_w;
    server.per_expert_compute = t.server_compute_flops;
    topology.servers.push_back(server);
  }
  for (int u = 0; u < t.num_users; ++u) {
    UserNode user;
    user.user_id = u;
    user.position = t.user_positions
                        ? Position{(*t.user_positions)[u].x, (*t.user_positions)[u].y}
                        : user_pos[u];
    user.bandwidth_hz = t.user_bandwidth_hz;
    user.tx_power_w = t.user_tx_power_w;
    user.compute_flops = t.user_compute_flops;
    topology.users.push_back(user);
  }
  topology.link.backhaul_rate_bps =
      t.backhaul_rates_bps
          ? *t.backhaul_rates_bps
          : ShannonBackhaulRates(topology.servers, t.backhaul_bandwidth_hz, topology.link);
  topology.AssociateUsers();

  ActivationProfile profile;
  if (w.requests_csv) {
    profile = LoadProfile(w, catalog, t.num_users);
  } else {
    std::vector<std::vector<ModelRequest>> requests(t.num_users);
    const int models = catalog.num_models();
    for (int u = 0; u < t.num_users; ++u) {
      Rng rng(DeriveSeed(seed, {kModelStream, static_cast<std::uint64_t>(u)}));
      const int span = w.models_per_user_max - w.models_per_user_min + 1;
      const int count = w.models_per_user_min + static_cast<int>(rng() % span);
      std::vector<int> order(models);
      for (int m = 0; m < models; ++m) order[m] = m;
      for (int i = models - 1; i > 0; --i) {
        std::swap(order[i], order[rng() % static_cast<std::uint64_t>(i + 1)]);
      }
      order.resize(count);
      requests[u] = ZipfRequests(order, w.zipf_exponent);
    }
    profile = SynthesizeProfile(catalog, requests, w.gating, w.num_tokens,
                                DeriveSeed(seed, {kProfileStream}));
  }
  LocalCache local = w.local_cache_csv
                         ? LoadLocalCache(*w.local_cache_csv, catalog, t.num_users)
                         : Field("workload.local_budget", [&] {
                             return BuildLocalCache(catalog, profile, w.local_budget);
                           });
  return std::make_unique<Instance>(std::move(catalog), std::move(topology),
                                    std::move(profile), std::move(local),
                                    scenario.instance_options);
}

}  // namespace moecache
