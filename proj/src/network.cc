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

#include "moecache/network.h"

#include <cmath>
#include <string>

#include "moecache/error.h"

namespace moecache {

double Distance(const Position& a, const Position& b) {
  return std::hypot(a.x - b.x, a.y - b.y);
}

void LinkModel::Validate(int num_servers) const {
  if (!(path_loss_exponent > 0.0)) {
    throw ValidationError("link.path_loss_exponent", "must be > 0");
  }
  if (!(noise_psd_w_per_hz > 0.0)) {
    throw ValidationError("link.noise_psd", "must be > 0");
  }
  if (!(antenna_gain_ul > 0.0) || !(antenna_gain_dl > 0.0)) {
    throw ValidationError("link.antenna_gain", "must be > 0");
  }
  if (min_distance_m < 0.0) {
    throw ValidationError("link.min_distance_m", "must be >= 0");
  }
  if (static_cast<int>(backhaul_rate_bps.size()) != num_servers) {
    throw ValidationError("link.backhaul_rates", "needs one row per server");
  }
  for (int n = 0; n < num_servers; ++n) {
    if (static_cast<int>(backhaul_rate_bps[n].size()) != num_servers) {
      throw ValidationError("link.backhaul_rates", "needs one column per server");
    }
    for (int k = 0; k < num_servers; ++k) {
      if (k != n && !(backhaul_rate_bps[n][k] > 0.0)) {
        throw ValidationError("link.backhaul_rates", "rates must be > 0");
      }
    }
  }
  if (static_cast<int>(cloud.size()) != num_servers) {
    throw ValidationError("link.cloud", "needs one cloud hop per server");
  }
  for (const CloudHop& hop : cloud) {
    if (hop.kind == CloudHop::Kind::kRate ? !(hop.value > 0.0)
                                          : !(hop.value >= 0.0)) {
      throw ValidationError("link.cloud", "cloud rate must be > 0 and latency >= 0");
    }
  }
  if (!(cloud_per_expert_compute > 0.0)) {
    throw ValidationError("compute.cloud_flops", "must be > 0");
  }
}

void Topology::AssociateUsers() {
  if (servers.empty()) throw ValidationError("topology.servers", "no servers");
  for (UserNode& user : users) {
    int best = 0;
    double best_d = Distance(user.position, servers[0].position);
    for (int n = 1; n < num_servers(); ++n) {
      const double d = Distance(user.position, servers[n].position);
      if (d < best_d) {
        best = n;
        best_d = d;
      }
    }
    user.associated_server = best;
  }
}

void Topology::Validate() const {
  if (servers.empty()) throw ValidationError("topology.servers", "no servers");
  if (servers.size() > 64) {
    throw ValidationError("topology.servers", "at most 64 servers are supported");
  }
  for (int n = 0; n < num_servers(); ++n) {
    const EdgeServerNode& s = servers[n];
    const std::string where = "topology.servers[" + std::to_string(n) + "]";
    if (s.server_id != n) throw ValidationError(where + ".server_id", "must equal its position");
    if (!(s.tx_power_w > 0.0)) throw ValidationError(where + ".tx_power", "must be > 0");
    if (!(s.per_expert_compute > 0.0)) {
      throw ValidationError(where + ".compute", "must be > 0");
    }
  }
  for (int u = 0; u < num_users(); ++u) {
    const UserNode& user = users[u];
    const std::string where = "topology.users[" + std::to_string(u) + "]";
    if (user.user_id != u) throw ValidationError(where + ".user_id", "must equal its position");
    if (!(user.bandwidth_hz > 0.0)) throw ValidationError(where + ".bandwidth", "must be > 0");
    if (!(user.tx_power_w > 0.0)) throw ValidationError(where + ".tx_power", "must be > 0");
    if (!(user.compute_flops > 0.0)) throw ValidationError(where + ".compute", "must be > 0");
    if (user.associated_server < 0 || user.associated_server >= num_servers()) {
      throw ValidationError(where + ".associated_server", "not a valid server");
    }
  }
  link.Validate(num_servers());
}

double ShannonRate(double bandwidth_hz, double tx_power_w, double gain,
                   double distance_m, const LinkModel& link) {
  const double d = std::max(distance_m, link.min_distance_m);
  if (!(d > 0.0)) {
    throw ValidationError("distance", "zero link distance without a minimum-distance clamp");
  }
  if (!(bandwidth_hz > 0.0)) throw ValidationError("bandwidth", "must be > 0");
  const double noise = link.noise_psd_w_per_hz * bandwidth_hz;
  const double snr =
      tx_power_w * gain * std::pow(d, -link.path_loss_exponent) / noise;
  return bandwidth_hz * std::log2(1.0 + snr);
}

double UplinkRate(const UserNode& user, const EdgeServerNode& server,
                  const LinkModel& link) {
  return ShannonRate(user.bandwidth_hz, user.tx_power_w, link.antenna_gain_ul,
                     Distance(user.position, server.position), link);
}

double DownlinkRate(const UserNode& user, const EdgeServerNode& server,
                    const LinkModel& link) {
  return ShannonRate(user.bandwidth_hz, server.tx_power_w, link.antenna_gain_dl,
                     Distance(user.position, server.position), link);
}

std::vector<std::vector<double>> ShannonBackhaulRates(
    const std::vector<EdgeServerNode>& servers, double bandwidth_hz,
    const LinkModel& link) {
  const size_t n = servers.size();
  std::vector<std::vector<double>> rates(n, std::vector<double>(n, 0.0));
  for (size_t a = 0; a < n; ++a) {
    for (size_t b = a + 1; b < n; ++b) {
      // Symmetric: the weaker transmitter of the pair sets the rate.
      const double power = std::min(servers[a].tx_power_w, servers[b].tx_power_w);
      const double r = ShannonRate(bandwidth_hz, power, 1.0,
                                   Distance(servers[a].position, servers[b].position),
                                   link);
      rates[a][b] = r;
      rates[b][a] = r;
    }
  }
  return rates;
}

double EmbeddingLatency(std::uint64_t bytes, double rate_bps) {
  if (!(rate_bps > 0.0)) throw ValidationError("rate", "must be > 0");
  return 8.0 * static_cast<double>(bytes) / rate_bps;
}

double CloudHopLatency(std::uint64_t bytes, const CloudHop& hop) {
  if (hop.kind == CloudHop::Kind::kFixedLatency) return hop.value;
  return EmbeddingLatency(bytes, hop.value);
}

double ExpertComputeLatency(NodeKind kind, const ModelSpec& model,
                            double capability_flops) {
  if (!(capability_flops > 0.0)) {
    throw ValidationError("compute", "capability must be > 0");
  }
  switch (kind) {
    case NodeKind::kUser:
      return model.expert_flops * model.experts_per_layer / capability_flops;
    case NodeKind::kEdge:
    case NodeKind::kCloud:
      return model.expert_flops / capability_flops;
  }
  return 0.0;
}

}  // namespace moecache
