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

// Physical layer: node placement, Shannon-rate wireless links, backhaul and
// cloud hops, and per-hop transmission / compute latency primitives.

#ifndef MOECACHE_NETWORK_H_
#define MOECACHE_NETWORK_H_

#include <cstdint>
#include <vector>

#include "moecache/catalog.h"

namespace moecache {

struct Position {
  double x = 0.0;
  double y = 0.0;
};

double Distance(const Position& a, const Position& b);

struct UserNode {
  int user_id = 0;
  Position position;
  double bandwidth_hz = 5e6;
  double tx_power_w = 0.01;
  double compute_flops = 50e12;
  int associated_server = -1;
};

struct EdgeServerNode {
  int server_id = 0;
  Position position;
  std::uint64_t capacity_bytes = 0;
  double tx_power_w = 6.30957344480193;  // 38 dBm
  double per_expert_compute = 82.58e12;  // FLOP/s allotted to one expert
};

// One hop between an edge server and the cloud, given either as a rate or as
// a fixed per-transfer latency.
struct CloudHop {
  enum class Kind { kRate, kFixedLatency };
  Kind kind = Kind::kFixedLatency;
  double value = 0.01;  // bits/s for kRate, seconds for kFixedLatency
};

struct LinkModel {
  double antenna_gain_ul = 1.0;
  double antenna_gain_dl = 1.0;
  double path_loss_exponent = 4.0;
  double noise_psd_w_per_hz = 3.981071705534972e-21;  // -174 dBm/Hz
  double min_distance_m = 1.0;  // clamp applied before d^-alpha
  // backhaul_rate_bps[n][n'] is the rate from server n to server n'.
  std::vector<std::vector<double>> backhaul_rate_bps;
  std::vector<CloudHop> cloud;  // per server, used in both directions
  double cloud_per_expert_compute = 312e12;

  void Validate(int num_servers) const;
};

struct Topology {
  std::vector<UserNode> users;
  std::vector<EdgeServerNode> servers;
  LinkModel link;

  int num_users() const { return static_cast<int>(users.size()); }
  int num_servers() const { return static_cast<int>(servers.size()); }

  // Sets every user's associated_server to the nearest server (ties to the
  // lowest server id).
  void AssociateUsers();
  void Validate() const;
};

enum class NodeKind { kUser, kEdge, kCloud };

double ShannonRate(double bandwidth_hz, double tx_power_w, double gain,
                   double distance_m, const LinkModel& link);

// Rates between a user and a server. Distances below link.min_distance_m are
// clamped; with a zero clamp a co-located pair is a ValidationError.
double UplinkRate(const UserNode& user, const EdgeServerNode& server,
                  const LinkModel& link);
double DownlinkRate(const UserNode& user, const EdgeServerNode& server,
                    const LinkModel& link);

// Symmetric server-to-server rates from a shared backhaul bandwidth, using
// the servers' transmit power and the same path-loss model.
std::vector<std::vector<double>> ShannonBackhaulRates(
    const std::vector<EdgeServerNode>& servers, double bandwidth_hz,
    const LinkModel& link);

// Seconds to move `bytes` over a link of `rate_bps` bits/s.
double EmbeddingLatency(std::uint64_t bytes, double rate_bps);
double CloudHopLatency(std::uint64_t bytes, const CloudHop& hop);

// Per-expert compute latency. For users the device capability is split
// evenly over the layer's experts.
double ExpertComputeLatency(NodeKind kind, const ModelSpec& model,
                            double capability_flops);

}  // namespace moecache

#endif  // MOECACHE_NETWORK_H_
