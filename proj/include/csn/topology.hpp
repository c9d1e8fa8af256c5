#pragma once

// Concentric network construction: node placement, hop-depth layers with a
// BFS routing tree toward the sink, and layer-dependent jitter buffer sizing.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <optional>
#include <queue>
#include <stdexcept>
#include <string>
#include <vector>

#include "csn/model.hpp"
#include "csn/rng.hpp"

namespace csn {

class ConnectivityUnachievable : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class UnknownNodeId : public std::runtime_error {
 public:
  explicit UnknownNodeId(NodeId id)
      : std::runtime_error("unknown node id in buffer selection: " + std::to_string(id)), id_(id) {}
  NodeId id() const { return id_; }

 private:
  NodeId id_;
};

struct Position {
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const Position&, const Position&) = default;
};

inline double distance(Position a, Position b) { return std::hypot(a.x - b.x, a.y - b.y); }

struct NodeState {
  NodeId id = 0;
  Position position;
  std::int32_t layer_n = 0;
  std::optional<NodeId> parent_id;
  std::int32_t buffer_capacity_packets = 0;
  double energy_j = 0.0;

  friend bool operator==(const NodeState&, const NodeState&) = default;
};

struct Topology {
  std::vector<NodeState> nodes;  // indexed by id
  NodeId sink_id = kSinkId;
  double comm_range_m = 0.0;
  std::vector<std::vector<NodeId>> adjacency;  // sorted ascending
  bool playout_at_sink = false;

  const NodeState& node(NodeId id) const { return nodes.at(static_cast<std::size_t>(id)); }
  NodeState& node(NodeId id) { return nodes.at(static_cast<std::size_t>(id)); }
  std::size_t size() const { return nodes.size(); }
};

/// Builds a topology from explicit positions (id = index, sink = 0);
/// edges join every pair within comm_range_m. Layers are left unassigned.
inline Topology make_topology(const std::vector<Position>& positions, double comm_range_m,
                              double energy_j = 0.0) {
  Topology topo;
  topo.comm_range_m = comm_range_m;
  topo.nodes.resize(positions.size());
  topo.adjacency.assign(positions.size(), {});
  for (std::size_t i = 0; i < positions.size(); ++i) {
    topo.nodes[i].id = static_cast<NodeId>(i);
    topo.nodes[i].position = positions[i];
    topo.nodes[i].energy_j = energy_j;
  }
  for (std::size_t i = 0; i < positions.size(); ++i)
    for (std::size_t j = i + 1; j < positions.size(); ++j)
      if (distance(positions[i], positions[j]) <= comm_range_m) {
        topo.adjacency[i].push_back(static_cast<NodeId>(j));
        topo.adjacency[j].push_back(static_cast<NodeId>(i));
      }
  for (auto& adj : topo.adjacency) std::sort(adj.begin(), adj.end());
  return topo;
}

/// Hop distance from the sink for every node; -1 when unreachable.
inline std::vector<std::int32_t> hop_distances(const Topology& topo) {
  std::vector<std::int32_t> dist(topo.size(), -1);
  std::queue<NodeId> frontier;
  dist[static_cast<std::size_t>(topo.sink_id)] = 0;
  frontier.push(topo.sink_id);
  while (!frontier.empty()) {
    const NodeId u = frontier.front();
    frontier.pop();
    for (NodeId v : topo.adjacency[static_cast<std::size_t>(u)]) {
      auto& d = dist[static_cast<std::size_t>(v)];
      if (d < 0) {
        d = dist[static_cast<std::size_t>(u)] + 1;
        frontier.push(v);
      }
    }
  }
  return dist;
}

inline bool is_connected(const Topology& topo) {
  const auto dist = hop_distances(topo);
  return std::none_of(dist.begin(), dist.end(), [](std::int32_t d) { return d < 0; });
}

/// Sets layer_n to BFS hop depth and parent_id to the lowest-id neighbour
/// one layer closer to the sink.
inline Topology assign_layers(Topology topo) {
  const auto dist = hop_distances(topo);
  for (auto& n : topo.nodes) {
    const auto d = dist[static_cast<std::size_t>(n.id)];
    n.layer_n = d;
    n.parent_id.reset();
    if (n.id == topo.sink_id || d < 0) continue;
    for (NodeId v : topo.adjacency[static_cast<std::size_t>(n.id)]) {
      if (dist[static_cast<std::size_t>(v)] == d - 1) {
        n.parent_id = v;  // adjacency is sorted, first hit is the lowest id
        break;
      }
    }
  }
  return topo;
}

/// Jitter buffer size in packets for a node at layer n >= 1:
/// k * (4 - n) below layer 4, a single packet from layer 4 outward.
inline std::int32_t buffer_size_packets(std::int32_t n, const BufferPolicy& policy) {
  if (policy.mode == BufferMode::None) return 0;
  if (n < 4) return policy.proportionality_k * (4 - n);
  return 1;
}

inline std::int64_t buffer_size_bytes(std::int32_t n, const BufferPolicy& policy,
                                      std::int32_t packet_size_bytes) {
  return std::int64_t{buffer_size_packets(n, policy)} * packet_size_bytes;
}

inline Topology place_buffers(Topology topo, const BufferPolicy& policy) {
  for (auto& n : topo.nodes) n.buffer_capacity_packets = 0;
  topo.playout_at_sink = policy.mode != BufferMode::None;
  if (policy.explicit_nodes) {
    for (NodeId id : *policy.explicit_nodes)
      if (id < 0 || static_cast<std::size_t>(id) >= topo.size()) throw UnknownNodeId(id);
  }
  if (policy.mode == BufferMode::None) return topo;

  auto selected = [&policy](NodeId id) {
    if (!policy.explicit_nodes) return true;
    const auto& ids = *policy.explicit_nodes;
    return std::find(ids.begin(), ids.end(), id) != ids.end();
  };
  for (auto& n : topo.nodes) {
    if (n.id == topo.sink_id || n.layer_n < 1) continue;
    if (selected(n.id)) n.buffer_capacity_packets = buffer_size_packets(n.layer_n, policy);
  }
  return topo;
}

namespace detail {

inline constexpr int kPlacementRetries = 200;
inline constexpr double kRingSpacingFraction = 0.9;

inline std::vector<Position> place_uniform(const ScenarioConfig& c, Rng& rng) {
  const double side = std::sqrt(c.area_m2);
  std::vector<Position> pos(static_cast<std::size_t>(c.node_count));
  pos[0] = {side / 2, side / 2};
  for (std::size_t i = 1; i < pos.size(); ++i) pos[i] = {uniform01(rng) * side, uniform01(rng) * side};
  return pos;
}

// Nodes sit on spokes radiating from the sink; ring r lies at radius
// r * spacing so neighbouring rings are exactly one hop apart.
inline std::vector<Position> place_concentric(const ScenarioConfig& c, Rng& rng) {
  const double side = std::sqrt(c.area_m2);
  const double centre = side / 2;
  const auto others = c.node_count - 1;
  const int spokes = c.concentric_spokes > 0
                         ? c.concentric_spokes
                         : static_cast<int>(std::ceil(std::sqrt(static_cast<double>(others))));
  const double spacing = kRingSpacingFraction * c.comm_range_m;
  const double rotation = uniform01(rng) * 2.0 * std::numbers::pi;
  std::vector<Position> pos(static_cast<std::size_t>(c.node_count));
  pos[0] = {centre, centre};
  for (int i = 0; i < others; ++i) {
    const int ring = i / spokes + 1;
    const int spoke = i % spokes;
    const double angle = rotation + 2.0 * std::numbers::pi * spoke / spokes;
    const double r = ring * spacing;
    pos[static_cast<std::size_t>(i + 1)] = {centre + r * std::cos(angle), centre + r * std::sin(angle)};
  }
  for (const auto& p : pos)
    if (p.x < 0 || p.y < 0 || p.x > side || p.y > side)
      throw ConnectivityUnachievable("concentric rings do not fit inside the deployment area");
  return pos;
}

}  // namespace detail

/// Places nodes (sink at the centre of the square area) until the graph is
/// connected under comm_range_m. Deterministic for a fixed seed.
inline Topology generate(const ScenarioConfig& config) {
  Rng rng = derive_rng(config.rng_seed, 1);
  const int attempts = config.placement == Placement::Uniform ? detail::kPlacementRetries : 1;
  for (int attempt = 0; attempt < attempts; ++attempt) {
    const auto positions = config.placement == Placement::Uniform
                               ? detail::place_uniform(config, rng)
                               : detail::place_concentric(config, rng);
    auto topo = make_topology(positions, config.comm_range_m, config.node_energy_j);
    if (is_connected(topo)) return topo;
  }
  throw ConnectivityUnachievable("no connected placement of " + std::to_string(config.node_count) +
                                 " nodes with range " + std::to_string(config.comm_range_m) +
                                 " m after " + std::to_string(attempts) + " attempts");
}

/// generate + assign_layers + place_buffers.
inline Topology build_topology(const ScenarioConfig& config) {
  return place_buffers(assign_layers(generate(config)), config.buffer_policy);
}

inline std::string topology_csv(const Topology& topo) {
  std::string out = "node_id,x,y,layer_n,parent_id,buffer_capacity_packets\n";
  char buf[160];
  for (const auto& n : topo.nodes) {
    std::snprintf(buf, sizeof buf, "%d,%.3f,%.3f,%d,%s,%d\n", n.id, n.position.x, n.position.y, n.layer_n,
                  n.parent_id ? std::to_string(*n.parent_id).c_str() : "", n.buffer_capacity_packets);
    out += buf;
  }
  return out;
}

}  // namespace csn
