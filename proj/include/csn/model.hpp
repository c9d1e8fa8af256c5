#pragma once

// Core value types shared by every part of the simulator: the time axis,
// packets, and the scenario configuration with its validator.

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace csn {

/// Simulation time in integer microseconds. The engine never uses
/// fractional time; conversion to milliseconds happens only in reports.
using SimTime = std::int64_t;
using NodeId = std::int32_t;

inline constexpr NodeId kSinkId = 0;

inline constexpr double us_to_ms(double us) { return us / 1000.0; }

enum class Priority : std::uint8_t { Normal = 0, High = 1 };

inline constexpr bool outranks(Priority a, Priority b) {
  return static_cast<int>(a) > static_cast<int>(b);
}

inline const char* to_string(Priority p) { return p == Priority::High ? "H" : "N"; }

struct HopRecord {
  NodeId node = 0;
  SimTime arrived_at = 0;
  SimTime departed_at = 0;
};

/// Identifies a packet network-wide: per-source sequence number plus source.
struct PacketKey {
  NodeId source = 0;
  std::int64_t seq = 0;

  friend bool operator==(const PacketKey&, const PacketKey&) = default;
  friend auto operator<=>(const PacketKey&, const PacketKey&) = default;

  std::string str() const { return std::to_string(source) + "." + std::to_string(seq); }
};

struct Packet {
  std::int64_t id = 0;  // sequence number within its source
  NodeId source_id = 0;
  NodeId dest_id = kSinkId;
  std::int32_t size_bytes = 0;
  Priority priority = Priority::Normal;
  SimTime lifetime_deadline = 0;
  SimTime created_at = 0;
  SimTime packetized_at = 0;
  std::vector<HopRecord> hops;
  std::optional<SimTime> delivered_at;

  PacketKey key() const { return {source_id, id}; }
  SimTime packetization_delay() const { return packetized_at - created_at; }
  /// Remaining lifetime T_l at `now`; expired when <= 0.
  SimTime remaining_lifetime(SimTime now) const { return lifetime_deadline - now; }
};

// ---------------------------------------------------------------------------
// Scenario configuration

struct RateLevel {
  std::int64_t rate_bps = 0;
  SimTime dwell_us = 0;

  friend bool operator==(const RateLevel&, const RateLevel&) = default;
};

enum class VbrSampling { Cycle, Random };

struct TrafficConfig {
  std::vector<NodeId> source_ids;
  std::int64_t mean_bit_rate_bps = 64'000;
  // Empty means a constant input rate of mean_bit_rate_bps.
  std::vector<RateLevel> vbr_rate_levels;
  VbrSampling vbr_sampling = VbrSampling::Cycle;
  SimTime cbr_out_interval_us = 100'000;
  std::int64_t packets_per_source = 50;
  double high_priority_fraction = 0.0;
  SimTime lifetime_budget_us = 1'000'000;
  bool shape_at_source = false;

  friend bool operator==(const TrafficConfig&, const TrafficConfig&) = default;
};

enum class BufferMode { None, Eq1 };

struct BufferPolicy {
  BufferMode mode = BufferMode::Eq1;
  std::int32_t proportionality_k = 1;
  // Empty optional = AllInnerLayers; otherwise the explicit node list.
  std::optional<std::vector<NodeId>> explicit_nodes;

  bool all_inner_layers() const { return !explicit_nodes.has_value(); }

  friend bool operator==(const BufferPolicy&, const BufferPolicy&) = default;
};

enum class Placement { Concentric, Uniform };

struct ScenarioConfig {
  // Defaults describe the 100-node reference deployment.
  double area_m2 = 2'500'000.0;
  std::int32_t node_count = 100;
  double comm_range_m = 50.0;
  std::int32_t packet_size_bytes = 512;
  double node_energy_j = 100.0;

  Placement placement = Placement::Concentric;
  std::int32_t concentric_spokes = 0;  // 0 = ceil(sqrt(node_count - 1))

  TrafficConfig traffic;
  BufferPolicy buffer_policy;

  std::int64_t link_rate_bps = 250'000;
  SimTime per_hop_latency_us = 100;
  SimTime sink_playout_delay_us = 0;

  double tx_j_per_bit = 0.0;
  double rx_j_per_bit = 0.0;

  std::uint64_t rng_seed = 42;
  SimTime sim_duration_us = 10'000'000;

  std::int64_t packet_bits() const { return std::int64_t{packet_size_bytes} * 8; }

  friend bool operator==(const ScenarioConfig&, const ScenarioConfig&) = default;
};

struct Violation {
  std::string field;
  std::string reason;
};

/// Reports every violated invariant; an empty result means the config is valid.
inline std::vector<Violation> validate(const ScenarioConfig& c) {
  std::vector<Violation> out;
  auto need = [&out](bool ok, const char* field, const char* reason) {
    if (!ok) out.push_back({field, reason});
  };
  need(c.area_m2 > 0, "area_m2", "must be > 0");
  need(c.node_count >= 2, "node_count", "must be >= 2 (sink plus one source)");
  need(c.comm_range_m > 0, "comm_range_m", "must be > 0");
  need(c.packet_size_bytes > 0, "packet_size_bytes", "must be > 0");
  need(c.node_energy_j > 0, "node_energy_j", "must be > 0");
  need(c.concentric_spokes >= 0, "concentric_spokes", "must be >= 0");
  need(c.link_rate_bps > 0, "link_rate_bps", "must be > 0");
  need(c.per_hop_latency_us >= 0, "per_hop_latency_us", "must be >= 0");
  need(c.sink_playout_delay_us >= 0, "sink_playout_delay_us", "must be >= 0");
  need(c.tx_j_per_bit >= 0, "energy.tx_j_per_bit", "must be >= 0");
  need(c.rx_j_per_bit >= 0, "energy.rx_j_per_bit", "must be >= 0");
  need(c.sim_duration_us > 0, "sim_duration_us", "must be > 0");

  const auto& t = c.traffic;
  need(t.mean_bit_rate_bps > 0, "traffic.mean_bit_rate_bps", "must be > 0");
  need(t.cbr_out_interval_us > 0, "traffic.cbr_out_interval_us", "must be > 0");
  need(t.packets_per_source >= 1, "traffic.packets_per_source", "must be >= 1");
  need(t.high_priority_fraction >= 0.0 && t.high_priority_fraction <= 1.0,
       "traffic.high_priority_fraction", "must lie in [0, 1]");
  need(t.lifetime_budget_us > 0, "traffic.lifetime_budget_us", "must be > 0");

  bool levels_ok = true;
  bool any_positive = false;
  for (const auto& l : t.vbr_rate_levels) {
    if (l.rate_bps < 0 || l.dwell_us <= 0) levels_ok = false;
    if (l.rate_bps > 0) any_positive = true;
  }
  need(levels_ok, "traffic.vbr_rate_levels", "rates must be >= 0 and dwells > 0");
  need(t.vbr_rate_levels.empty() || any_positive, "traffic.vbr_rate_levels",
       "at least one level must have a positive rate");

  need(!t.source_ids.empty(), "traffic.source_ids", "at least one source required");
  bool ids_ok = true;
  for (std::size_t i = 0; i < t.source_ids.size(); ++i) {
    const NodeId id = t.source_ids[i];
    // Range is only meaningful once node_count itself is valid.
    if (id <= kSinkId || (c.node_count >= 2 && id >= c.node_count)) ids_ok = false;
    for (std::size_t j = 0; j < i; ++j)
      if (t.source_ids[j] == id) ids_ok = false;
  }
  need(ids_ok, "traffic.source_ids", "ids must be distinct non-sink nodes in [1, node_count)");

  need(c.buffer_policy.proportionality_k >= 1, "buffer_policy.proportionality_k",
       "must be >= 1");
  return out;
}

/// Thrown when a scenario cannot be parsed or fails validation.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace csn
