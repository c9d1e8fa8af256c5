#pragma once

// Source side: variable-rate bit arrival, packetization into fixed-size
// packets, optional CBR shaping, and seeded priority marking.

#include <algorithm>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "csn/model.hpp"
#include "csn/rng.hpp"

namespace csn {

/// Bits are tracked in units of 1e-6 bit so that rate_bps * dt_us is exact.
inline constexpr std::int64_t kBitScale = 1'000'000;

struct PacketizerState {
  NodeId source_id = 1;
  std::int32_t packet_size_bytes = 512;
  SimTime lifetime_budget_us = 1'000'000;

  SimTime clock = 0;
  std::int64_t bits_scaled = 0;  // accumulated bits * kBitScale
  bool in_progress = false;      // a packet's first bit has arrived
  SimTime current_packet_created_at = 0;
  std::int64_t emitted_count = 0;
  std::int64_t bits_fed_scaled = 0;

  std::int64_t packet_bits() const { return std::int64_t{packet_size_bytes} * 8; }
  std::int64_t bits_accumulated() const { return bits_scaled / kBitScale; }
};

namespace detail {

inline Packet make_packet(PacketizerState& s, SimTime packetized_at) {
  Packet p;
  p.id = s.emitted_count++;
  p.source_id = s.source_id;
  p.dest_id = kSinkId;
  p.size_bytes = s.packet_size_bytes;
  p.created_at = s.current_packet_created_at;
  p.packetized_at = packetized_at;
  p.lifetime_deadline = p.created_at + s.lifetime_budget_us;
  return p;
}

inline std::int64_t ceil_div(std::int64_t a, std::int64_t b) { return (a + b - 1) / b; }

}  // namespace detail

/// Feeds `rate_bps` for `dt_us` microseconds starting at state.clock. A packet
/// completes at the first whole microsecond by which all its bits have
/// arrived; its created_at is the instant its first bit began arriving.
/// At most `limit` packets are emitted in total; bits after that are ignored.
inline std::pair<PacketizerState, std::vector<Packet>> step_bits(
    PacketizerState state, std::int64_t rate_bps, SimTime dt_us,
    std::int64_t limit = std::numeric_limits<std::int64_t>::max()) {
  std::vector<Packet> out;
  const SimTime end = state.clock + dt_us;
  const std::int64_t threshold = state.packet_bits() * kBitScale;
  if (rate_bps <= 0 || state.emitted_count >= limit) {
    state.clock = end;
    return {std::move(state), std::move(out)};
  }
  while (state.clock < end) {
    if (!state.in_progress) {
      state.in_progress = true;
      state.current_packet_created_at = state.clock;
    }
    const std::int64_t need = threshold - state.bits_scaled;
    const SimTime t_needed = detail::ceil_div(need, rate_bps);
    if (state.clock + t_needed > end) {
      const std::int64_t fed = rate_bps * (end - state.clock);
      state.bits_scaled += fed;
      state.bits_fed_scaled += fed;
      state.clock = end;
      break;
    }
    const std::int64_t fed = rate_bps * t_needed;
    state.bits_scaled += fed;
    state.bits_fed_scaled += fed;
    state.clock += t_needed;
    state.bits_scaled -= threshold;
    out.push_back(detail::make_packet(state, state.clock));
    // Leftover whole bits already belong to the next packet.
    state.in_progress = state.bits_scaled >= kBitScale;
    if (state.in_progress) state.current_packet_created_at = state.clock;
    if (state.emitted_count >= limit) {
      state.clock = end;
      break;
    }
  }
  return {std::move(state), std::move(out)};
}

/// Instantaneous arrival of `bits` at state.clock (the infinite-rate limit).
inline std::pair<PacketizerState, std::vector<Packet>> add_burst(PacketizerState state, std::int64_t bits) {
  std::vector<Packet> out;
  if (bits <= 0) return {std::move(state), std::move(out)};
  if (!state.in_progress) {
    state.in_progress = true;
    state.current_packet_created_at = state.clock;
  }
  state.bits_scaled += bits * kBitScale;
  state.bits_fed_scaled += bits * kBitScale;
  const std::int64_t threshold = state.packet_bits() * kBitScale;
  while (state.bits_scaled >= threshold) {
    state.bits_scaled -= threshold;
    out.push_back(detail::make_packet(state, state.clock));
    state.in_progress = state.bits_scaled >= kBitScale;
  }
  return {std::move(state), std::move(out)};
}

/// Streaming CBR shaper: departures are spaced by `interval` and never
/// precede packetization.
class CbrShaper {
 public:
  explicit CbrShaper(SimTime interval_us) : interval_(interval_us) {}

  SimTime depart(SimTime packetized_at) {
    const SimTime t = last_ ? std::max(packetized_at, *last_ + interval_) : packetized_at;
    last_ = t;
    return t;
  }

 private:
  SimTime interval_;
  std::optional<SimTime> last_;
};

inline std::vector<std::pair<Packet, SimTime>> shape_cbr(const std::vector<Packet>& packets,
                                                         SimTime interval_us) {
  std::vector<std::pair<Packet, SimTime>> out;
  out.reserve(packets.size());
  CbrShaper shaper(interval_us);
  for (const auto& p : packets) out.emplace_back(p, shaper.depart(p.packetized_at));
  return out;
}

inline Priority draw_priority(Rng& rng, double high_fraction) {
  return bernoulli(rng, high_fraction) ? Priority::High : Priority::Normal;
}

inline std::vector<Packet> assign_priorities(std::vector<Packet> packets, double fraction,
                                             std::uint64_t seed) {
  Rng rng = derive_rng(seed, 2);
  for (auto& p : packets) p.priority = draw_priority(rng, fraction);
  return packets;
}

/// Yields the piecewise-constant input-rate segments of one source.
class VbrSchedule {
 public:
  VbrSchedule(const TrafficConfig& cfg, Rng rng)
      : levels_(cfg.vbr_rate_levels), sampling_(cfg.vbr_sampling), rng_(std::move(rng)) {
    if (levels_.empty()) levels_.push_back({cfg.mean_bit_rate_bps, kConstantDwellUs});
  }

  RateLevel next() {
    if (sampling_ == VbrSampling::Random && levels_.size() > 1)
      return levels_[uniform_index(rng_, levels_.size())];
    const auto& l = levels_[index_];
    index_ = (index_ + 1) % levels_.size();
    return l;
  }

 private:
  static constexpr SimTime kConstantDwellUs = 1'000'000;
  std::vector<RateLevel> levels_;
  VbrSampling sampling_;
  Rng rng_;
  std::size_t index_ = 0;
};

inline std::string packet_ledger_csv(const std::vector<Packet>& packets) {
  std::string out = "packet_id,created_at,packetized_at,Tp_us,priority,deadline\n";
  for (const auto& p : packets) {
    out += p.key().str() + "," + std::to_string(p.created_at) + "," + std::to_string(p.packetized_at) + "," +
           std::to_string(p.packetization_delay()) + "," + to_string(p.priority) + "," +
           std::to_string(p.lifetime_deadline) + "\n";
  }
  return out;
}

}  // namespace csn
