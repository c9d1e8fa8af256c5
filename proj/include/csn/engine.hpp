#pragma once

// Deterministic discrete-event kernel. Events run in (time, seq) order with
// seq assigned at scheduling time, so identical configs replay identically.

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <queue>
#include <string>
#include <utility>
#include <vector>

#include "csn/dejitter.hpp"
#include "csn/model.hpp"
#include "csn/rng.hpp"
#include "csn/topology.hpp"
#include "csn/traffic.hpp"

namespace csn {

enum class EventKind { BitsStep, SourceEmit, LinkDeliver, BufferRelease, PlayoutDeliver, EnergyExhausted };

struct Event {
  SimTime at = 0;
  std::uint64_t seq = 0;
  EventKind kind = EventKind::BitsStep;
  NodeId node = 0;
  std::optional<PacketKey> packet;
  int stage = 0;  // SourceEmit: 0 = packetized, 1 = shaped departure
};

struct EventLater {
  bool operator()(const Event& a, const Event& b) const {
    if (a.at != b.at) return a.at > b.at;
    return a.seq > b.seq;
  }
};

enum class TraceKind { BITS, PKTZ, TX, RX, ENQ, REL, PRE, EVT, REJ, PLAY, DELIVER, DROP, DEAD };

inline const char* to_string(TraceKind k) {
  switch (k) {
    case TraceKind::BITS: return "BITS";
    case TraceKind::PKTZ: return "PKTZ";
    case TraceKind::TX: return "TX";
    case TraceKind::RX: return "RX";
    case TraceKind::ENQ: return "ENQ";
    case TraceKind::REL: return "REL";
    case TraceKind::PRE: return "PRE";
    case TraceKind::EVT: return "EVT";
    case TraceKind::REJ: return "REJ";
    case TraceKind::PLAY: return "PLAY";
    case TraceKind::DELIVER: return "DELIVER";
    case TraceKind::DROP: return "DROP";
    case TraceKind::DEAD: return "DEAD";
  }
  return "?";
}

struct TraceRecord {
  SimTime time = 0;
  TraceKind kind = TraceKind::BITS;
  NodeId node = 0;
  std::optional<PacketKey> packet;
  std::string detail;
};

enum class PacketFate { InFlight, Delivered, Dropped };

struct PacketRecord {
  Packet packet;
  PacketFate fate = PacketFate::InFlight;
};

/// Counters maintained while the event loop runs; used to cross-check the
/// metrics recomputed from the finished trace.
struct LiveCounters {
  std::uint64_t sent = 0;
  std::uint64_t delivered = 0;
  std::uint64_t dropped = 0;
  std::uint64_t delivered_bytes = 0;
  std::uint64_t energy_drops = 0;
  std::vector<SimTime> delays;  // delivery order
};

struct BufferStats {
  NodeId node = 0;
  std::int32_t layer_n = 0;
  std::int32_t capacity = 0;
  std::size_t peak_occupancy = 0;
  std::uint64_t enqueued = 0;
  std::uint64_t released = 0;
  std::uint64_t preemptions = 0;
  std::uint64_t evictions = 0;
  std::uint64_t rejections = 0;
  std::uint64_t drained = 0;
  std::size_t still_queued = 0;
};

struct RunTrace {
  ScenarioConfig config;
  Topology topology;
  std::vector<TraceRecord> records;
  std::vector<PacketRecord> packets;  // born packets, sorted by key
  std::vector<BufferStats> buffers;   // one per buffered node, by node id
  LiveCounters live;
  SimTime tx_time_us = 0;

  const PacketRecord* find(PacketKey key) const {
    auto it = std::lower_bound(packets.begin(), packets.end(), key,
                               [](const PacketRecord& r, PacketKey k) { return r.packet.key() < k; });
    return it != packets.end() && it->packet.key() == key ? &*it : nullptr;
  }
};

/// Serialization time of one packet on a link, rounded up to whole microseconds.
inline SimTime transmission_time_us(std::int32_t packet_size_bytes, std::int64_t rate_bps) {
  const std::int64_t bits = std::int64_t{packet_size_bytes} * 8;
  return (bits * 1'000'000 + rate_bps - 1) / rate_bps;
}

class Simulator {
 public:
  Simulator(ScenarioConfig config, Topology topology)
      : cfg_(std::move(config)),
        topo_(std::move(topology)),
        tx_time_(transmission_time_us(cfg_.packet_size_bytes, cfg_.link_rate_bps)),
        playout_(cfg_.traffic.cbr_out_interval_us) {
    nodes_.resize(topo_.size());
    for (const auto& n : topo_.nodes) {
      auto& rt = nodes_[static_cast<std::size_t>(n.id)];
      rt.energy_j = n.energy_j;
      if (n.buffer_capacity_packets > 0) {
        rt.buffer.emplace(n.buffer_capacity_packets);
        rt.schedule.emplace(cfg_.traffic.cbr_out_interval_us);
      }
    }
    for (NodeId src : cfg_.traffic.source_ids) {
      SourceState s{PacketizerState{},
                    VbrSchedule(cfg_.traffic, derive_rng(cfg_.rng_seed, 100 + static_cast<std::uint64_t>(src))),
                    derive_rng(cfg_.rng_seed, 200 + static_cast<std::uint64_t>(src)),
                    CbrShaper(cfg_.traffic.cbr_out_interval_us)};
      s.packetizer.source_id = src;
      s.packetizer.packet_size_bytes = cfg_.packet_size_bytes;
      s.packetizer.lifetime_budget_us = cfg_.traffic.lifetime_budget_us;
      sources_.emplace(src, std::move(s));
      schedule(0, EventKind::BitsStep, src);
    }
  }

  RunTrace run() {
    while (!queue_.empty() && queue_.top().at <= cfg_.sim_duration_us) {
      const Event ev = queue_.top();
      queue_.pop();
      now_ = ev.at;
      dispatch(ev);
    }
    return finish();
  }

 private:
  struct NodeRuntime {
    double energy_j = 0.0;
    bool dead = false;
    std::optional<JitterBuffer> buffer;
    std::optional<ScheduleModel> schedule;
  };

  struct SourceState {
    PacketizerState packetizer;
    VbrSchedule vbr;
    Rng priority_rng;
    CbrShaper shaper;
  };

  void schedule(SimTime at, EventKind kind, NodeId node, std::optional<PacketKey> pkt = std::nullopt,
                int stage = 0) {
    queue_.push(Event{at, next_seq_++, kind, node, pkt, stage});
  }

  void log(TraceKind kind, NodeId node, std::optional<PacketKey> pkt, std::string detail = {}) {
    records_.push_back({now_, kind, node, pkt, std::move(detail)});
  }

  PacketRecord& record(PacketKey key) { return packets_.at(key); }

  void dispatch(const Event& ev) {
    switch (ev.kind) {
      case EventKind::BitsStep: bits_step(ev.node); break;
      case EventKind::SourceEmit: source_emit(ev.node, *ev.packet, ev.stage); break;
      case EventKind::LinkDeliver: deliver_hop(ev.node, *ev.packet); break;
      case EventKind::BufferRelease: service_buffer(ev.node); break;
      case EventKind::PlayoutDeliver: playout_deliver(ev.node, *ev.packet); break;
      case EventKind::EnergyExhausted: energy_exhausted(ev.node); break;
    }
  }

  void bits_step(NodeId src) {
    auto& s = sources_.at(src);
    const auto limit = cfg_.traffic.packets_per_source;
    if (s.packetizer.emitted_count >= limit) return;
    const RateLevel level = s.vbr.next();
    log(TraceKind::BITS, src, std::nullopt,
        "rate=" + std::to_string(level.rate_bps) + " dwell=" + std::to_string(level.dwell_us));
    s.packetizer.clock = now_;
    auto [state, emitted] = step_bits(std::move(s.packetizer), level.rate_bps, level.dwell_us, limit);
    s.packetizer = std::move(state);
    for (auto& p : emitted) {
      p.priority = draw_priority(s.priority_rng, cfg_.traffic.high_priority_fraction);
      const PacketKey key = p.key();
      const SimTime at = p.packetized_at;
      pending_.emplace(key, std::move(p));
      schedule(at, EventKind::SourceEmit, src, key, 0);
    }
    if (s.packetizer.emitted_count < limit) schedule(now_ + level.dwell_us, EventKind::BitsStep, src);
  }

  void source_emit(NodeId src, PacketKey key, int stage) {
    if (stage == 0) {
      auto node = pending_.extract(key);
      Packet& p = node.mapped();
      p.hops.push_back({src, now_, now_});
      log(TraceKind::PKTZ, src, key,
          "created=" + std::to_string(p.created_at) + " tp=" + std::to_string(p.packetization_delay()) +
              " prio=" + to_string(p.priority) + " deadline=" + std::to_string(p.lifetime_deadline));
      packets_.emplace(key, PacketRecord{std::move(p), PacketFate::InFlight});
      ++live_.sent;
      SimTime depart = now_;
      if (cfg_.traffic.shape_at_source) depart = sources_.at(src).shaper.depart(now_);
      if (depart > now_) {
        schedule(depart, EventKind::SourceEmit, src, key, 1);
        return;
      }
    }
    transmit(src, key);
  }

  bool spend(NodeId id, double joules) {
    auto& rt = nodes_[static_cast<std::size_t>(id)];
    if (rt.dead) return false;
    if (joules <= 0.0) return true;
    if (rt.energy_j < joules) {
      rt.energy_j = 0.0;
      rt.dead = true;
      schedule(now_, EventKind::EnergyExhausted, id);
      return false;
    }
    rt.energy_j -= joules;
    if (rt.energy_j <= 0.0) {
      rt.energy_j = 0.0;
      rt.dead = true;
      schedule(now_, EventKind::EnergyExhausted, id);
    }
    return true;
  }

  void drop(NodeId node, PacketKey key, const char* reason) {
    auto& r = record(key);
    if (r.fate != PacketFate::InFlight) return;
    r.fate = PacketFate::Dropped;
    ++live_.dropped;
    log(TraceKind::DROP, node, key, std::string("reason=") + reason);
  }

  void transmit(NodeId node, PacketKey key) {
    const double cost = static_cast<double>(cfg_.packet_bits()) * cfg_.tx_j_per_bit;
    if (!spend(node, cost)) {
      ++live_.energy_drops;
      drop(node, key, "energy");
      return;
    }
    auto& p = record(key).packet;
    p.hops.back().departed_at = now_;
    const NodeId next = *topo_.node(node).parent_id;
    const SimTime arrive = now_ + tx_time_ + cfg_.per_hop_latency_us;
    log(TraceKind::TX, node, key, "to=" + std::to_string(next) + " arrive=" + std::to_string(arrive));
    schedule(arrive, EventKind::LinkDeliver, next, key);
  }

  /// Arrival of a packet at `node`: buffer it, forward it, or hand it to playout.
  void deliver_hop(NodeId node, PacketKey key) {
    auto& p = record(key).packet;
    const NodeId from = p.hops.back().node;
    const double cost = static_cast<double>(cfg_.packet_bits()) * cfg_.rx_j_per_bit;
    if (!spend(node, cost)) {
      ++live_.energy_drops;
      drop(node, key, "energy");
      return;
    }
    p.hops.push_back({node, now_, now_});
    log(TraceKind::RX, node, key, "from=" + std::to_string(from));

    if (node == topo_.sink_id) {
      if (!topo_.playout_at_sink) {
        playout_deliver(node, key);
        return;
      }
      const SimTime release = playout_release(playout_, p, now_, cfg_.sink_playout_delay_us);
      log(TraceKind::PLAY, node, key,
          "release=" + std::to_string(release) + " tb=" + std::to_string(release - now_));
      schedule(release, EventKind::PlayoutDeliver, node, key);
      return;
    }

    auto& rt = nodes_[static_cast<std::size_t>(node)];
    if (!rt.buffer) {
      transmit(node, key);
      return;
    }
    const auto outcome = rt.buffer->enqueue(p, now_, *rt.schedule);
    if (outcome.result == EnqueueResult::Rejected) {
      log(TraceKind::REJ, node, key);
      drop(node, key, "rejected");
      return;
    }
    if (outcome.evicted) {
      const PacketKey victim = outcome.evicted->key();
      log(TraceKind::EVT, node, victim);
      drop(node, victim, "evicted");
    }
    log(TraceKind::ENQ, node, key,
        "release=" + std::to_string(outcome.scheduled_release) +
            " hold=" + std::to_string(outcome.scheduled_release - now_));
    service_buffer(node);
    const auto& queued = rt.buffer->entries();
    auto it = std::find_if(queued.begin(), queued.end(),
                           [&](const BufferEntry& e) { return e.packet.key() == key; });
    if (it != queued.end()) {
      SimTime wake = it->scheduled_release;
      if (it->packet.priority == Priority::High) wake = std::min(wake, it->packet.lifetime_deadline);
      schedule(std::max(wake, now_), EventKind::BufferRelease, node);
    }
  }

  // Expired high-priority packets go first, then everything that is due.
  void service_buffer(NodeId node) {
    auto& rt = nodes_[static_cast<std::size_t>(node)];
    if (!rt.buffer || rt.dead) return;
    while (auto pre = rt.buffer->preempt_check(now_)) {
      const PacketKey key = pre->key();
      log(TraceKind::PRE, node, key);
      transmit(node, key);
    }
    for (const auto& p : rt.buffer->release_ready(now_)) {
      const PacketKey key = p.key();
      log(TraceKind::REL, node, key);
      transmit(node, key);
    }
  }

  void playout_deliver(NodeId sink, PacketKey key) {
    auto& r = record(key);
    if (r.fate != PacketFate::InFlight) return;
    r.fate = PacketFate::Delivered;
    r.packet.delivered_at = now_;
    r.packet.hops.back().departed_at = now_;
    const SimTime delay = now_ - r.packet.created_at;
    ++live_.delivered;
    live_.delivered_bytes += static_cast<std::uint64_t>(r.packet.size_bytes);
    live_.delays.push_back(delay);
    log(TraceKind::DELIVER, sink, key, "delay=" + std::to_string(delay));
  }

  void energy_exhausted(NodeId node) {
    log(TraceKind::DEAD, node, std::nullopt);
    auto& rt = nodes_[static_cast<std::size_t>(node)];
    if (!rt.buffer) return;
    for (const auto& p : rt.buffer->drain()) drop(node, p.key(), "energy");
  }

  RunTrace finish() {
    RunTrace out;
    out.config = cfg_;
    out.topology = topo_;
    for (std::size_t i = 0; i < nodes_.size(); ++i) out.topology.nodes[i].energy_j = nodes_[i].energy_j;
    out.records = std::move(records_);
    out.packets.reserve(packets_.size());
    for (auto& [key, rec] : packets_) out.packets.push_back(std::move(rec));
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
      const auto& rt = nodes_[i];
      if (!rt.buffer) continue;
      const auto& b = *rt.buffer;
      out.buffers.push_back({static_cast<NodeId>(i), topo_.nodes[i].layer_n, b.capacity(), b.peak_occupancy(),
                             b.enqueued(), b.released(), b.preemptions(), b.evictions(), b.rejections(),
                             b.drained(), b.size()});
    }
    out.live = std::move(live_);
    out.tx_time_us = tx_time_;
    return out;
  }

  ScenarioConfig cfg_;
  Topology topo_;
  SimTime tx_time_;
  SimTime now_ = 0;
  std::uint64_t next_seq_ = 0;
  std::priority_queue<Event, std::vector<Event>, EventLater> queue_;
  std::vector<NodeRuntime> nodes_;
  std::map<NodeId, SourceState> sources_;
  std::map<PacketKey, Packet> pending_;  // packetized in the future
  std::map<PacketKey, PacketRecord> packets_;
  PlayoutBuffer playout_;
  std::vector<TraceRecord> records_;
  LiveCounters live_;
};

/// Runs a scenario on an already-built topology (layers and buffers assigned).
inline RunTrace run(const ScenarioConfig& config, Topology topology) {
  return Simulator(config, std::move(topology)).run();
}

/// Full pipeline: validate, generate, assign_layers, place_buffers, simulate.
/// Throws ConfigError on invalid config, ConnectivityUnachievable from generation.
inline RunTrace run(const ScenarioConfig& config) {
  if (auto v = validate(config); !v.empty())
    throw ConfigError("invalid scenario: " + v.front().field + ": " + v.front().reason);
  return run(config, build_topology(config));
}

struct DrainSummary {
  std::uint64_t sent = 0;
  std::uint64_t delivered = 0;
  std::uint64_t dropped = 0;
  std::uint64_t in_flight_at_end = 0;

  friend bool operator==(const DrainSummary&, const DrainSummary&) = default;
};

inline DrainSummary drain_summary(const RunTrace& trace) {
  DrainSummary s;
  for (const auto& r : trace.packets) {
    ++s.sent;
    switch (r.fate) {
      case PacketFate::Delivered: ++s.delivered; break;
      case PacketFate::Dropped: ++s.dropped; break;
      case PacketFate::InFlight: ++s.in_flight_at_end; break;
    }
  }
  return s;
}

}  // namespace csn
