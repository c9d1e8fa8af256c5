#pragma once

// QoS metrics over a finished RunTrace: throughput, end-to-end delay,
// jitter, packet delivery fraction, and the per-packet decomposition
// T_t = T_p + T_N + T_B.
//
// Jitter and the delivery fraction are kept as exact rationals so that every
// independent recomputation agrees bit for bit; doubles appear only when a
// value is rendered.

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <cstdint>
#include <cstdio>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "csn/engine.hpp"

namespace csn {

class MetricsError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};
struct ZeroDuration : MetricsError {
  ZeroDuration() : MetricsError("throughput over zero duration") {}
};
struct NoDeliveries : MetricsError {
  NoDeliveries() : MetricsError("no packets delivered") {}
};
struct NoPacketsSent : MetricsError {
  NoPacketsSent() : MetricsError("no packets sent") {}
};
struct PacketNotDelivered : MetricsError {
  explicit PacketNotDelivered(PacketKey k) : MetricsError("packet " + k.str() + " was not delivered") {}
};

enum class ThroughputWindow { Total, LastDelivery };

struct Throughput {
  std::uint64_t bytes = 0;
  SimTime duration_us = 0;

  double bytes_per_s() const {
    return duration_us == 0 ? 0.0 : static_cast<double>(bytes) * 1e6 / static_cast<double>(duration_us);
  }
};

inline Throughput throughput(const RunTrace& trace, ThroughputWindow window = ThroughputWindow::Total) {
  Throughput t;
  SimTime last = 0;
  for (const auto& r : trace.packets) {
    if (r.fate != PacketFate::Delivered) continue;
    t.bytes += static_cast<std::uint64_t>(r.packet.size_bytes);
    last = std::max(last, *r.packet.delivered_at);
  }
  if (window == ThroughputWindow::LastDelivery) {
    if (t.bytes == 0) return t;
    t.duration_us = last;
  } else {
    t.duration_us = trace.config.sim_duration_us;
  }
  if (t.duration_us == 0) throw ZeroDuration();
  return t;
}

struct DelayStats {
  std::vector<std::pair<PacketKey, SimTime>> per_packet;  // sorted by key

  SimTime total() const {
    SimTime s = 0;
    for (const auto& [k, d] : per_packet) s += d;
    return s;
  }
  double mean_us() const {
    if (per_packet.empty()) throw NoDeliveries();
    return static_cast<double>(total()) / static_cast<double>(per_packet.size());
  }
};

/// Delay from first bit at the source to playout at the sink, delivered packets only.
inline DelayStats end_to_end_delay(const RunTrace& trace) {
  DelayStats s;
  for (const auto& r : trace.packets)
    if (r.fate == PacketFate::Delivered)
      s.per_packet.emplace_back(r.packet.key(), *r.packet.delivered_at - r.packet.created_at);
  return s;
}

struct JitterStats {
  // Mean absolute deviation about the mean = mad_numerator / (N * N).
  __int128 mad_numerator = 0;
  std::int64_t count = 0;
  double stddev_us = 0.0;
  double interarrival_us = 0.0;  // mean |d_i - d_{i-1}| in delivery order

  double mad_us() const {
    return count == 0 ? 0.0
                      : static_cast<double>(mad_numerator) / (static_cast<double>(count) * static_cast<double>(count));
  }
};

/// Jitter of an arbitrary delay sequence (given in delivery order).
inline JitterStats jitter_of(const std::vector<SimTime>& delays) {
  if (delays.empty()) throw NoDeliveries();
  JitterStats j;
  const auto n = static_cast<__int128>(delays.size());
  __int128 sum = 0;
  for (SimTime d : delays) sum += d;
  long double sq = 0;
  for (SimTime d : delays) {
    const __int128 dev = n * d - sum;
    j.mad_numerator += dev < 0 ? -dev : dev;
    sq += static_cast<long double>(dev) * static_cast<long double>(dev);
  }
  j.count = static_cast<std::int64_t>(delays.size());
  j.stddev_us = static_cast<double>(std::sqrt(sq / static_cast<long double>(n)) / static_cast<long double>(n));
  if (delays.size() > 1) {
    std::int64_t acc = 0;
    for (std::size_t i = 1; i < delays.size(); ++i) acc += std::llabs(delays[i] - delays[i - 1]);
    j.interarrival_us = static_cast<double>(acc) / static_cast<double>(delays.size() - 1);
  }
  return j;
}

/// Delivered packets' delays ordered by delivery time (ties by key).
inline std::vector<SimTime> delays_in_delivery_order(const RunTrace& trace) {
  std::vector<std::pair<std::pair<SimTime, PacketKey>, SimTime>> v;
  for (const auto& r : trace.packets)
    if (r.fate == PacketFate::Delivered)
      v.push_back({{*r.packet.delivered_at, r.packet.key()}, *r.packet.delivered_at - r.packet.created_at});
  std::sort(v.begin(), v.end());
  std::vector<SimTime> out;
  out.reserve(v.size());
  for (const auto& e : v) out.push_back(e.second);
  return out;
}

inline JitterStats jitter(const RunTrace& trace) { return jitter_of(delays_in_delivery_order(trace)); }

struct DeliveryFraction {
  std::uint64_t delivered = 0;
  std::uint64_t sent = 0;

  double percent() const { return static_cast<double>(delivered) * 100.0 / static_cast<double>(sent); }

  /// Percentage rounded half-up to two decimals, from integers only.
  std::string str() const {
    const std::uint64_t hundredths = (delivered * 20000 + sent) / (2 * sent);
    char buf[32];
    std::snprintf(buf, sizeof buf, "%llu.%02llu", static_cast<unsigned long long>(hundredths / 100),
                  static_cast<unsigned long long>(hundredths % 100));
    return buf;
  }
};

inline DeliveryFraction packet_delivery_fraction(const RunTrace& trace) {
  const auto s = drain_summary(trace);
  if (s.sent == 0) throw NoPacketsSent();
  return {s.delivered, s.sent};
}

struct DelayDecomposition {
  SimTime packetization = 0;  // T_p
  SimTime network = 0;        // T_N, including intermediate buffer holds
  SimTime playout = 0;        // T_B
  SimTime total = 0;          // T_t
  SimTime network_check = 0;  // T_N rebuilt from hop records
};

inline DelayDecomposition decompose_delay(const Packet& p) {
  if (!p.delivered_at || p.hops.empty()) throw PacketNotDelivered(p.key());
  DelayDecomposition d;
  const auto& sink = p.hops.back();
  d.packetization = p.packetized_at - p.created_at;
  d.playout = sink.departed_at - sink.arrived_at;
  d.total = *p.delivered_at - p.created_at;
  d.network = d.total - d.packetization - d.playout;
  // Residence at every non-sink hop plus the link transits between hops.
  SimTime check = 0;
  for (std::size_t i = 0; i + 1 < p.hops.size(); ++i) {
    check += p.hops[i].departed_at - p.hops[i].arrived_at;
    check += p.hops[i + 1].arrived_at - p.hops[i].departed_at;
  }
  d.network_check = check;
  return d;
}

inline DelayDecomposition decompose_delay(const RunTrace& trace, PacketKey key) {
  const auto* r = trace.find(key);
  if (!r || r->fate != PacketFate::Delivered) throw PacketNotDelivered(key);
  return decompose_delay(r->packet);
}

struct LayerMetrics {
  std::int32_t layer_n = 0;
  std::int32_t buffered_nodes = 0;
  std::size_t peak_occupancy = 0;
  std::uint64_t drops = 0;
  std::uint64_t preemptions = 0;
};

inline std::vector<LayerMetrics> per_layer(const RunTrace& trace) {
  std::map<std::int32_t, LayerMetrics> m;
  for (const auto& b : trace.buffers) {
    auto& l = m[b.layer_n];
    l.layer_n = b.layer_n;
    ++l.buffered_nodes;
    l.peak_occupancy = std::max(l.peak_occupancy, b.peak_occupancy);
    l.drops += b.evictions + b.rejections + b.drained;
    l.preemptions += b.preemptions;
  }
  std::vector<LayerMetrics> out;
  for (auto& [k, v] : m) out.push_back(v);
  return out;
}

struct MetricsReport {
  DrainSummary summary;
  Throughput throughput;
  std::optional<double> mean_delay_us;
  std::optional<JitterStats> jitter;
  std::optional<DeliveryFraction> pdf;
  std::vector<std::pair<PacketKey, DelayDecomposition>> decomposition;
  std::vector<LayerMetrics> layers;
  std::uint64_t preemptions = 0;
  std::uint64_t evictions = 0;
  std::uint64_t rejections = 0;
};

inline MetricsReport compute_metrics(const RunTrace& trace, ThroughputWindow window = ThroughputWindow::Total) {
  MetricsReport r;
  r.summary = drain_summary(trace);
  r.throughput = throughput(trace, window);
  const auto delays = end_to_end_delay(trace);
  if (!delays.per_packet.empty()) {
    r.mean_delay_us = delays.mean_us();
    r.jitter = jitter(trace);
  }
  if (r.summary.sent > 0) r.pdf = packet_delivery_fraction(trace);
  for (const auto& p : trace.packets)
    if (p.fate == PacketFate::Delivered) r.decomposition.emplace_back(p.packet.key(), decompose_delay(p.packet));
  r.layers = per_layer(trace);
  for (const auto& b : trace.buffers) {
    r.preemptions += b.preemptions;
    r.evictions += b.evictions;
    r.rejections += b.rejections;
  }
  return r;
}

namespace detail {
inline std::string fmt_double(double v, int decimals = 3) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
  return buf;
}
}  // namespace detail

/// Canonical `key = value` listing of a report.
inline std::string format_report(const MetricsReport& r) {
  using detail::fmt_double;
  std::string out;
  auto kv = [&out](const std::string& k, const std::string& v) { out += k + " = " + v + "\n"; };
  kv("sent", std::to_string(r.summary.sent));
  kv("delivered", std::to_string(r.summary.delivered));
  kv("dropped", std::to_string(r.summary.dropped));
  kv("in_flight_at_end", std::to_string(r.summary.in_flight_at_end));
  kv("throughput_bytes_per_s", fmt_double(r.throughput.bytes_per_s()));
  kv("throughput_window_us", std::to_string(r.throughput.duration_us));
  kv("mean_end_to_end_delay_us", r.mean_delay_us ? fmt_double(*r.mean_delay_us) : "na");
  kv("jitter_mad_us", r.jitter ? fmt_double(r.jitter->mad_us()) : "na");
  kv("jitter_stddev_us", r.jitter ? fmt_double(r.jitter->stddev_us) : "na");
  kv("jitter_interarrival_us", r.jitter ? fmt_double(r.jitter->interarrival_us) : "na");
  kv("packet_delivery_fraction_percent", r.pdf ? r.pdf->str() : "na");
  kv("preemptions", std::to_string(r.preemptions));
  kv("evictions", std::to_string(r.evictions));
  kv("rejections", std::to_string(r.rejections));
  for (const auto& l : r.layers) {
    const auto prefix = "layer." + std::to_string(l.layer_n) + ".";
    kv(prefix + "buffered_nodes", std::to_string(l.buffered_nodes));
    kv(prefix + "peak_occupancy", std::to_string(l.peak_occupancy));
    kv(prefix + "drops", std::to_string(l.drops));
    kv(prefix + "preemptions", std::to_string(l.preemptions));
  }
  return out;
}

inline std::string decomposition_csv(const MetricsReport& r) {
  std::string out = "packet_id,Tp_us,TN_us,TB_us,Tt_us\n";
  for (const auto& [k, d] : r.decomposition)
    out += k.str() + "," + std::to_string(d.packetization) + "," + std::to_string(d.network) + "," +
           std::to_string(d.playout) + "," + std::to_string(d.total) + "\n";
  return out;
}

inline const char* metrics_csv_header() {
  return "sent,delivered,dropped,in_flight_at_end,throughput_bytes_per_s,mean_delay_us,jitter_mad_us,"
         "jitter_stddev_us,jitter_interarrival_us,pdf_percent,preemptions,evictions,rejections";
}

inline std::string metrics_csv_row(const MetricsReport& r) {
  using detail::fmt_double;
  return std::to_string(r.summary.sent) + "," + std::to_string(r.summary.delivered) + "," +
         std::to_string(r.summary.dropped) + "," + std::to_string(r.summary.in_flight_at_end) + "," +
         fmt_double(r.throughput.bytes_per_s()) + "," + (r.mean_delay_us ? fmt_double(*r.mean_delay_us) : "") +
         "," + (r.jitter ? fmt_double(r.jitter->mad_us()) : "") + "," +
         (r.jitter ? fmt_double(r.jitter->stddev_us) : "") + "," +
         (r.jitter ? fmt_double(r.jitter->interarrival_us) : "") + "," + (r.pdf ? r.pdf->str() : "") + "," +
         std::to_string(r.preemptions) + "," + std::to_string(r.evictions) + "," + std::to_string(r.rejections);
}

}  // namespace csn
