#pragma once

// Built-in jitter experiments and the generic parameter sweep.

#include <algorithm>
#include <atomic>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "csn/config_io.hpp"
#include "csn/engine.hpp"
#include "csn/metrics.hpp"

namespace csn {

// ---------------------------------------------------------------------------
// Multi-hop jitter experiment
//
// One source on ring 5 of the default 100-node concentric network samples
// once per 20 ms period. Within a period its bits arrive as a single burst:
// the burst start wobbles over a 10-period triangle (0..1.5 ms) and the burst
// rate rises steadily, so packetization delay shrinks by 150 us per packet.
// Without buffering, every packet's delay carries its own packetization
// delay and the spread widens with the run length. With buffering, relays
// hold early packets to the 20 ms grid and only the sampling wobble remains.

inline constexpr NodeId kExperimentSource = 41;
inline constexpr SimTime kExperimentPeriodUs = 20'000;
inline constexpr std::int64_t kExperimentMaxPackets = 60;

inline std::vector<RateLevel> experiment_rate_levels() {
  static constexpr SimTime kOffsets[10] = {0, 300, 600, 900, 1200, 1500, 1200, 900, 600, 300};
  constexpr std::int64_t kBits = 4096;
  constexpr std::int64_t kScaled = kBits * 1'000'000;
  std::vector<RateLevel> levels;
  std::int64_t carried = 0;  // sub-bit remainder left in the packetizer
  for (std::int64_t k = 0; k < kExperimentMaxPackets; ++k) {
    const SimTime offset = kOffsets[k % 10];
    const SimTime target_tp = 16'000 - 150 * k - offset;
    const std::int64_t rate = (kScaled + target_tp / 2) / target_tp;
    // The burst ends exactly when the packet completes, so no tail bits
    // start a packet before the next sampling period.
    const SimTime dwell = (kScaled - carried + rate - 1) / rate;
    carried += rate * dwell - kScaled;
    if (offset > 0) levels.push_back({0, offset});
    levels.push_back({rate, dwell});
    levels.push_back({0, kExperimentPeriodUs - offset - dwell});
  }
  return levels;
}

inline ScenarioConfig experiment_scenario(BufferMode mode, std::int64_t packets) {
  ScenarioConfig c;  // reference deployment physics
  c.placement = Placement::Concentric;
  c.concentric_spokes = 0;
  c.link_rate_bps = 1'000'000;
  c.per_hop_latency_us = 100;
  c.sink_playout_delay_us = 2'000;
  c.rng_seed = 42;
  c.sim_duration_us = kExperimentMaxPackets * kExperimentPeriodUs + 200'000;
  c.traffic.source_ids = {kExperimentSource};
  c.traffic.mean_bit_rate_bps = std::int64_t{4096} * 1'000'000 / kExperimentPeriodUs;
  c.traffic.vbr_rate_levels = experiment_rate_levels();
  c.traffic.vbr_sampling = VbrSampling::Cycle;
  c.traffic.cbr_out_interval_us = kExperimentPeriodUs;
  c.traffic.packets_per_source = packets;
  c.traffic.high_priority_fraction = 0.2;
  c.traffic.lifetime_budget_us = 200'000;
  c.traffic.shape_at_source = false;
  c.buffer_policy.mode = mode;
  c.buffer_policy.proportionality_k = 1;
  c.buffer_policy.explicit_nodes.reset();
  return c;
}

struct TableRow {
  std::int64_t packets = 0;
  double mean_delay_ms = 0.0;
  double jitter_ms = 0.0;
  MetricsReport report;
};

/// Packet counts swept for each table: 10..60 without buffers, 10..50 with.
inline std::vector<std::int64_t> table_packet_counts(int which) {
  if (which == 2) return {10, 20, 30, 40, 50, 60};
  return {10, 20, 30, 40, 50};
}

inline std::vector<TableRow> run_table(int which) {
  if (which != 2 && which != 3) throw ConfigError("table must be 2 or 3");
  const auto mode = which == 2 ? BufferMode::None : BufferMode::Eq1;
  std::vector<TableRow> rows;
  for (auto n : table_packet_counts(which)) {
    const auto trace = run(experiment_scenario(mode, n));
    TableRow row;
    row.packets = n;
    row.report = compute_metrics(trace);
    row.mean_delay_ms = us_to_ms(row.report.mean_delay_us.value_or(0.0));
    row.jitter_ms = row.report.jitter ? us_to_ms(row.report.jitter->mad_us()) : 0.0;
    rows.push_back(std::move(row));
  }
  return rows;
}

inline std::string table_csv(const std::vector<TableRow>& rows) {
  std::string out = "packet_count,mean_delay_ms,jitter_ms\n";
  for (const auto& r : rows)
    out += std::to_string(r.packets) + "," + detail::fmt_double(r.mean_delay_ms, 4) + "," +
           detail::fmt_double(r.jitter_ms, 4) + "\n";
  return out;
}

inline constexpr double kJitterConstancyTolerance = 0.10;

/// Jitter grows strictly from each sweep point to the next.
inline bool jitter_strictly_increasing(const std::vector<TableRow>& rows) {
  for (std::size_t i = 1; i < rows.size(); ++i)
    if (!(rows[i].report.jitter && rows[i - 1].report.jitter &&
          rows[i].report.jitter->mad_us() > rows[i - 1].report.jitter->mad_us()))
      return false;
  return !rows.empty();
}

/// max - min of jitter across the sweep is within 10% of its mean.
inline bool jitter_constant(const std::vector<TableRow>& rows) {
  if (rows.empty()) return false;
  double lo = 1e300, hi = -1e300, sum = 0.0;
  for (const auto& r : rows) {
    const double j = r.report.jitter ? r.report.jitter->mad_us() : 0.0;
    lo = std::min(lo, j);
    hi = std::max(hi, j);
    sum += j;
  }
  return hi - lo <= kJitterConstancyTolerance * (sum / static_cast<double>(rows.size()));
}

// ---------------------------------------------------------------------------
// Parameter sweeps

enum class SeedPolicy { Fixed, Increment };

struct SweepSpec {
  std::string base_path;
  std::string key;
  std::vector<std::string> values;
  SeedPolicy seed_policy = SeedPolicy::Fixed;
};

/// Sweep files are `key = value` lines: base, key, seed_policy, and one
/// `value = ...` line per sweep point. A relative base path resolves against
/// `spec_dir`.
inline SweepSpec parse_sweep_spec(std::string_view text, const std::filesystem::path& spec_dir = {}) {
  SweepSpec s;
  bool have_key = false, have_base = false;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view view = line;
    if (const auto hash = view.find('#'); hash != std::string_view::npos) view = view.substr(0, hash);
    view = detail::trim(view);
    if (view.empty()) continue;
    const auto eq = view.find('=');
    if (eq == std::string_view::npos)
      throw ConfigError("sweep line " + std::to_string(line_no) + ": expected key = value");
    const auto k = detail::trim(view.substr(0, eq));
    const auto v = std::string(detail::trim(view.substr(eq + 1)));
    if (k == "base") {
      std::filesystem::path p(v);
      s.base_path = (p.is_relative() && !spec_dir.empty() ? spec_dir / p : p).string();
      have_base = true;
    } else if (k == "key") {
      s.key = v;
      have_key = true;
    } else if (k == "value") {
      s.values.push_back(v);
    } else if (k == "seed_policy") {
      if (v == "fixed") s.seed_policy = SeedPolicy::Fixed;
      else if (v == "increment") s.seed_policy = SeedPolicy::Increment;
      else throw ConfigError("invalid seed_policy: " + v);
    } else {
      throw ConfigError("unknown sweep key: " + std::string(k));
    }
  }
  if (!have_base) throw ConfigError("sweep spec missing 'base'");
  if (!have_key) throw ConfigError("sweep spec missing 'key'");
  if (!is_scenario_key(s.key)) throw ConfigError("swept key is not a scenario field: " + s.key);
  return s;
}

inline SweepSpec load_sweep_spec(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open sweep spec: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_sweep_spec(ss.str(), std::filesystem::path(path).parent_path());
}

struct SweepRow {
  std::string value;
  std::string status = "ok";
  std::optional<MetricsReport> report;
};

inline SweepRow run_sweep_point(const ScenarioConfig& base, const SweepSpec& spec, std::size_t index) {
  SweepRow row;
  row.value = spec.values[index];
  try {
    ScenarioConfig c = base;
    set_field(c, spec.key, row.value);
    if (spec.seed_policy == SeedPolicy::Increment) c.rng_seed = base.rng_seed + index;
    row.report = compute_metrics(run(c));
  } catch (const std::exception& e) {
    std::string msg = e.what();
    std::replace(msg.begin(), msg.end(), ',', ';');
    std::replace(msg.begin(), msg.end(), '\n', ' ');
    row.status = "error: " + msg;
  }
  return row;
}

/// Runs every sweep point (on up to `jobs` threads); rows come back in spec order.
inline std::vector<SweepRow> run_sweep(const ScenarioConfig& base, const SweepSpec& spec, unsigned jobs = 1) {
  std::vector<SweepRow> rows(spec.values.size());
  jobs = std::max(1u, std::min<unsigned>(jobs, static_cast<unsigned>(std::max<std::size_t>(1, rows.size()))));
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < rows.size(); i = next++) rows[i] = run_sweep_point(base, spec, i);
  };
  std::vector<std::jthread> pool;
  for (unsigned t = 1; t < jobs; ++t) pool.emplace_back(worker);
  worker();
  pool.clear();
  return rows;
}

inline std::string sweep_csv(const SweepSpec& spec, const std::vector<SweepRow>& rows) {
  std::string out = spec.key + ",status," + metrics_csv_header() + "\n";
  const std::string empty_metrics(std::count(metrics_csv_header(), metrics_csv_header() +
                                                 std::char_traits<char>::length(metrics_csv_header()), ','),
                                  ',');
  for (const auto& r : rows) {
    std::string value = r.value;
    std::replace(value.begin(), value.end(), ',', ';');
    out += value + "," + r.status + "," + (r.report ? metrics_csv_row(*r.report) : empty_metrics) + "\n";
  }
  return out;
}

}  // namespace csn
