#pragma once

// Flat `key = value` scenario files. Keys are exactly the ScenarioConfig
// field names (nested structs use a dotted prefix); unknown keys are errors.

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "csn/model.hpp"

namespace csn {

namespace detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

inline std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char ch) { return static_cast<char>(std::tolower(ch)); });
  return out;
}

inline std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> parts;
  if (trim(s).empty()) return parts;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    parts.push_back(trim(s.substr(start, pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return parts;
}

template <typename T>
T parse_number(std::string_view key, std::string_view text) {
  text = trim(text);
  T value{};
  const auto* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc{} || ptr != end || text.empty())
    throw ConfigError("invalid value for " + std::string(key) + ": '" + std::string(text) + "'");
  return value;
}

template <typename T>
std::string format_number(T value) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, ptr);
}

inline bool parse_bool(std::string_view key, std::string_view text) {
  const auto v = lower(trim(text));
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ConfigError("invalid value for " + std::string(key) + ": '" + std::string(text) + "'");
}

template <typename T>
std::string join(const std::vector<T>& values) {
  std::string out;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) out += ',';
    out += format_number(values[i]);
  }
  return out;
}

}  // namespace detail

/// Every recognised key, in canonical write order.
inline const std::vector<std::string>& scenario_keys() {
  static const std::vector<std::string> keys = {
      "area_m2",
      "node_count",
      "comm_range_m",
      "packet_size_bytes",
      "node_energy_j",
      "placement",
      "concentric_spokes",
      "link_rate_bps",
      "per_hop_latency_us",
      "sink_playout_delay_us",
      "energy.tx_j_per_bit",
      "energy.rx_j_per_bit",
      "rng_seed",
      "sim_duration_us",
      "traffic.source_ids",
      "traffic.mean_bit_rate_bps",
      "traffic.vbr_rate_levels",
      "traffic.vbr_sampling",
      "traffic.cbr_out_interval_us",
      "traffic.packets_per_source",
      "traffic.high_priority_fraction",
      "traffic.lifetime_budget_us",
      "traffic.shape_at_source",
      "buffer_policy.mode",
      "buffer_policy.proportionality_k",
      "buffer_policy.selection",
  };
  return keys;
}

inline bool is_scenario_key(std::string_view key) {
  const auto& keys = scenario_keys();
  return std::find(keys.begin(), keys.end(), key) != keys.end();
}

/// Assigns one field from its textual form. Throws ConfigError on an
/// unknown key or a malformed value.
inline void set_field(ScenarioConfig& c, std::string_view key, std::string_view value) {
  using detail::parse_number;
  value = detail::trim(value);
  auto& t = c.traffic;
  auto& b = c.buffer_policy;
  if (key == "area_m2") c.area_m2 = parse_number<double>(key, value);
  else if (key == "node_count") c.node_count = parse_number<std::int32_t>(key, value);
  else if (key == "comm_range_m") c.comm_range_m = parse_number<double>(key, value);
  else if (key == "packet_size_bytes") c.packet_size_bytes = parse_number<std::int32_t>(key, value);
  else if (key == "node_energy_j") c.node_energy_j = parse_number<double>(key, value);
  else if (key == "placement") {
    const auto v = detail::lower(value);
    if (v == "concentric") c.placement = Placement::Concentric;
    else if (v == "uniform") c.placement = Placement::Uniform;
    else throw ConfigError("invalid value for placement: '" + std::string(value) + "'");
  } else if (key == "concentric_spokes") c.concentric_spokes = parse_number<std::int32_t>(key, value);
  else if (key == "link_rate_bps") c.link_rate_bps = parse_number<std::int64_t>(key, value);
  else if (key == "per_hop_latency_us") c.per_hop_latency_us = parse_number<SimTime>(key, value);
  else if (key == "sink_playout_delay_us") c.sink_playout_delay_us = parse_number<SimTime>(key, value);
  else if (key == "energy.tx_j_per_bit") c.tx_j_per_bit = parse_number<double>(key, value);
  else if (key == "energy.rx_j_per_bit") c.rx_j_per_bit = parse_number<double>(key, value);
  else if (key == "rng_seed") c.rng_seed = parse_number<std::uint64_t>(key, value);
  else if (key == "sim_duration_us") c.sim_duration_us = parse_number<SimTime>(key, value);
  else if (key == "traffic.source_ids") {
    t.source_ids.clear();
    for (auto part : detail::split(value, ','))
      t.source_ids.push_back(parse_number<NodeId>(key, part));
  } else if (key == "traffic.mean_bit_rate_bps") t.mean_bit_rate_bps = parse_number<std::int64_t>(key, value);
  else if (key == "traffic.vbr_rate_levels") {
    t.vbr_rate_levels.clear();
    for (auto part : detail::split(value, ',')) {
      const auto colon = part.find(':');
      if (colon == std::string_view::npos)
        throw ConfigError("invalid value for traffic.vbr_rate_levels: expected rate:dwell, got '" +
                          std::string(part) + "'");
      t.vbr_rate_levels.push_back({parse_number<std::int64_t>(key, part.substr(0, colon)),
                                   parse_number<SimTime>(key, part.substr(colon + 1))});
    }
  } else if (key == "traffic.vbr_sampling") {
    const auto v = detail::lower(value);
    if (v == "cycle") t.vbr_sampling = VbrSampling::Cycle;
    else if (v == "random") t.vbr_sampling = VbrSampling::Random;
    else throw ConfigError("invalid value for traffic.vbr_sampling: '" + std::string(value) + "'");
  } else if (key == "traffic.cbr_out_interval_us") t.cbr_out_interval_us = parse_number<SimTime>(key, value);
  else if (key == "traffic.packets_per_source") t.packets_per_source = parse_number<std::int64_t>(key, value);
  else if (key == "traffic.high_priority_fraction") t.high_priority_fraction = parse_number<double>(key, value);
  else if (key == "traffic.lifetime_budget_us") t.lifetime_budget_us = parse_number<SimTime>(key, value);
  else if (key == "traffic.shape_at_source") t.shape_at_source = detail::parse_bool(key, value);
  else if (key == "buffer_policy.mode") {
    const auto v = detail::lower(value);
    if (v == "none") b.mode = BufferMode::None;
    else if (v == "eq1") b.mode = BufferMode::Eq1;
    else throw ConfigError("invalid value for buffer_policy.mode: '" + std::string(value) + "'");
  } else if (key == "buffer_policy.proportionality_k") b.proportionality_k = parse_number<std::int32_t>(key, value);
  else if (key == "buffer_policy.selection") {
    const auto v = detail::lower(value);
    if (v == "all_inner_layers") {
      b.explicit_nodes.reset();
    } else if (v.rfind("explicit:", 0) == 0) {
      std::vector<NodeId> ids;
      for (auto part : detail::split(value.substr(9), ',')) ids.push_back(parse_number<NodeId>(key, part));
      b.explicit_nodes = std::move(ids);
    } else {
      throw ConfigError("invalid value for buffer_policy.selection: '" + std::string(value) +
                        "' (expected all_inner_layers or explicit:<ids>)");
    }
  } else {
    throw ConfigError("unknown key: " + std::string(key));
  }
}

/// Canonical text form of one field; parses back to the same value.
inline std::string get_field(const ScenarioConfig& c, std::string_view key) {
  using detail::format_number;
  const auto& t = c.traffic;
  const auto& b = c.buffer_policy;
  if (key == "area_m2") return format_number(c.area_m2);
  if (key == "node_count") return format_number(c.node_count);
  if (key == "comm_range_m") return format_number(c.comm_range_m);
  if (key == "packet_size_bytes") return format_number(c.packet_size_bytes);
  if (key == "node_energy_j") return format_number(c.node_energy_j);
  if (key == "placement") return c.placement == Placement::Concentric ? "concentric" : "uniform";
  if (key == "concentric_spokes") return format_number(c.concentric_spokes);
  if (key == "link_rate_bps") return format_number(c.link_rate_bps);
  if (key == "per_hop_latency_us") return format_number(c.per_hop_latency_us);
  if (key == "sink_playout_delay_us") return format_number(c.sink_playout_delay_us);
  if (key == "energy.tx_j_per_bit") return format_number(c.tx_j_per_bit);
  if (key == "energy.rx_j_per_bit") return format_number(c.rx_j_per_bit);
  if (key == "rng_seed") return format_number(c.rng_seed);
  if (key == "sim_duration_us") return format_number(c.sim_duration_us);
  if (key == "traffic.source_ids") return detail::join(t.source_ids);
  if (key == "traffic.mean_bit_rate_bps") return format_number(t.mean_bit_rate_bps);
  if (key == "traffic.vbr_rate_levels") {
    std::string out;
    for (std::size_t i = 0; i < t.vbr_rate_levels.size(); ++i) {
      if (i) out += ',';
      out += format_number(t.vbr_rate_levels[i].rate_bps) + ":" +
             format_number(t.vbr_rate_levels[i].dwell_us);
    }
    return out;
  }
  if (key == "traffic.vbr_sampling") return t.vbr_sampling == VbrSampling::Cycle ? "cycle" : "random";
  if (key == "traffic.cbr_out_interval_us") return format_number(t.cbr_out_interval_us);
  if (key == "traffic.packets_per_source") return format_number(t.packets_per_source);
  if (key == "traffic.high_priority_fraction") return format_number(t.high_priority_fraction);
  if (key == "traffic.lifetime_budget_us") return format_number(t.lifetime_budget_us);
  if (key == "traffic.shape_at_source") return t.shape_at_source ? "true" : "false";
  if (key == "buffer_policy.mode") return b.mode == BufferMode::None ? "none" : "eq1";
  if (key == "buffer_policy.proportionality_k") return format_number(b.proportionality_k);
  if (key == "buffer_policy.selection")
    return b.explicit_nodes ? "explicit:" + detail::join(*b.explicit_nodes) : "all_inner_layers";
  throw ConfigError("unknown key: " + std::string(key));
}

inline std::string write_scenario(const ScenarioConfig& c) {
  std::string out;
  for (const auto& key : scenario_keys()) out += key + " = " + get_field(c, key) + "\n";
  return out;
}

/// Parses scenario text. Keys not present keep their defaults.
inline ScenarioConfig parse_scenario(std::string_view text) {
  ScenarioConfig c;
  std::size_t line_no = 0;
  std::istringstream in{std::string(text)};
  std::string line;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view view = line;
    if (const auto hash = view.find('#'); hash != std::string_view::npos) view = view.substr(0, hash);
    view = detail::trim(view);
    if (view.empty()) continue;
    const auto eq = view.find('=');
    if (eq == std::string_view::npos)
      throw ConfigError("line " + std::to_string(line_no) + ": expected key = value");
    const auto key = detail::trim(view.substr(0, eq));
    try {
      set_field(c, key, view.substr(eq + 1));
    } catch (const ConfigError& e) {
      throw ConfigError("line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return c;
}

inline ScenarioConfig load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open scenario file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_scenario(ss.str());
}

inline std::string format_violations(const std::vector<Violation>& vs) {
  std::string out;
  for (const auto& v : vs) out += v.field + ": " + v.reason + "\n";
  return out;
}

}  // namespace csn
