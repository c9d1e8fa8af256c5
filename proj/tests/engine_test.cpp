#include <gtest/gtest.h>

#include <map>

#include "csn/config_io.hpp"
#include "csn/engine.hpp"
#include "csn/metrics.hpp"
#include "csn/trace_io.hpp"
#include "support/random_scenario.hpp"

namespace csn {
namespace {

const std::string kSource = CSN_SOURCE_DIR;

ScenarioConfig chain3() { return load_scenario(kSource + "/scenarios/chain3.scn"); }

ScenarioConfig two_node(BufferMode mode) {
  ScenarioConfig c;
  c.node_count = 2;
  c.area_m2 = 100.0 * 100.0;
  c.link_rate_bps = 1'024'000;  // 4000 us per 512-byte packet
  c.per_hop_latency_us = 100;
  c.sink_playout_delay_us = 700;
  c.sim_duration_us = 1'000'000;
  c.traffic.source_ids = {1};
  c.traffic.vbr_rate_levels = {{4'096'000, 1'000}, {0, 1'000'000}};
  c.traffic.packets_per_source = 1;
  c.buffer_policy.mode = mode;
  return c;
}

TEST(Engine, TwoNodeClosedForm) {
  const auto trace = run(two_node(BufferMode::None));
  ASSERT_EQ(trace.tx_time_us, 4000);
  const auto* r = trace.find({1, 0});
  ASSERT_NE(r, nullptr);
  ASSERT_EQ(r->fate, PacketFate::Delivered);
  const auto d = decompose_delay(r->packet);
  EXPECT_EQ(d.packetization, 1000);
  EXPECT_EQ(d.network, 4000 + 100);
  EXPECT_EQ(d.playout, 0);
  EXPECT_EQ(d.total, 5100);
}

TEST(Engine, TwoNodeWithPlayoutAddsFixedDelay) {
  const auto trace = run(two_node(BufferMode::Eq1));
  const auto d = decompose_delay(trace, {1, 0});
  EXPECT_EQ(d.playout, 700);
  EXPECT_EQ(d.total, 5100 + 700);
}

TEST(Engine, ChainMatchesGoldenTrace) {
  const auto trace = run(chain3());
  EXPECT_EQ(format_trace(trace), testing::read_file(kSource + "/tests/golden/chain3.trace"));
}

TEST(Engine, TruncatedRunLeavesPacketsInFlight) {
  auto c = chain3();
  c.sim_duration_us = 5'000;  // both packetized, neither reaches the relay
  const auto trace = run(c);
  const auto s = drain_summary(trace);
  EXPECT_EQ(s.sent, 2u);
  EXPECT_EQ(s.delivered, 0u);
  EXPECT_EQ(s.dropped, 0u);
  EXPECT_EQ(s.in_flight_at_end, 2u);
  EXPECT_EQ(packet_delivery_fraction(trace).str(), "0.00");
}

TEST(Engine, ExpiredHighPacketIsPreemptedAtRelay) {
  auto c = chain3();
  c.traffic.high_priority_fraction = 1.0;
  c.traffic.lifetime_budget_us = 5'000;
  const auto text = format_trace(run(c));
  // 2.0 is already expired on arrival; 2.1 expires at 9000 while held for 9100.
  EXPECT_NE(text.find("8100 PRE 1 2.0\n"), std::string::npos) << text;
  EXPECT_NE(text.find("9000 PRE 1 2.1\n"), std::string::npos) << text;
  EXPECT_EQ(text.find(" REL "), std::string::npos) << text;
}

TEST(Engine, EnergyExhaustionDropsAndCounts) {
  auto c = chain3();
  c.tx_j_per_bit = 1e-6;   // 0.004096 J per packet
  c.node_energy_j = 0.005;  // one transmission each
  const auto trace = run(c);
  const auto s = drain_summary(trace);
  EXPECT_EQ(s.sent, 2u);
  EXPECT_EQ(s.delivered, 1u);
  EXPECT_EQ(s.dropped, 1u);
  EXPECT_EQ(trace.live.energy_drops, 1u);
  EXPECT_NE(format_trace(trace).find("4800 DEAD 2 -"), std::string::npos);
}

// Relay holds 2.1 on a 10 ms grid, then runs out of energy receiving 2.2;
// the held packet is drained.
TEST(Engine, DeadRelayDrainsHeldPackets) {
  auto c = chain3();
  c.traffic.cbr_out_interval_us = 10'000;
  c.traffic.packets_per_source = 3;
  c.traffic.vbr_rate_levels = {{5'120'000, 1'000'000}};
  c.rx_j_per_bit = 1e-6;  // 0.004096 J per reception
  c.node_energy_j = 0.01;
  const auto trace = run(c);
  const auto s = drain_summary(trace);
  EXPECT_EQ(s.sent, 3u);
  EXPECT_EQ(s.delivered, 1u);
  EXPECT_EQ(s.dropped, 2u);
  EXPECT_EQ(trace.live.energy_drops, 1u);
  ASSERT_EQ(trace.buffers[0].node, 1);
  EXPECT_EQ(trace.buffers[0].drained, 1u);
  const auto text = format_trace(trace);
  EXPECT_NE(text.find("6500 DROP 1 2.2 reason=energy\n6500 DEAD 1 -\n6500 DROP 1 2.1 reason=energy\n"),
            std::string::npos)
      << text;
}

// A relay with a single slot and a long CBR interval: arrivals pile up and
// every loss must be an eviction or a rejection.
TEST(Engine, SingleSlotRelayFlood) {
  ScenarioConfig c = chain3();
  c.traffic.cbr_out_interval_us = 100'000;
  c.traffic.packets_per_source = 20;
  c.traffic.vbr_rate_levels = {{2'048'000, 1'000'000}};
  c.traffic.high_priority_fraction = 0.3;
  c.sim_duration_us = 3'000'000;
  auto topo = build_topology(c);
  topo.node(1).buffer_capacity_packets = 1;
  const auto trace = run(c, topo);
  ASSERT_EQ(trace.buffers.size(), 2u);  // relay and the source's own node
  const auto& relay = trace.buffers[0];
  ASSERT_EQ(relay.node, 1);
  EXPECT_LE(relay.peak_occupancy, 1u);
  EXPECT_GT(relay.evictions + relay.rejections, 0u);
  const auto s = drain_summary(trace);
  EXPECT_EQ(s.dropped, relay.evictions + relay.rejections);
  EXPECT_EQ(s.sent, s.delivered + s.dropped + s.in_flight_at_end);
}

TEST(Engine, InvalidConfigThrows) {
  auto c = chain3();
  c.node_count = 0;
  EXPECT_THROW(run(c), ConfigError);
}

class RandomScenarios : public ::testing::Test {
 protected:
  static std::vector<ScenarioConfig> configs() {
    Rng rng(31337);
    std::vector<ScenarioConfig> out;
    for (int i = 0; i < 60; ++i) out.push_back(testing::random_scenario(rng));
    return out;
  }
};

TEST_F(RandomScenarios, ConservationHolds) {
  for (const auto& c : configs()) {
    const auto trace = run(c);
    const auto s = drain_summary(trace);
    ASSERT_EQ(s.sent, s.delivered + s.dropped + s.in_flight_at_end) << write_scenario(c);
    EXPECT_EQ(trace.live.sent, s.sent);
    EXPECT_EQ(trace.live.delivered, s.delivered);
    EXPECT_EQ(trace.live.dropped, s.dropped);
    std::uint64_t buffer_losses = 0;
    for (const auto& b : trace.buffers) {
      EXPECT_EQ(b.enqueued, b.released + b.preemptions + b.evictions + b.drained + b.still_queued);
      EXPECT_LE(b.peak_occupancy, static_cast<std::size_t>(b.capacity));
      buffer_losses += b.evictions + b.rejections + b.drained;
    }
    EXPECT_EQ(s.dropped, buffer_losses + trace.live.energy_drops) << write_scenario(c);
  }
}

TEST_F(RandomScenarios, Deterministic) {
  for (const auto& c : configs()) EXPECT_EQ(format_trace(run(c)), format_trace(run(c)));
}

TEST_F(RandomScenarios, Causality) {
  for (const auto& c : configs()) {
    const auto trace = run(c);
    for (std::size_t i = 1; i < trace.records.size(); ++i)
      ASSERT_LE(trace.records[i - 1].time, trace.records[i].time);
    for (const auto& r : trace.packets) {
      const auto& p = r.packet;
      ASSERT_LE(p.created_at, p.packetized_at);
      ASSERT_FALSE(p.hops.empty());
      EXPECT_EQ(p.hops.front().node, p.source_id);
      EXPECT_EQ(p.hops.front().arrived_at, p.packetized_at);
      for (std::size_t h = 0; h < p.hops.size(); ++h) {
        EXPECT_LE(p.hops[h].arrived_at, p.hops[h].departed_at);
        if (h > 0) {
          EXPECT_EQ(trace.topology.node(p.hops[h - 1].node).parent_id, p.hops[h].node);
          EXPECT_EQ(p.hops[h].arrived_at - p.hops[h - 1].departed_at, trace.tx_time_us + c.per_hop_latency_us);
        }
      }
      if (p.delivered_at) {
        EXPECT_EQ(p.hops.back().node, kSinkId);
        EXPECT_LE(p.packetized_at, *p.delivered_at);
      }
    }
  }
}

// Within one service pass, expired high-priority packets leave before due ones,
// and nothing leaves a buffer ahead of its scheduled release unless preempted.
TEST_F(RandomScenarios, PreemptionPrecedesReleaseAndHoldsAreRespected) {
  for (const auto& c : configs()) {
    const auto trace = run(c);
    std::map<std::pair<NodeId, std::string>, SimTime> release_at;
    std::map<std::pair<SimTime, NodeId>, bool> seen_rel;
    for (const auto& r : trace.records) {
      if (!r.packet) continue;
      const auto key = std::make_pair(r.node, r.packet->str());
      if (r.kind == TraceKind::ENQ) {
        release_at[key] = std::stoll(r.detail.substr(r.detail.find('=') + 1));
        seen_rel[{r.time, r.node}] = false;  // a new service pass starts
      } else if (r.kind == TraceKind::REL) {
        seen_rel[{r.time, r.node}] = true;
        ASSERT_TRUE(release_at.count(key));
        EXPECT_EQ(r.time, release_at[key]) << key.second;
      } else if (r.kind == TraceKind::PRE) {
        EXPECT_FALSE((seen_rel[{r.time, r.node}])) << "PRE after REL at " << r.time;
        const auto* pr = trace.find(*r.packet);
        ASSERT_NE(pr, nullptr);
        EXPECT_EQ(pr->packet.priority, Priority::High);
        EXPECT_LE(pr->packet.lifetime_deadline, r.time);
        EXPECT_LE(r.time, release_at[key]);
      }
    }
  }
}

TEST_F(RandomScenarios, NetworkDelayIsHoldsPlusLinkTransit) {
  for (const auto& c : configs()) {
    const auto trace = run(c);
    for (const auto& r : trace.packets) {
      if (r.fate != PacketFate::Delivered) continue;
      const auto& p = r.packet;
      const auto d = decompose_delay(p);
      SimTime holds = 0;
      for (std::size_t h = 0; h + 1 < p.hops.size(); ++h) holds += p.hops[h].departed_at - p.hops[h].arrived_at;
      const auto links = static_cast<SimTime>(p.hops.size() - 1);
      EXPECT_EQ(d.network - holds, links * (trace.tx_time_us + c.per_hop_latency_us));
      EXPECT_EQ(d.network, d.network_check);
    }
  }
}

}  // namespace
}  // namespace csn
