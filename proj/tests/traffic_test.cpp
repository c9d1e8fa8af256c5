#include <gtest/gtest.h>

#include <cmath>

#include "csn/traffic.hpp"

namespace csn {
namespace {

PacketizerState fresh(std::int32_t bytes = 512) {
  PacketizerState s;
  s.source_id = 5;
  s.packet_size_bytes = bytes;
  s.lifetime_budget_us = 1000;
  return s;
}

TEST(Packetizer, InfiniteRateHasZeroDelay) {
  auto [s, pkts] = add_burst(fresh(), 4096);
  ASSERT_EQ(pkts.size(), 1u);
  EXPECT_EQ(pkts[0].packetization_delay(), 0);
  EXPECT_EQ(s.bits_accumulated(), 0);
  EXPECT_FALSE(s.in_progress);
}

TEST(Packetizer, BurstSplitsAndKeepsRemainder) {
  auto [s, pkts] = add_burst(fresh(), 4096 * 2 + 100);
  EXPECT_EQ(pkts.size(), 2u);
  EXPECT_EQ(s.bits_accumulated(), 100);
  EXPECT_TRUE(s.in_progress);
}

TEST(Packetizer, FinitePeakRateGivesOneMillisecond) {
  // 512 bytes at 4.096 Mbps
  auto [s, pkts] = step_bits(fresh(), 4'096'000, 5'000, 1);
  ASSERT_EQ(pkts.size(), 1u);
  EXPECT_EQ(pkts[0].created_at, 0);
  EXPECT_EQ(pkts[0].packetized_at, 1000);
  EXPECT_EQ(pkts[0].packetization_delay(), 1000);
  EXPECT_EQ(pkts[0].lifetime_deadline, 1000);
}

TEST(Packetizer, ZeroRateStaysIdle) {
  auto [s, pkts] = step_bits(fresh(), 0, 1'000'000);
  EXPECT_TRUE(pkts.empty());
  EXPECT_EQ(s.clock, 1'000'000);
  EXPECT_FALSE(s.in_progress);
}

TEST(Packetizer, AccumulationSpansSteps) {
  auto s = fresh();
  s.clock = 200;
  auto r1 = step_bits(s, 1'024'000, 2'000);  // 2048 bits, not yet a packet
  EXPECT_TRUE(r1.second.empty());
  EXPECT_TRUE(r1.first.in_progress);
  auto r2 = step_bits(r1.first, 0, 500);  // silence
  auto r3 = step_bits(r2.first, 2'048'000, 5'000);
  ASSERT_FALSE(r3.second.empty());
  EXPECT_EQ(r3.second[0].created_at, 200);
  EXPECT_EQ(r3.second[0].packetized_at, 200 + 2'000 + 500 + 1'000);
}

TEST(Packetizer, LimitStopsEmission) {
  auto [s, pkts] = step_bits(fresh(), 4'096'000, 1'000'000, 3);
  EXPECT_EQ(pkts.size(), 3u);
  EXPECT_EQ(s.emitted_count, 3);
}

// Property: for arbitrary rate/duration sequences, bits fed equal bits
// packetized plus bits still waiting, and sequence numbers are dense.
TEST(Packetizer, ConservesBits) {
  Rng rng(99);
  for (int trial = 0; trial < 500; ++trial) {
    auto s = fresh(1 + static_cast<std::int32_t>(uniform_index(rng, 600)));
    std::int64_t emitted = 0;
    SimTime last_pktz = -1;
    for (int step = 0; step < 30; ++step) {
      const auto rate = static_cast<std::int64_t>(uniform_index(rng, 5'000'000));
      const auto dt = 1 + static_cast<SimTime>(uniform_index(rng, 20'000));
      auto [next, pkts] = uniform_index(rng, 10) == 0
                              ? add_burst(s, static_cast<std::int64_t>(uniform_index(rng, 10'000)))
                              : step_bits(s, rate, dt);
      for (const auto& p : pkts) {
        ASSERT_EQ(p.id, emitted++);
        ASSERT_GE(p.packetized_at, last_pktz);
        ASSERT_GE(p.packetization_delay(), 0);
        last_pktz = p.packetized_at;
      }
      s = next;
    }
    EXPECT_EQ(s.bits_fed_scaled, emitted * s.packet_bits() * kBitScale + s.bits_scaled);
  }
}

// Property: from an empty packetizer, a higher constant rate never yields a
// longer packetization delay for the first packet.
TEST(Packetizer, DelayNonIncreasingInRate) {
  SimTime prev = std::numeric_limits<SimTime>::max();
  for (std::int64_t rate = 1'000; rate <= 50'000'000; rate = rate * 11 / 10 + 1) {
    auto [s, pkts] = step_bits(fresh(), rate, 10'000'000, 1);
    ASSERT_EQ(pkts.size(), 1u);
    EXPECT_LE(pkts[0].packetization_delay(), prev);
    EXPECT_EQ(pkts[0].packetization_delay(), (4096 * kBitScale + rate - 1) / rate);
    prev = pkts[0].packetization_delay();
  }
}

std::vector<Packet> at_times(std::initializer_list<SimTime> ts) {
  std::vector<Packet> out;
  std::int64_t i = 0;
  for (SimTime t : ts) {
    Packet p;
    p.id = i++;
    p.source_id = 1;
    p.packetized_at = t;
    out.push_back(p);
  }
  return out;
}

std::vector<SimTime> departures(const std::vector<std::pair<Packet, SimTime>>& v) {
  std::vector<SimTime> out;
  for (const auto& [p, t] : v) out.push_back(t);
  return out;
}

TEST(Shaper, SpacesBurstToInterval) {
  EXPECT_EQ(departures(shape_cbr(at_times({0, 10, 20}), 100)), (std::vector<SimTime>{0, 100, 200}));
}

TEST(Shaper, LatePacketLeavesOnArrival) {
  EXPECT_EQ(departures(shape_cbr(at_times({0, 500}), 100)), (std::vector<SimTime>{0, 500}));
}

TEST(Shaper, SinglePacket) {
  EXPECT_EQ(departures(shape_cbr(at_times({42}), 100)), (std::vector<SimTime>{42}));
}

TEST(Shaper, RandomInputsKeepSpacingAndCausality) {
  Rng rng(5);
  for (int trial = 0; trial < 300; ++trial) {
    std::vector<Packet> pkts;
    SimTime t = 0;
    for (int i = 0; i < 40; ++i) {
      t += static_cast<SimTime>(uniform_index(rng, 300));
      Packet p;
      p.id = i;
      p.packetized_at = t;
      pkts.push_back(p);
    }
    const auto out = shape_cbr(pkts, 100);
    for (std::size_t i = 0; i < out.size(); ++i) {
      EXPECT_GE(out[i].second, out[i].first.packetized_at);
      if (i > 0) {
        EXPECT_GE(out[i].second - out[i - 1].second, 100);
      }
    }
  }
}

TEST(Priorities, FractionExtremes) {
  std::vector<Packet> pkts(500);
  for (auto& p : assign_priorities(pkts, 0.0, 1)) EXPECT_EQ(p.priority, Priority::Normal);
  for (auto& p : assign_priorities(pkts, 1.0, 1)) EXPECT_EQ(p.priority, Priority::High);
}

TEST(Priorities, FractionWithinThreeSigma) {
  const auto marked = assign_priorities(std::vector<Packet>(10'000), 0.25, 42);
  const auto highs = std::count_if(marked.begin(), marked.end(),
                                   [](const Packet& p) { return p.priority == Priority::High; });
  const double sigma = std::sqrt(10'000 * 0.25 * 0.75);
  EXPECT_LE(std::abs(static_cast<double>(highs) - 2'500.0), 3 * sigma);
}

TEST(Priorities, SeedDetermined) {
  const std::vector<Packet> pkts(200);
  const auto a = assign_priorities(pkts, 0.5, 7);
  const auto b = assign_priorities(pkts, 0.5, 7);
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(a[i].priority, b[i].priority);
}

TEST(Vbr, CycleAndConstant) {
  TrafficConfig t;
  t.vbr_rate_levels = {{10, 1}, {20, 2}};
  VbrSchedule cyc(t, Rng(1));
  EXPECT_EQ(cyc.next().rate_bps, 10);
  EXPECT_EQ(cyc.next().rate_bps, 20);
  EXPECT_EQ(cyc.next().rate_bps, 10);

  t.vbr_rate_levels.clear();
  VbrSchedule flat(t, Rng(1));
  EXPECT_EQ(flat.next().rate_bps, t.mean_bit_rate_bps);
}

TEST(Ledger, CsvColumns) {
  auto [s, pkts] = step_bits(fresh(), 4'096'000, 1'000, 1);
  EXPECT_EQ(packet_ledger_csv(pkts),
            "packet_id,created_at,packetized_at,Tp_us,priority,deadline\n"
            "5.0,0,1000,1000,N,1000\n");
}

}  // namespace
}  // namespace csn
