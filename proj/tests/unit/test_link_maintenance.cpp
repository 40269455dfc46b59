#include "doctest.h"

#include <cmath>
#include <numbers>
#include <random>

#include "fwa/errors.hpp"
#include "fwa/link_maintenance.hpp"
#include "../oracles.hpp"

using namespace fwa;

namespace {

AbsoluteSlot basic(TimeUs start, const char* sta, Direction dir = Direction::Uplink) {
  AbsoluteSlot s;
  s.start_us = start;
  s.duration_us = 66;
  s.category = SlotCategory::Basic;
  s.assignee = NodeId(sta);
  s.direction = dir;
  return s;
}

NodeModel pencil(const char* id, Position p, double boresight) {
  return NodeModel{NodeId(id), Role::CnSta, p,
                   Codebook({Sector{0, boresight, 30.0, 25.0, -5.0}})};
}

}  // namespace

TEST_CASE("build_announce") {
  const auto hb = build_announce(NodeId("ap"), std::nullopt, {HeartbeatElement{}});
  CHECK_FALSE(hb.receiver.has_value());
  CHECK(element_name(hb.elements[0]) == "Heartbeat");

  const auto bw = build_announce(NodeId("sta"), NodeId("ap"),
                                 {TddBandwidthRequestElement{1'000'000, 2e9, 3}}, true);
  CHECK(bw.needs_ack);
  CHECK(std::get<TddBandwidthRequestElement>(bw.elements[0]).traffic_id == 3);

  CHECK_THROWS_AS(build_announce(NodeId("sta"), NodeId("ap"), {}, true), InvalidArgument);
  CHECK_THROWS_AS(build_announce(NodeId("ap"), std::nullopt, {HeartbeatElement{}}, true), InvalidArgument);

  const auto frame = announce_frame(bw, FrameSizes{});
  CHECK(frame.kind == FrameKind::Announce);
  CHECK(frame.size_bits == FrameSizes{}.announce_bytes * 8);
}

TEST_CASE("periodic request: accepted on slot-aligned transmit slots") {
  std::vector<AbsoluteSlot> slots;
  for (TimeUs t = 0; t < 400'000; t += 10'000) {
    slots.push_back(basic(t, "sta"));
    slots.push_back(basic(t + 500, "sta", Direction::Downlink));
  }
  const auto d = handle_periodic_report_request({10'000, 100'000, 3}, slots, NodeId("sta"));
  REQUIRE(d.accepted);
  CHECK(d.emission_times_us == std::vector<TimeUs>{10'000, 110'000, 210'000});

  const auto one = handle_periodic_report_request({30'000, 5'000, 1}, slots, NodeId("sta"));
  REQUIRE(one.accepted);
  CHECK(one.emission_times_us == std::vector<TimeUs>{30'000});

  // Off-grid start shifts to the covering slot.
  const auto shifted = handle_periodic_report_request({12'000, 100'000, 2}, slots, NodeId("sta"));
  REQUIRE(shifted.accepted);
  CHECK(shifted.emission_times_us == std::vector<TimeUs>{20'000, 120'000});

  // The AP side transmits in the downlink slots.
  const auto ap = handle_periodic_report_request({10'000, 100'000, 3}, slots, NodeId("sta"), Direction::Downlink);
  REQUIRE(ap.accepted);
  CHECK(ap.emission_times_us[0] == 10'500);
}

TEST_CASE("periodic request: reject when a window has no transmit slot") {
  std::vector<AbsoluteSlot> slots{basic(10'000, "sta"), basic(110'000, "sta"), basic(400'000, "sta"),
                                  basic(210'000, "other")};
  const auto d = handle_periodic_report_request({10'000, 100'000, 3}, slots, NodeId("sta"));
  CHECK_FALSE(d.accepted);
  CHECK(d.emission_times_us.empty());
  CHECK_FALSE(d.reason.empty());

  // Fine-grained interval narrower than the slot spacing.
  const auto fine = handle_periodic_report_request({10'000, 50, 2}, slots, NodeId("sta"));
  CHECK_FALSE(fine.accepted);

  CHECK_THROWS_AS(handle_periodic_report_request({0, 0, 1}, slots, NodeId("sta")), InvalidArgument);
  CHECK_THROWS_AS(handle_periodic_report_request({0, 10, 0}, slots, NodeId("sta")), InvalidArgument);
}

TEST_CASE("periodic request decisions match a window scan") {
  std::mt19937 rng(5);
  for (int trial = 0; trial < 300; ++trial) {
    std::vector<AbsoluteSlot> slots;
    const int n = std::uniform_int_distribution<int>(0, 12)(rng);
    for (int i = 0; i < n; ++i) {
      slots.push_back(basic(std::uniform_int_distribution<TimeUs>(0, 2'000)(rng), i % 3 ? "sta" : "x",
                            i % 4 ? Direction::Uplink : Direction::Downlink));
    }
    const PeriodicReportRequest req{std::uniform_int_distribution<TimeUs>(0, 800)(rng),
                                    std::uniform_int_distribution<TimeUs>(1, 600)(rng),
                                    std::uniform_int_distribution<int>(1, 4)(rng)};
    std::vector<TimeUs> expected;
    bool ok = true;
    for (int k = 0; ok && k < req.count; ++k) {
      const TimeUs lo = req.start_time_us + k * req.interval_us;
      const auto first = oracle::first_basic_tx(slots, NodeId("sta"), lo - 1);
      if (!first || first->start_us >= lo + req.interval_us) {
        ok = false;
      } else {
        expected.push_back(first->start_us);
      }
    }
    const auto d = handle_periodic_report_request(req, slots, NodeId("sta"));
    CHECK(d.accepted == ok);
    if (ok) CHECK(d.emission_times_us == expected);
  }
}

TEST_CASE("measurement report at 22.7 dB SNR") {
  // Place the pair so the link budget lands on 22.7 dB with both mainlobes aligned.
  const double noise = oracle::thermal_noise_dbm(2.16e9, 10.0);
  CHECK(noise == doctest::Approx(-70.66).epsilon(1e-3));
  const double fspl = 10.0 + 50.0 - noise - 22.7;
  const double d = std::pow(10.0, fspl / 20.0) * 299792458.0 / (4.0 * std::numbers::pi * 60e9);
  NodeModel a = pencil("a", {0, 0}, 0.0);
  NodeModel b = pencil("b", {d, 0}, 180.0);
  const ChannelModel ch;
  std::uint32_t seq = 41;
  const MeasuredLink link{&a, 0, &b, 0, true};
  const auto r1 = emit_link_measurement_report(link, ch, seq);
  // The library's rounded Friis constant sits about 2 mdB off the exact one.
  CHECK(std::abs(r1.rsni_db - 22.7) <= 0.01);
  CHECK(std::abs(r1.rcpi_dbm - -48.0) <= 0.2);
  CHECK(r1.measured_tx == NodeId("a"));
  CHECK(r1.reporter == NodeId("b"));
  CHECK(r1.sequence_number == 41);
  const auto r2 = emit_link_measurement_report(link, ch, seq);
  CHECK(r2.sequence_number == 42);
  CHECK(seq == 43);
  CHECK(r2.rsni_db == r1.rsni_db);
  CHECK(r2.rcpi_dbm == r1.rcpi_dbm);

  const MeasuredLink untrained{&a, 0, &b, 0, false};
  CHECK_THROWS_AS(emit_link_measurement_report(untrained, ch, seq), ProtocolError);
  CHECK(seq == 43);
}

TEST_CASE("keepalive boundary") {
  CHECK(keepalive_check(0, 1'200'000, 1'000'000) == Liveness::Dead);
  CHECK(keepalive_check(0, 1'000'000, 1'000'000) == Liveness::Alive);
  CHECK(keepalive_check(0, 1'000'001, 1'000'000) == Liveness::Dead);
  CHECK(keepalive_check(500, 500, 1'000'000) == Liveness::Alive);
  CHECK(to_string(Liveness::Dead) == "DEAD");
  CHECK_THROWS_AS(keepalive_check(0, 1, 0), InvalidArgument);
}

TEST_CASE("tpc_update examples") {
  const PowerLimits lim{-10.0, 20.0};
  CHECK(tpc_update(10.0, 26.0, 20.0, lim, 3.0) == doctest::Approx(7.0));
  CHECK(tpc_update(10.0, 20.0, 20.0, lim, 3.0) == 10.0);
  CHECK(tpc_update(-10.0, 30.0, 20.0, lim, 3.0) == -10.0);
  CHECK(tpc_update(19.0, 10.0, 20.0, lim, 3.0) == 20.0);
  CHECK(tpc_update(0.0, 19.0, 20.0, lim, 3.0) == doctest::Approx(1.0));
  CHECK_THROWS_AS(tpc_update(25.0, 20.0, 20.0, lim), InvalidArgument);
}

TEST_CASE("tpc convergence on a static link") {
  for (double err : {-14.0, -9.0, -3.5, 0.0, 2.0, 9.0, 13.0}) {
    double power = 5.0;
    double rsni = 20.0 + err;
    const int bound = static_cast<int>(std::ceil(std::abs(err) / 3.0)) + 1;
    const auto expected = oracle::tpc_trajectory(power, rsni, 20.0, 3.0, -30.0, 30.0, bound);
    int rounds = 0;
    double prev_error = err;
    while (std::abs(rsni - 20.0) >= 3.0 && rounds < 50) {
      const double next = tpc_update(power, rsni, 20.0, {-30.0, 30.0}, 3.0);
      rsni += next - power;
      power = next;
      ++rounds;
      CHECK(power == doctest::Approx(expected[rounds]));
      // Error shrinks monotonically and never changes sign by more than a step.
      CHECK(std::abs(rsni - 20.0) <= std::abs(prev_error));
      prev_error = rsni - 20.0;
    }
    CHECK(rounds <= bound);
    const double settled = tpc_update(power, rsni, 20.0, {-30.0, 30.0}, 3.0);
    CHECK(std::abs(settled + rsni - power - 20.0) <= 1e-9);
  }
}

TEST_CASE("tpc never leaves the limits") {
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> u(-40.0, 40.0);
  std::uniform_real_distribution<double> step(0.1, 10.0);
  for (int i = 0; i < 5000; ++i) {
    double lo = u(rng);
    double hi = u(rng);
    if (lo > hi) std::swap(lo, hi);
    const double current = std::uniform_real_distribution<double>(lo, hi)(rng);
    const double next = tpc_update(current, u(rng), u(rng), {lo, hi}, step(rng));
    CHECK(next >= lo);
    CHECK(next <= hi);
  }
}

TEST_CASE("advance_clock") {
  const ClockModel c{0.0, 10.0, SyncQuality::GlobalSync};
  const auto one_second = advance_clock(c, 1'000'000, 100.0);
  CHECK(one_second.offset_us == doctest::Approx(10.0));
  CHECK(one_second.quality == SyncQuality::GlobalSync);

  const ClockModel still{3.0, 0.0, SyncQuality::GlobalSync};
  CHECK(advance_clock(still, 5'000'000, 5.0) == still);

  const auto drifted = advance_clock(c, 200'000, 1.0);
  CHECK(drifted.offset_us == doctest::Approx(2.0));
  CHECK(drifted.quality == SyncQuality::Holdover);
  CHECK(resync_clock(drifted) == ClockModel{0.0, 10.0, SyncQuality::GlobalSync});
  CHECK_THROWS_AS(advance_clock(c, -1), InvalidArgument);

  ClockModel walk{0.0, -3.0, SyncQuality::GlobalSync};
  double last = 0.0;
  for (int i = 0; i < 100; ++i) {
    walk = advance_clock(walk, 7'919, 1e9);
    CHECK(std::abs(walk.offset_us) >= last);
    last = std::abs(walk.offset_us);
  }
}
