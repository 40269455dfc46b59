// Acceptance suite: one PASS/FAIL line per criterion, non-zero exit on any FAIL.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "fixtures.hpp"
#include "fwa/controller.hpp"
#include "fwa/errors.hpp"
#include "fwa/link_maintenance.hpp"
#include "fwa/scenario.hpp"
#include "fwa/sim_engine.hpp"
#include "fwa/tdd_beamforming.hpp"
#include "fwa/tdd_schedule.hpp"
#include "oracles.hpp"

using namespace fwa;
namespace fs = std::filesystem;
using Json = nlohmann::ordered_json;

namespace {

struct Verdict {
  bool pass = true;
  std::string detail;
};

/// Collects failures; the first few are kept for the report line.
class Check {
 public:
  void expect(bool ok, const std::string& what) {
    if (ok) return;
    ++failures_;
    if (failures_ <= 3) notes_.push_back(what);
  }
  void note(const std::string& s) { info_.push_back(s); }
  Verdict verdict() const {
    std::string d;
    for (const auto& s : info_) d += (d.empty() ? "" : "; ") + s;
    for (const auto& s : notes_) d += (d.empty() ? "" : "; ") + std::string("failed: ") + s;
    if (failures_ > 3) d += "; +" + std::to_string(failures_ - 3) + " more";
    return {failures_ == 0, d};
  }

 private:
  int failures_ = 0;
  std::vector<std::string> notes_;
  std::vector<std::string> info_;
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(double v, int precision = 3) {
  std::ostringstream os;
  os.precision(precision);
  os << v;
  return os.str();
}

NodeModel make_node(const std::string& id, Position p, Codebook cb, Role role = Role::CnSta) {
  return {NodeId(id), role, p, std::move(cb)};
}

WorldConfig pair_world(double distance_m) {
  WorldConfig cfg;
  cfg.seed = 3;
  cfg.nodes.push_back(make_node("ap", {0, 0}, Codebook::uniform(16, 25.0, -5.0), Role::DnAp));
  cfg.nodes.push_back(make_node("sta", {distance_m, 0}, Codebook::uniform(16, 25.0, -5.0)));
  cfg.beamforming.push_back({BeamformingMode::Individual, NodeId("ap"), {NodeId("sta")}, {}});
  cfg.beacon_interval_us = 25'600;
  return cfg;
}

/// Runs `cfg` for `data_us` of data phase, keeping trace records.
struct Run {
  Metrics metrics;
  std::vector<Json> records;
  GlobalSchedule plan;
  TimeUs data_start = 0;
};

Run simulate(const WorldConfig& cfg, TimeUs data_us) {
  TraceSink sink;
  sink.keep_records(true);
  World world(cfg, &sink);
  world.prepare();
  Run r;
  r.data_start = world.data_start_us();
  r.metrics = world.run_until(r.data_start + data_us);
  r.records = sink.records();
  r.plan = world.plan();
  return r;
}

/// Every absolute slot of the planned schedule up to `t_end`.
std::vector<AbsoluteSlot> planned_slots(const GlobalSchedule& plan, TimeUs bi_us, TimeUs t_end) {
  std::vector<AbsoluteSlot> out;
  for (TimeUs bi = 0; bi * bi_us < t_end + bi_us; ++bi) {
    for (const auto& ap : plan.aps) {
      const auto s = expand_sp(ap.entry, ap.structure, ap.schedule, bi * bi_us);
      out.insert(out.end(), s.begin(), s.end());
    }
  }
  return out;
}

// ---- 1 ----------------------------------------------------------------------

Verdict slot_grid() {
  Check c;
  const auto t0 = std::chrono::steady_clock::now();
  const ExtendedScheduleEntry sp{1, 0, 25'600, true};
  validate_extended_schedule(std::span(&sp, 1), 300'000);
  const auto s = default_slot_structure(1);
  const auto slots = expand_sp(sp, s, {1, {}}, 0);
  std::set<int> intervals;
  for (const auto& slot : slots) intervals.insert(slot.interval_index);
  c.expect(slots.size() == 384, "slot count " + std::to_string(slots.size()));
  c.expect(intervals.size() == 16, "interval count " + std::to_string(intervals.size()));
  c.expect(s.slots.size() == 24 && s.slots[0].duration_us == 66 && s.interval_duration_us == 1600,
           "default structure");
  const double secs = seconds_since(t0);
  c.expect(secs < 1.0, "runtime " + fmt(secs) + " s");
  c.note(std::to_string(slots.size()) + " slots in " + std::to_string(intervals.size()) + " intervals, " +
         fmt(secs * 1e3) + " ms");
  return c.verdict();
}

// ---- 2 ----------------------------------------------------------------------

Verdict beamforming_oracle() {
  Check c;
  const auto t0 = std::chrono::steady_clock::now();
  std::mt19937_64 rng(20240101);
  std::uniform_int_distribution<int> sectors(4, 16);
  std::uniform_real_distribution<double> angle(0.0, 360.0);
  std::uniform_real_distribution<double> range(10.0, 250.0);
  const ChannelModel ch;
  int cases = 0, exact = 0;
  while (cases < 200) {
    const double bearing = angle(rng) * std::numbers::pi / 180.0;
    const double d = range(rng);
    std::vector<NodeModel> nodes{
        make_node("i", {0, 0}, Codebook::uniform(sectors(rng), 24.0, -6.0, 360.0, angle(rng)), Role::DnAp),
        make_node("r", {d * std::cos(bearing), d * std::sin(bearing)},
                  Codebook::uniform(sectors(rng), 24.0, -6.0, 360.0, angle(rng)))};
    const auto best = oracle::brute_force_best(nodes[0], nodes[1]);
    if (best.snr < 1.0) continue;
    ++cases;
    BeamformingRequest req{BeamformingMode::Individual, NodeId("i"), {NodeId("r")}};
    const auto result = run_beamforming(req, nodes, ch);
    const bool ok = result.links.size() == 1 && result.links[0].initiator_sector == best.tx &&
                    result.links[0].responder_sector == best.rx;
    exact += ok;
    c.expect(ok, "case " + std::to_string(cases));
  }
  const double secs = seconds_since(t0);
  c.expect(secs < 30.0, "runtime " + fmt(secs) + " s");
  c.note(std::to_string(exact) + "/" + std::to_string(cases) + " exact, " + fmt(secs) + " s");
  return c.verdict();
}

// ---- 3 ----------------------------------------------------------------------

Verdict group_and_measurement() {
  Check c;
  std::vector<NodeModel> nodes{make_node("i", {0, 0}, Codebook::uniform(12, 25.0, -5.0), Role::DnAp),
                               make_node("a", {90, 20}, Codebook::uniform(8, 22.0, -5.0)),
                               make_node("b", {-60, 80}, Codebook::uniform(8, 22.0, -5.0)),
                               make_node("c", {10, -140}, Codebook::uniform(6, 22.0, -5.0))};
  const ChannelModel ch;
  const std::vector<NodeId> responders{NodeId("a"), NodeId("b"), NodeId("c")};

  TraceSink group_trace;
  group_trace.keep_records(true);
  const auto group = run_beamforming({BeamformingMode::Group, NodeId("i"), responders}, nodes, ch,
                                     McsTable::default_table(), FrameSizes{}, &group_trace);
  std::set<std::string> decoded;
  std::vector<std::pair<TimeUs, TimeUs>> feedback;
  for (const auto& rec : group_trace.records()) {
    if (rec["kind"] == "frame_rx_complete" && rec["outcome"] == "decoded" && rec["frame"]["type"] == "TddSsw") {
      decoded.insert(rec["node"].get<std::string>());
    }
    if (rec["kind"] == "frame_tx_start" && rec["frame"]["type"] == "TddSswFeedback") {
      const TimeUs t = rec["t"].get<TimeUs>();
      feedback.emplace_back(t, t + airtime_us(rec["frame"]["bits"].get<std::int64_t>(), 385e6));
    }
  }
  std::set<std::string> trained;
  for (const auto& l : group.links) trained.insert(l.responder_id.str());
  c.expect(trained == decoded, "trained set differs from decoding responders");
  c.expect(decoded.size() == 3, "only " + std::to_string(decoded.size()) + " responders decoded");
  std::sort(feedback.begin(), feedback.end());
  int overlaps = 0;
  for (std::size_t k = 1; k < feedback.size(); ++k) overlaps += feedback[k].first < feedback[k - 1].second;
  c.expect(overlaps == 0, std::to_string(overlaps) + " overlapping feedback transmissions");

  TraceSink m_trace;
  m_trace.keep_records(true);
  const auto meas = run_beamforming({BeamformingMode::Measurement, NodeId("i"), responders}, nodes, ch,
                                    McsTable::default_table(), FrameSizes{}, &m_trace);
  int responder_tx = 0, acks = 0;
  for (const auto& rec : m_trace.records()) {
    if (rec["kind"] != "frame_tx_start") continue;
    responder_tx += rec["node"] != "i";
    acks += rec["frame"]["type"] == "TddSswAck";
  }
  c.expect(responder_tx == 0 && meas.responder_transmissions == 0, "responders transmitted");
  c.expect(acks == 0, "SSW Ack sent in measurement mode");
  c.expect(meas.reports.size() == 3, "reports " + std::to_string(meas.reports.size()));
  c.note(std::to_string(group.links.size()) + " links, " + std::to_string(feedback.size()) +
         " feedback frames, 0 overlaps; measurement: " + std::to_string(responder_tx) + " responder tx, " +
         std::to_string(acks) + " acks");
  return c.verdict();
}

// ---- 4 ----------------------------------------------------------------------

Verdict delayed_ack() {
  Check c;
  WorldConfig cfg = pair_world(100.0);
  cfg.nodes.push_back(make_node("sta2", {-70, 60}, Codebook::uniform(16, 25.0, -5.0)));
  cfg.beamforming[0] = {BeamformingMode::Group, NodeId("ap"), {NodeId("sta"), NodeId("sta2")}, {}};
  cfg.structure = fixtures::grid_with_basic({0, 6, 12, 18}).structure;
  cfg.flows.push_back({NodeId("ap"), NodeId("sta"), Direction::Downlink, TrafficKind::Saturated});
  cfg.flows.push_back({NodeId("ap"), NodeId("sta2"), Direction::Downlink, TrafficKind::Saturated});
  const auto r = simulate(cfg, 100'000);
  c.expect(r.plan.starved().empty(), "starved link in plan");
  const auto slots = planned_slots(r.plan, cfg.beacon_interval_us, r.metrics.end_us);

  // Receptions not yet covered by a BlockAck, per receiver.
  std::map<std::string, std::optional<TimeUs>> first_pending;
  int acks = 0, on_time = 0;
  for (const auto& rec : r.records) {
    if (rec["t"].get<TimeUs>() < r.data_start) continue;
    const auto& f = rec["frame"];
    if (f.is_null()) continue;
    const auto type = f.value("type", "");
    const auto node = rec["node"].get<std::string>();
    if (rec["kind"] == "frame_rx_complete" && type == "Data" && rec["outcome"] == "decoded") {
      if (!first_pending[node]) first_pending[node] = rec["t"].get<TimeUs>();
    }
    if (rec["kind"] == "frame_tx_start" && (type == "BlockAck" || type == "Ack")) {
      ++acks;
      const TimeUs t = rec["t"].get<TimeUs>();
      const auto& pending = first_pending[node];
      if (!pending) {
        c.expect(false, "BlockAck at " + std::to_string(t) + " with nothing pending");
        continue;
      }
      const auto expected = oracle::first_basic_tx(slots, NodeId(node), *pending);
      const bool ok = expected && expected->start_us == t;
      on_time += ok;
      c.expect(ok, "BlockAck at " + std::to_string(t) + " expected " +
                       (expected ? std::to_string(expected->start_us) : std::string("none")));
      first_pending[node].reset();
    }
  }
  TimeUs worst = 0;
  for (const auto& l : r.metrics.links) {
    for (TimeUs d : l.ack_delay_us) worst = std::max(worst, d);
  }
  c.expect(acks > 100, "only " + std::to_string(acks) + " BlockAcks");
  c.expect(worst <= cfg.structure.interval_duration_us, "ack delay " + std::to_string(worst) + " us");
  c.note(std::to_string(on_time) + "/" + std::to_string(acks) + " BlockAcks at the earliest Basic tx slot, max delay " +
         std::to_string(worst) + " us");
  return c.verdict();
}

// ---- 5 ----------------------------------------------------------------------

Verdict throughput() {
  Check c;
  const auto cfg = load_config(std::string(FWA_SCENARIO_DIR) + "/two_node_dl.yaml");
  World world(cfg.world);
  world.prepare();
  const auto m = world.run_until(world.data_start_us() + cfg.duration_us);
  const auto& w = cfg.world;
  const auto* l = m.link({NodeId("dn1"), NodeId("cn1")});
  if (l == nullptr) return {false, "no link metrics"};
  const auto& trained = world.training().at(0).links;
  c.expect(!trained.empty() && trained[0].snr_db >= 18.0, "trained SNR below 18 dB");
  const auto* grant = world.plan().grant(l->link);
  int data_slots = grant != nullptr ? static_cast<int>(grant->data_slots.size()) : 0;
  TimeUs data_us = 0;
  for (int s : grant->data_slots) data_us += w.structure.slots[s].duration_us;
  const double f = static_cast<double>(data_us) / static_cast<double>(w.structure.interval_duration_us) *
                   static_cast<double>(w.data_sp.duration_us) / static_cast<double>(w.beacon_interval_us);
  const double payload = w.sizes.data_payload_bytes;
  const double target = f * 4620e6 * payload / (payload + w.sizes.data_overhead_bytes);
  const double seconds = static_cast<double>(cfg.duration_us) / 1e6;
  const double goodput = static_cast<double>(l->goodput_bits) / seconds;
  const double err = goodput / target - 1.0;
  c.expect(std::abs(err) <= 0.02, "deviation " + fmt(err * 100.0) + "%");
  c.expect(f >= 0.90, "DATA fraction " + fmt(f));
  c.expect(goodput > 4e9, "goodput below 4 Gbps");
  c.note("f=" + fmt(f, 4) + " (" + std::to_string(data_slots) + " slots), goodput " + fmt(goodput / 1e9, 4) +
         " Gbps vs " + fmt(target / 1e9, 4) + " Gbps analytic (" + fmt(err * 100.0, 2) + "%)");
  return c.verdict();
}

// ---- 6 ----------------------------------------------------------------------

/// Replays a CBR source against the planned DATA slots. Everything queued
/// when the radio is free goes out as one PPDU, cut at the window edge, and
/// each MPDU completes with the PPDU that carries its last bit.
std::vector<TimeUs> predicted_latencies(const std::vector<AbsoluteSlot>& slots, const NodeId& sta, TimeUs first,
                                        TimeUs period_us, TimeUs end, TimeUs guard, std::int64_t bits,
                                        std::int64_t rate_mbps) {
  std::vector<const AbsoluteSlot*> data;
  for (const auto& s : slots) {
    if (s.category == SlotCategory::Data && s.assignee == sta && s.direction == Direction::Downlink) {
      data.push_back(&s);
    }
  }
  std::sort(data.begin(), data.end(), [](auto* a, auto* b) { return a->start_us < b->start_us; });
  std::vector<TimeUs> arrivals;
  for (TimeUs a = first; a < end; a += period_us) arrivals.push_back(a);

  std::vector<TimeUs> out;
  std::size_t head = 0;       // oldest MPDU not yet complete
  std::int64_t head_sent = 0;  // bits of it already on air
  TimeUs radio_free = 0;
  for (const auto* s : data) {
    const TimeUs close = s->start_us + s->duration_us - guard;
    TimeUs t = std::max(s->start_us, radio_free);
    while (head < arrivals.size() && t < close) {
      if (arrivals[head] > t) {
        t = arrivals[head];
        continue;
      }
      std::size_t last = head;
      while (last < arrivals.size() && arrivals[last] <= t) ++last;
      std::int64_t want = static_cast<std::int64_t>(last - head) * bits - head_sent;
      const std::int64_t cap = (close - t) * rate_mbps;
      const std::int64_t sent = std::min(want, cap);
      const TimeUs done = t + (sent + rate_mbps - 1) / rate_mbps;
      std::int64_t covered = head_sent + sent;
      while (covered >= bits && head < last) {
        if (done <= end) out.push_back(done - arrivals[head]);
        covered -= bits;
        ++head;
      }
      head_sent = covered;
      t = done;
    }
    radio_free = t;
    if (head >= arrivals.size()) break;
  }
  return out;
}

Verdict latency() {
  Check c;
  auto trickle = [](TddSlotStructure structure) {
    WorldConfig cfg = pair_world(100.0);
    cfg.structure = std::move(structure);
    cfg.flows.push_back({NodeId("ap"), NodeId("sta"), Direction::Downlink, TrafficKind::Cbr, 1e6, 0, 0});
    return cfg;
  };
  // Per SP: one DATA slot in a single 25.6 ms interval.
  const auto per_sp = trickle({1, 25'600, {{0, 66, SlotCategory::Basic}, {66, 66, SlotCategory::Basic},
                                           {132, 66, SlotCategory::Data}}});
  // Per interval: one DATA slot every 1.6 ms.
  const auto per_interval = trickle({1, 1'600, {{0, 66, SlotCategory::Basic}, {66, 66, SlotCategory::Basic},
                                                {132, 66, SlotCategory::Data}}});
  std::string notes;
  for (const auto* cfg : {&per_sp, &per_interval}) {
    const TimeUs run_us = 300'000;
    const auto r = simulate(*cfg, run_us);
    const auto* l = r.metrics.link({NodeId("ap"), NodeId("sta")});
    if (l == nullptr || l->latency_us.empty()) return {false, "no deliveries"};
    const std::int64_t bits = (cfg->sizes.data_payload_bytes + cfg->sizes.data_overhead_bytes) * 8;
    const auto predicted = predicted_latencies(
        planned_slots(r.plan, cfg->beacon_interval_us, r.metrics.end_us), NodeId("sta"), r.data_start,
        static_cast<TimeUs>(cfg->sizes.data_payload_bytes * 8), r.data_start + run_us, cfg->slot_guard_us, bits, 4620);
    c.expect(predicted == l->latency_us, "measured latencies differ from the slot-wait oracle");

    const TimeUs worst = *std::max_element(l->latency_us.begin(), l->latency_us.end());
    const TimeUs airtime = airtime_us(bits, 4620e6);
    if (cfg == &per_sp) {
      c.expect(worst <= 25'600, "per-SP max latency " + std::to_string(worst) + " us");
      notes += "per-SP max " + std::to_string(worst) + " us";
    } else {
      c.expect(worst <= cfg->structure.interval_duration_us + airtime,
               "per-interval max latency " + std::to_string(worst) + " us");
      c.expect(worst <= 15'000, "15 ms per-hop check");
      notes += ", per-interval max " + std::to_string(worst) + " us";
    }
    notes += " (" + std::to_string(l->latency_us.size()) + " MPDUs, oracle " +
             (predicted == l->latency_us ? "exact" : "mismatch") + ")";
  }
  c.note(notes);
  return c.verdict();
}

// ---- 7 ----------------------------------------------------------------------

Verdict controller_closed_loop() {
  Check c;
  std::mt19937_64 rng(77);
  const ChannelModel ch;
  const auto grid = fixtures::grid_with_basic({0, 1, 2, 3, 4, 5, 12, 13, 14, 15, 16, 17});
  int clean = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const auto d = fixtures::random_deployment(rng, 12);
    const auto g = build_interference_graph(d.nodes, d.links, {}, ch);
    const auto plan = assign_slots(g, d.demands, grid);
    const auto v = verify_global(plan, g);
    clean += v.empty();
    c.expect(v.empty(), "topology " + std::to_string(trial) + ": " + (v.empty() ? "" : v.front().kind));
  }

  int small = 0, matched = 0;
  const auto small_grid = fixtures::grid_with_basic({0, 1, 2, 3, 12, 13, 14, 15});
  for (int trial = 0; trial < 200; ++trial) {
    auto rc = fixtures::random_synthetic(rng, std::uniform_int_distribution<int>(1, 4)(rng), 0.3);
    const auto plan = assign_slots(rc.graph, rc.demands, small_grid);
    std::vector<std::vector<bool>> adj(rc.graph.size(), std::vector<bool>(rc.graph.size()));
    for (int i = 0; i < rc.graph.size(); ++i) {
      for (int j = 0; j < rc.graph.size(); ++j) adj[i][j] = rc.graph.adjacent(i, j);
    }
    const auto sets = oracle::independent_sets(adj);
    const std::set<std::uint32_t> independent(sets.begin(), sets.end());
    bool all = true;
    for (int s = 0; s < 24; ++s) all &= independent.contains(fixtures::slot_mask(plan, rc.graph, s));
    ++small;
    matched += all;
    c.expect(all, "instance " + std::to_string(trial) + " has a dependent slot set");
  }

  // Two links 1 km apart, each aimed away from the other.
  using fixtures::node;
  std::vector<NodeModel> nodes{node("ap0", {0, 0}, Role::DnAp), node("sta0", {-100, 0}, Role::CnSta),
                               node("ap1", {1000, 0}, Role::DnAp), node("sta1", {1100, 0}, Role::CnSta)};
  std::vector<TrainedLink> links{fixtures::train(nodes[0], nodes[1]), fixtures::train(nodes[2], nodes[3])};
  const std::vector<DemandSpec> demands{{NodeId("ap0"), NodeId("sta0"), Direction::Downlink, 0.0, true},
                                        {NodeId("ap1"), NodeId("sta1"), Direction::Downlink, 0.0, true}};
  const auto g = build_interference_graph(nodes, links, {}, ch);
  const double both = assign_slots(g, demands, fixtures::default_grid()).total_granted_bps();
  const double one =
      assign_slots(g, std::span(demands.data(), 1), fixtures::default_grid()).total_granted_bps();
  const double reuse = both / one;
  c.expect(reuse >= 1.9, "reuse " + fmt(reuse));
  c.note(std::to_string(clean) + "/200 verified, " + std::to_string(matched) + "/" + std::to_string(small) +
         " independent-set matches, reuse " + fmt(reuse) + "x");
  return c.verdict();
}

// ---- 8 ----------------------------------------------------------------------

Verdict periodic_measurement() {
  Check c;
  WorldConfig cfg = pair_world(100.0);
  // Uplink trickle so the STA's Basic slot carries no BlockAck.
  cfg.flows.push_back({NodeId("ap"), NodeId("sta"), Direction::Uplink, TrafficKind::Cbr, 1e6, 0, 0});
  cfg.measurements.push_back({NodeId("ap"), NodeId("sta"), {10'000, 100'000, 3}});
  const auto r = simulate(cfg, 400'000);
  const auto slots = planned_slots(r.plan, cfg.beacon_interval_us, r.metrics.end_us);
  std::vector<TimeUs> expected;
  for (int k = 0; k < 3; ++k) {
    const TimeUs from = r.data_start + 10'000 + k * 100'000;
    const auto s = oracle::first_basic_tx(slots, NodeId("sta"), from - 1);
    if (s && s->start_us < from + 100'000) expected.push_back(s->start_us);
  }
  std::vector<TimeUs> reports, requests;
  for (const auto& rec : r.records) {
    if (rec["kind"] != "frame_tx_start" || rec["outcome"] != "sent") continue;
    const auto type = rec["frame"]["type"];
    if (type == "LinkMeasurementReport") reports.push_back(rec["t"].get<TimeUs>());
    if (type == "LinkMeasurementRequest") requests.push_back(rec["t"].get<TimeUs>());
  }
  c.expect(reports.size() == 3, std::to_string(reports.size()) + " reports");
  c.expect(reports == expected, "report times differ from the slot-aligned oracle");
  int between = 0;
  if (!reports.empty()) {
    for (TimeUs t : requests) between += t > reports.front() && t < reports.back();
  }
  c.expect(between == 0, std::to_string(between) + " requests between reports");
  c.expect(requests.size() == 1, std::to_string(requests.size()) + " requests in total");
  std::string times;
  for (TimeUs t : reports) times += (times.empty() ? "" : ", ") + std::to_string(t - r.data_start);
  c.note("reports at +[" + times + "] us, " + std::to_string(between) + " requests between");
  return c.verdict();
}

// ---- 9 ----------------------------------------------------------------------

Verdict tpc() {
  Check c;
  WorldConfig cfg = pair_world(100.0);
  cfg.flows.push_back({NodeId("ap"), NodeId("sta"), Direction::Downlink, TrafficKind::Cbr, 1e6, 0, 0});
  // Train first to learn the static SNR, then aim 9 dB below it.
  double snr = 0.0;
  {
    World probe(cfg);
    probe.prepare();
    snr = probe.training().at(0).links.at(0).snr_db;
  }
  cfg.maintenance.tpc_enabled = true;
  cfg.maintenance.tpc_max_step_db = 3.0;
  cfg.maintenance.tpc_target_rsni_db = snr - 9.0;
  cfg.measurements.push_back({NodeId("ap"), NodeId("sta"), {5'000, 10'000, 8}});
  const auto r = simulate(cfg, 100'000);
  const auto& ups = r.metrics.tpc_updates;
  int needed = -1;
  for (std::size_t k = 0; k < r.metrics.reports.size(); ++k) {
    if (std::abs(r.metrics.reports[k].rsni_db - cfg.maintenance.tpc_target_rsni_db) < 3.0) {
      needed = static_cast<int>(k);  // updates applied before this report
      break;
    }
  }
  c.expect(std::abs(r.metrics.reports.at(0).rsni_db - cfg.maintenance.tpc_target_rsni_db - 9.0) < 1e-9,
           "initial error is not 9 dB");
  c.expect(needed >= 0 && needed <= 4, "updates to converge: " + std::to_string(needed));
  const auto& lim = cfg.nodes[0].power_limits;
  for (const auto& u : ups) c.expect(u.after_dbm >= lim.min_dbm && u.after_dbm <= lim.max_dbm, "engine limit");

  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(-40.0, 40.0);
  int violations = 0;
  for (int i = 0; i < 100'000; ++i) {
    double lo = u(rng), hi = u(rng);
    if (lo > hi) std::swap(lo, hi);
    double p = std::uniform_real_distribution<double>(lo, hi)(rng);
    for (int k = 0; k < 5; ++k) {
      p = tpc_update(p, u(rng), u(rng), {lo, hi}, 3.0);
      violations += p < lo || p > hi;
    }
  }
  c.expect(violations == 0, std::to_string(violations) + " limit violations");
  c.note("converged after " + std::to_string(needed) + " updates; 500000 fuzzed updates, " +
         std::to_string(violations) + " limit violations");
  return c.verdict();
}

// ---- 10 ---------------------------------------------------------------------

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

Verdict determinism() {
  Check c;
  const auto dir = fs::temp_directory_path() / "fwa_acceptance";
  fs::create_directories(dir);
  std::vector<fs::path> fixtures_found;
  for (const auto& e : fs::directory_iterator(FWA_SCENARIO_DIR)) {
    if (e.path().extension() == ".yaml") fixtures_found.push_back(e.path());
  }
  std::sort(fixtures_found.begin(), fixtures_found.end());
  int compared = 0;
  for (const auto& p : fixtures_found) {
    ScenarioConfig cfg;
    try {
      cfg = load_config(p.string());
    } catch (const ConfigError&) {
      continue;  // deliberately broken fixtures
    }
    std::string traces[2];
    for (int k = 0; k < 2; ++k) {
      cfg.trace_path = (dir / (p.stem().string() + "." + std::to_string(k) + ".jsonl")).string();
      cfg.metrics_path.clear();
      const auto outcome = run_scenario(cfg);
      c.expect(outcome.exit_code == kExitOk || outcome.exit_code == kExitInfeasible,
               p.filename().string() + " exit " + std::to_string(outcome.exit_code));
      traces[k] = slurp(cfg.trace_path);
    }
    c.expect(traces[0] == traces[1], p.filename().string() + " traces differ");
    c.expect(!traces[0].empty(), p.filename().string() + " produced no trace");
    ++compared;
  }
  c.expect(compared >= 2, "too few fixtures");
  c.note(std::to_string(compared) + " fixtures byte-identical across two runs");
  return c.verdict();
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Verdict()>>> criteria{
      {"slot grid: 16 intervals x 24 slots per SP", slot_grid},
      {"beamforming matches the exhaustive argmax", beamforming_oracle},
      {"group feedback never overlaps; measurement mode is silent", group_and_measurement},
      {"BlockAcks start at the earliest Basic tx slot", delayed_ack},
      {"saturated goodput within 2% of the slot-fraction bound", throughput},
      {"trickle latency bounds and slot-wait oracle", latency},
      {"controller plans verify; slot sets are independent; reuse", controller_closed_loop},
      {"periodic reports land on slot-aligned times", periodic_measurement},
      {"TPC converges within 4 updates and respects limits", tpc},
      {"same seed gives byte-identical traces", determinism},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Verdict v;
    try {
      v = criteria[i].second();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    failed += !v.pass;
    std::cout << (v.pass ? "PASS" : "FAIL") << " " << (i + 1) << " " << criteria[i].first << " -- " << v.detail
              << std::endl;
  }
  return failed == 0 ? 0 : 1;
}
