#include "fwa/sim_engine.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <random>
#include <set>

#include "fwa/errors.hpp"

namespace fwa {

std::string to_string(TrafficKind kind) {
  switch (kind) {
    case TrafficKind::Saturated: return "saturated";
    case TrafficKind::Cbr: return "cbr";
    case TrafficKind::Poisson: return "poisson";
  }
  return "?";
}

TrafficKind traffic_kind_from_string(const std::string& text) {
  if (text == "saturated") return TrafficKind::Saturated;
  if (text == "cbr") return TrafficKind::Cbr;
  if (text == "poisson") return TrafficKind::Poisson;
  throw InvalidArgument("unknown traffic kind '" + text + "'");
}

const LinkMetrics* Metrics::link(const LinkId& id) const {
  for (const auto& l : links) {
    if (l.link == id) return &l;
  }
  return nullptr;
}

void validate(const WorldConfig& cfg) {
  std::set<NodeId> ids;
  for (const auto& n : cfg.nodes) {
    validate_node(n);
    if (!ids.insert(n.id).second) throw InvalidArgument("duplicate node id " + n.id.str());
  }
  auto known = [&](const NodeId& id, const std::string& where) {
    if (!ids.contains(id)) throw InvalidArgument(where + ": unknown node '" + id.str() + "'");
  };
  validate(cfg.link_budget);
  if (cfg.beacon_interval_us <= 0) throw InvalidArgument("beacon interval must be positive");
  validate_extended_schedule(std::span(&cfg.data_sp, 1), cfg.beacon_interval_us);
  if (!cfg.data_sp.is_tdd) throw InvalidArgument("data SP must be a TDD SP");
  if (cfg.structure.allocation_id != cfg.data_sp.allocation_id) {
    throw InvalidArgument("slot structure allocation does not match the data SP");
  }
  if (cfg.structure.interval_duration_us <= 0 ||
      cfg.data_sp.duration_us % cfg.structure.interval_duration_us != 0) {
    throw StructureError("data SP is not a whole number of TDD intervals");
  }
  for (const auto& v : validate_schedule(cfg.structure, {cfg.structure.allocation_id, {}})) {
    throw StructureError("slot structure: " + to_string(v.kind) + " " + v.detail);
  }
  for (const auto& s : cfg.structure.slots) {
    if (cfg.slot_guard_us < 0 || cfg.slot_guard_us >= s.duration_us) {
      throw InvalidArgument("slot guard must be shorter than every slot");
    }
  }
  if (cfg.training_window_us <= 0) throw InvalidArgument("training window must be positive");
  for (const auto& run : cfg.beamforming) {
    known(run.initiator, "beamforming");
    for (const auto& r : run.responders) known(r, "beamforming");
  }
  std::set<LinkId> flow_links;
  for (const auto& f : cfg.flows) {
    known(f.ap, "flow");
    known(f.sta, "flow");
    if (f.ap == f.sta) throw InvalidArgument("flow endpoints must differ");
    if (f.traffic != TrafficKind::Saturated && !(f.rate_bps > 0.0)) {
      throw InvalidArgument("flow " + f.link().str() + " needs a positive rate");
    }
    if (f.start_us < 0) throw InvalidArgument("flow start must not be negative");
    if (!flow_links.insert(f.link()).second) {
      throw InvalidArgument("two flows on link " + f.link().str());
    }
  }
  for (const auto& m : cfg.measurements) {
    known(m.requester, "measurement");
    known(m.responder, "measurement");
    validate(m.request);
  }
  for (const auto& e : cfg.events) {
    known(e.a, "event");
    known(e.b, "event");
    if (e.at_us < 0) throw InvalidArgument("event time must not be negative");
  }
  const auto& mc = cfg.maintenance;
  if (mc.keepalive_period_us <= 0 || mc.keepalive_timeout_us <= 0) {
    throw InvalidArgument("keep-alive period and timeout must be positive");
  }
  if (mc.tpc_max_step_db <= 0.0) throw InvalidArgument("TPC step must be positive");
  if (mc.resync_period_us < 0 || mc.bandwidth_request_period_us < 0) {
    throw InvalidArgument("maintenance periods must not be negative");
  }
  if (cfg.sizes.data_payload_bytes <= 0 || cfg.sizes.data_overhead_bytes < 0) {
    throw InvalidArgument("data frame sizes must be positive");
  }
}

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};

LinkId reverse(const LinkId& id) { return {id.rx, id.tx}; }

struct Mpdu {
  std::uint64_t seq = 0;
  std::int64_t bits = 0;
  std::int64_t sent_bits = 0;
  TimeUs eligible_us = 0;
  int traffic_id = 0;
  bool retried = false;
};

struct RxMpdu {
  std::map<std::int64_t, std::int64_t> fragments;
  std::int64_t received_bits = 0;
  bool done = false;
};

struct LinkRt {
  LinkId id;
  NodeId ap;
  NodeId sta;
  Direction direction = Direction::Downlink;
  int tx_sector = 0;
  int rx_sector = 0;
  double tx_power_dbm = 0.0;
  bool alive = true;

  // Sender side.
  const FlowSpec* flow = nullptr;
  std::deque<Mpdu> queue;
  std::map<std::uint64_t, Mpdu> in_flight;
  std::uint64_t next_seq = 0;
  std::int64_t arrivals = 0;
  double poisson_clock_us = 0.0;
  TimeUs window_end_us = 0;
  SlotCategory window_category = SlotCategory::Basic;
  int window_slot = -1;
  bool wake_pending = false;

  // Receiver side of this link's data.
  std::map<std::uint64_t, RxMpdu> rx;
  std::vector<std::uint64_t> completed_unacked;
  std::uint64_t highest_seen = 0;

  // Control frames this link's transmitter sends.
  std::optional<TimeUs> block_ack_due;
  std::vector<TimeUs> awaiting_ack_since;
  std::deque<TddFrame> mgmt;
  std::vector<TimeUs> report_due;
  std::uint32_t report_seq = 0;

  LinkMetrics m;
};

struct SlotEv {
  std::int64_t bi = 0;
  int k = 0;
};
struct TxEv {
  LinkId link;
  TddFrame frame;
  double rate_bps = 0.0;
};
struct RxEv {
  std::uint64_t tx_id = 0;
};
struct ArrivalEv {
  LinkId link;
};
struct WakeEv {
  LinkId link;
};
enum class TickKind { KeepAlive, BandwidthRequest, Resync };
struct TickEv {
  TickKind kind = TickKind::KeepAlive;
};
struct LossEv {
  std::size_t index = 0;
};
struct ReplanEv {};
struct NoticeEv {
  NodeId node;
  std::string outcome;
  nlohmann::ordered_json detail;
};
using Ev = std::variant<SlotEv, TxEv, RxEv, ArrivalEv, WakeEv, TickEv, LossEv, ReplanEv, NoticeEv>;

struct Transmission {
  std::uint64_t id = 0;
  LinkId link;
  TimeUs start_us = 0;
  TimeUs end_us = 0;
  TddFrame frame;
  double rate_bps = 0.0;
  bool done = false;
};

}  // namespace

struct World::Impl {
  WorldConfig cfg;
  TraceSink* trace = nullptr;
  SimClock clock;
  EventQueue<Ev> queue{clock};
  ChannelModel channel;
  std::map<NodeId, std::size_t> node_index;
  std::mt19937_64 rng;

  bool prepared = false;
  std::vector<BeamformingResult> training;
  std::vector<TrainedLink> trained;
  std::vector<BeamMeasurementReport> bm_reports;
  InterferenceGraph graph;
  GlobalSchedule plan;
  std::optional<GlobalSchedule> pending_plan;
  TimeUs pending_at_us = 0;
  TimeUs data_start_us = 0;

  std::vector<AbsoluteSlot> grid;
  std::vector<std::vector<LinkId>> active;
  std::map<std::pair<NodeId, std::int64_t>, std::vector<AbsoluteSlot>> ap_slot_cache;
  std::map<LinkId, LinkRt> links;
  std::map<std::pair<NodeId, NodeId>, TimeUs> last_rx;  // (receiver, sender)
  std::set<std::pair<NodeId, NodeId>> dead_pairs;
  std::map<NodeId, TimeUs> busy_until;
  std::deque<Transmission> air;
  std::uint64_t next_tx_id = 0;
  TimeUs last_clock_us = 0;

  std::vector<double> used_air_us;
  std::vector<double> usable_air_us;
  Metrics metrics;

  explicit Impl(WorldConfig c, TraceSink* t) : cfg(std::move(c)), trace(t), rng(cfg.seed) {}

  // ---- helpers --------------------------------------------------------------

  NodeModel& node(const NodeId& id) {
    auto it = node_index.find(id);
    if (it == node_index.end()) throw InvalidArgument("unknown node '" + id.str() + "'");
    return cfg.nodes[it->second];
  }

  TimeUs now() const { return clock.now_us; }

  void emit(const std::string& kind, const NodeId& node, nlohmann::ordered_json slot,
            nlohmann::ordered_json frame, const std::string& outcome, std::uint64_t seq) {
    if (trace != nullptr) {
      trace->emit(now(), seq, kind, node.str(), std::move(slot), std::move(frame), outcome);
    }
  }

  void notice(const NodeId& node, std::string outcome, nlohmann::ordered_json detail = nullptr) {
    queue.schedule(now(), NoticeEv{node, std::move(outcome), std::move(detail)});
  }

  std::int64_t mpdu_bits() const {
    return static_cast<std::int64_t>(cfg.sizes.data_payload_bytes + cfg.sizes.data_overhead_bytes) * 8;
  }
  std::int64_t overhead_bits() const {
    return static_cast<std::int64_t>(cfg.sizes.data_overhead_bytes) * 8;
  }
  double control_rate() const { return cfg.mcs.lowest().phy_rate_bps; }

  /// Channel sample on a link at the link's own transmit power.
  LinkSample sample(const LinkRt& l) {
    const NodeModel& tx = node(l.id.tx);
    LinkSample s = channel.sample(tx, l.tx_sector, node(l.id.rx), l.rx_sector);
    const double delta = l.tx_power_dbm - tx.tx_power_dbm;
    s.rcpi_dbm += delta;
    s.snr_db += delta;
    s.rsni_db += delta;
    return s;
  }

  LinkRt* find_link(const LinkId& id) {
    auto it = links.find(id);
    return it == links.end() ? nullptr : &it->second;
  }

  // ---- planning -------------------------------------------------------------

  std::vector<DemandSpec> demands() const {
    std::vector<DemandSpec> out;
    const double scale = static_cast<double>(cfg.sizes.data_payload_bytes + cfg.sizes.data_overhead_bytes) /
                         cfg.sizes.data_payload_bytes;
    for (const auto& f : cfg.flows) {
      DemandSpec d;
      d.ap = f.ap;
      d.sta = f.sta;
      d.direction = f.direction;
      d.elastic = f.traffic == TrafficKind::Saturated;
      d.demanded_rate_bps = d.elastic ? 0.0 : f.rate_bps * scale;
      out.push_back(d);
    }
    return out;
  }

  SlotPlanTemplate grid_template() const {
    return SlotPlanTemplate{cfg.data_sp, cfg.structure, cfg.beacon_interval_us};
  }

  GlobalSchedule replan_now() {
    std::vector<TrainedLink> alive;
    for (const auto& t : trained) {
      const bool dead = std::any_of(dead_pairs.begin(), dead_pairs.end(), [&](const auto& p) {
        return (p.first == t.initiator_id && p.second == t.responder_id) ||
               (p.second == t.initiator_id && p.first == t.responder_id);
      });
      if (!dead) alive.push_back(t);
    }
    graph = build_interference_graph(cfg.nodes, alive, bm_reports, channel);
    const auto d = demands();
    return assign_slots(graph, d, grid_template(), cfg.mcs, cfg.controller);
  }

  void install(GlobalSchedule next) {
    plan = std::move(next);
    ap_slot_cache.clear();
    active.assign(cfg.structure.slots.size(), {});
    for (std::size_t s = 0; s < active.size(); ++s) active[s] = plan.active_links(static_cast<int>(s));
    for (auto& [id, l] : links) {
      if (l.block_ack_due) l.block_ack_due = next_basic_after(l, now() - 1);
    }
    for (const auto& ap : plan.aps) {
      std::map<NodeId, std::vector<SlotGrant>> grants;
      for (const auto& e : ap.schedule.entries) {
        if (e.assignee) grants[*e.assignee].push_back({e.slot_index, e.direction});
      }
      for (auto& [sta, g] : grants) {
        LinkRt* dl = find_link({ap.ap, sta});
        if (dl == nullptr) continue;
        HeartbeatElement hb;
        hb.tx_rx_slot_grants = std::move(g);
        hb.updated_params["interval_us"] = static_cast<double>(cfg.structure.interval_duration_us);
        dl->mgmt.push_back(announce_frame(build_announce(ap.ap, sta, {std::move(hb)}), cfg.sizes));
        last_rx[{sta, ap.ap}] = std::max(last_rx[{sta, ap.ap}], now());
        last_rx[{ap.ap, sta}] = std::max(last_rx[{ap.ap, sta}], now());
      }
    }
  }

  const std::vector<AbsoluteSlot>* ap_slots(const NodeId& ap, std::int64_t bi) {
    auto key = std::make_pair(ap, bi);
    auto it = ap_slot_cache.find(key);
    if (it != ap_slot_cache.end()) return &it->second;
    for (const auto& a : plan.aps) {
      if (a.ap != ap) continue;
      if (ap_slot_cache.size() > 64) ap_slot_cache.clear();
      auto [pos, _] = ap_slot_cache.emplace(
          key, expand_sp(a.entry, a.structure, a.schedule, bi * cfg.beacon_interval_us));
      return &pos->second;
    }
    return nullptr;
  }

  /// Start of the earliest Basic slot after `after_us` in which `l`'s
  /// transmitter may send on `l`.
  std::optional<TimeUs> next_basic_after(const LinkRt& l, TimeUs after_us) {
    const std::int64_t first = std::max<std::int64_t>(0, after_us) / cfg.beacon_interval_us;
    for (std::int64_t bi = first; bi <= first + 2; ++bi) {
      const auto* slots = ap_slots(l.ap, bi);
      if (slots == nullptr) return std::nullopt;
      try {
        return next_basic_tx_slot(*slots, l.sta, after_us, l.direction).start_us;
      } catch (const NoOpportunityError&) {
      }
    }
    return std::nullopt;
  }

  // ---- setup ----------------------------------------------------------------

  const GlobalSchedule& prepare() {
    if (prepared) return plan;
    validate(cfg);
    for (std::size_t i = 0; i < cfg.nodes.size(); ++i) node_index[cfg.nodes[i].id] = i;
    channel = ChannelModel(cfg.link_budget);
    for (const auto& [pair, loss] : cfg.loss_offsets) channel.set_loss_offset(pair.first, pair.second, loss);

    NodeLookup lookup;
    for (const auto& n : cfg.nodes) lookup[n.id] = &n;
    for (std::size_t i = 0; i < cfg.beamforming.size(); ++i) {
      const auto& run = cfg.beamforming[i];
      BeamformingRequest req;
      req.mode = run.mode;
      req.initiator = run.initiator;
      req.responders = run.responders;
      req.timing = run.timing;
      req.window_start_us = static_cast<TimeUs>(i) * cfg.training_window_us;
      req.window_end_us = req.window_start_us + cfg.training_window_us;
      auto result = run_beamforming(req, lookup, channel, cfg.mcs, cfg.sizes, clock, trace);
      metrics.ssw_transmissions += result.ssw_transmissions;
      for (const auto& l : result.links) trained.push_back(l);
      for (const auto& r : result.reports) bm_reports.push_back(r);
      training.push_back(std::move(result));
    }
    metrics.beamforming_runs = static_cast<int>(cfg.beamforming.size());
    metrics.trained_links = static_cast<int>(trained.size());

    const TimeUs training_end = static_cast<TimeUs>(cfg.beamforming.size()) * cfg.training_window_us;
    data_start_us = (training_end + cfg.beacon_interval_us - 1) / cfg.beacon_interval_us *
                    cfg.beacon_interval_us;
    clock.now_us = std::max(clock.now_us, data_start_us);
    last_clock_us = data_start_us;
    metrics.data_start_us = data_start_us;

    GlobalSchedule first = replan_now();
    for (const auto& v : graph.vertices()) {
      LinkRt l;
      l.id = v.id;
      l.ap = v.ap;
      l.sta = v.sta;
      l.direction = v.direction;
      l.tx_sector = v.tx_sector;
      l.rx_sector = v.rx_sector;
      l.tx_power_dbm = node(v.id.tx).tx_power_dbm;
      l.m.link = v.id;
      l.m.ap = v.ap;
      l.m.sta = v.sta;
      l.m.direction = v.direction;
      links.emplace(v.id, std::move(l));
    }
    for (const auto& f : cfg.flows) {
      if (LinkRt* l = find_link(f.link())) l->flow = &f;
    }

    grid = expand_sp(cfg.data_sp, cfg.structure, {cfg.structure.allocation_id, {}}, 0);
    used_air_us.assign(cfg.structure.slots.size(), 0.0);
    usable_air_us.assign(cfg.structure.slots.size(), 0.0);
    install(std::move(first));

    // Seed the data phase.
    const std::int64_t first_bi = data_start_us / cfg.beacon_interval_us;
    queue.schedule(first_bi * cfg.beacon_interval_us + grid.front().start_us, SlotEv{first_bi, 0});
    for (auto& [id, l] : links) {
      if (l.flow == nullptr || l.flow->traffic == TrafficKind::Saturated) continue;
      l.poisson_clock_us = static_cast<double>(data_start_us + l.flow->start_us);
      queue.schedule(data_start_us + l.flow->start_us, ArrivalEv{id});
    }
    queue.schedule(data_start_us + cfg.maintenance.keepalive_period_us, TickEv{TickKind::KeepAlive});
    if (cfg.maintenance.bandwidth_request_period_us > 0) {
      queue.schedule(data_start_us + cfg.maintenance.bandwidth_request_period_us,
                     TickEv{TickKind::BandwidthRequest});
    }
    if (cfg.maintenance.resync_period_us > 0) {
      queue.schedule(data_start_us + cfg.maintenance.resync_period_us, TickEv{TickKind::Resync});
    }
    for (std::size_t i = 0; i < cfg.events.size(); ++i) {
      queue.schedule(data_start_us + cfg.events[i].at_us, LossEv{i});
    }
    for (const auto& m : cfg.measurements) {
      LinkRt* l = find_link({m.requester, m.responder});
      if (l == nullptr) {
        notice(m.requester, "measurement_link_untrained",
               {{"responder", m.responder.str()}});
        continue;
      }
      LinkMeasurementRequestFrame req;
      PeriodicReportRequest periodic = m.request;
      periodic.start_time_us += data_start_us;
      req.periodic = periodic;
      TddFrame frame;
      frame.kind = FrameKind::LinkMeasurementRequest;
      frame.tx = m.requester;
      frame.rx = m.responder;
      frame.size_bits = static_cast<std::int64_t>(cfg.sizes.link_measurement_bytes) * 8;
      frame.body = req;
      l->mgmt.push_back(std::move(frame));
    }
    prepared = true;
    return plan;
  }

  // ---- transmission ---------------------------------------------------------

  void start_tx(LinkRt& l, TddFrame frame, TimeUs at_us, double rate_bps) {
    busy_until[l.id.tx] = std::max(busy_until[l.id.tx], at_us + airtime_us(frame.size_bits, rate_bps));
    queue.schedule(at_us, TxEv{l.id, std::move(frame), rate_bps});
  }

  void try_send_data(LinkRt& l) {
    if (!l.alive || l.window_category != SlotCategory::Data || now() >= l.window_end_us) return;
    if (l.flow == nullptr) return;
    auto busy = busy_until.find(l.id.tx);
    if (busy != busy_until.end() && busy->second > now()) {
      if (!l.wake_pending && busy->second < l.window_end_us) {
        l.wake_pending = true;
        queue.schedule(busy->second, WakeEv{l.id});
      }
      return;
    }
    const LinkSample s = sample(l);
    if (l.m.snr_trace.empty() || l.m.snr_trace.back().second != s.snr_db) {
      l.m.snr_trace.emplace_back(now(), s.snr_db);
    }
    const auto entry = mcs_from_snr(cfg.mcs, s.snr_db);
    if (!entry) return;
    std::int64_t cap = capacity_bits(l.window_end_us - now(), entry->phy_rate_bps);
    if (cap <= 0) return;

    if (l.flow->traffic == TrafficKind::Saturated) {
      std::int64_t pending = 0;
      for (const auto& m : l.queue) pending += m.bits - m.sent_bits;
      while (pending < cap) {
        enqueue_mpdu(l, now());
        pending += mpdu_bits();
      }
    }

    DataFrame data;
    data.mcs_index = entry->mcs_index;
    data.phy_rate_bps = entry->phy_rate_bps;
    std::int64_t total = 0;
    while (cap > 0 && !l.queue.empty()) {
      Mpdu& m = l.queue.front();
      const std::int64_t take = std::min(cap, m.bits - m.sent_bits);
      data.fragments.push_back(
          DataFragment{m.seq, m.sent_bits, take, m.bits, m.eligible_us, m.traffic_id});
      m.sent_bits += take;
      cap -= take;
      total += take;
      if (m.sent_bits == m.bits) {
        l.in_flight[m.seq] = m;
        l.queue.pop_front();
      }
    }
    if (total == 0) return;

    l.m.last_mcs = entry->mcs_index;
    const double exact = exact_airtime_us(total, entry->phy_rate_bps);
    l.m.data_airtime_us += exact;
    if (l.window_slot >= 0) used_air_us[l.window_slot] += exact;

    TddFrame frame;
    frame.kind = FrameKind::Data;
    frame.tx = l.id.tx;
    frame.rx = l.id.rx;
    frame.size_bits = total;
    frame.body = std::move(data);
    const TimeUs end = now() + airtime_us(total, entry->phy_rate_bps);
    start_tx(l, std::move(frame), now(), entry->phy_rate_bps);
    if (!l.queue.empty() && end < l.window_end_us && !l.wake_pending) {
      l.wake_pending = true;
      queue.schedule(end, WakeEv{l.id});
    }
  }

  void enqueue_mpdu(LinkRt& l, TimeUs eligible_us) {
    Mpdu m;
    m.seq = l.next_seq++;
    m.bits = mpdu_bits();
    m.eligible_us = eligible_us;
    m.traffic_id = l.flow != nullptr ? l.flow->traffic_id : 0;
    l.m.offered_bits += m.bits;
    l.queue.push_back(m);
  }

  void send_control_burst(LinkRt& l) {
    if (!l.alive) return;
    TimeUs t = std::max(now(), busy_until[l.id.tx]);
    const double rate = control_rate();
    auto fits = [&](const TddFrame& f) { return t + airtime_us(f.size_bits, rate) <= l.window_end_us; };
    auto send = [&](TddFrame f) {
      const TimeUs at = t;
      t += airtime_us(f.size_bits, rate);
      start_tx(l, std::move(f), at, rate);
    };

    if (l.block_ack_due && *l.block_ack_due <= now()) {
      LinkRt* fwd = find_link(reverse(l.id));
      BlockAckFrame ba;
      if (fwd != nullptr) {
        ba.acked_seqs = std::move(fwd->completed_unacked);
        fwd->completed_unacked.clear();
        ba.highest_seen = fwd->highest_seen;
        for (TimeUs since : l.awaiting_ack_since) fwd->m.ack_delay_us.push_back(now() - since);
      }
      l.awaiting_ack_since.clear();
      l.block_ack_due.reset();
      TddFrame f;
      f.kind = FrameKind::BlockAck;
      f.tx = l.id.tx;
      f.rx = l.id.rx;
      f.size_bits = static_cast<std::int64_t>(cfg.sizes.block_ack_bytes) * 8;
      f.body = std::move(ba);
      send(std::move(f));
    }

    while (!l.report_due.empty() && l.report_due.front() <= now()) {
      const NodeModel& requester = node(l.id.rx);
      LinkRt* measured = find_link(reverse(l.id));
      l.report_due.erase(l.report_due.begin());
      if (measured == nullptr) continue;
      MeasuredLink ml{&requester, measured->tx_sector, &node(l.id.tx), measured->rx_sector,
                      measured->alive};
      LinkMeasurementReport report;
      try {
        report = emit_link_measurement_report(ml, channel, l.report_seq);
      } catch (const ProtocolError&) {
        continue;
      }
      const double delta = measured->tx_power_dbm - requester.tx_power_dbm;
      report.rcpi_dbm += delta;
      report.rsni_db += delta;
      TddFrame f;
      f.kind = FrameKind::LinkMeasurementReport;
      f.tx = l.id.tx;
      f.rx = l.id.rx;
      f.size_bits = static_cast<std::int64_t>(cfg.sizes.link_measurement_bytes) * 8;
      f.body = std::move(report);
      if (!fits(f)) break;
      send(std::move(f));
    }

    while (!l.mgmt.empty() && fits(l.mgmt.front())) {
      TddFrame f = std::move(l.mgmt.front());
      l.mgmt.pop_front();
      send(std::move(f));
    }
  }

  // ---- event handlers -------------------------------------------------------

  void on_slot(const SlotEv& ev, std::uint64_t seq) {
    if (ev.k == 0) {
      for (int k = 1; k < static_cast<int>(grid.size()); ++k) {
        queue.schedule(ev.bi * cfg.beacon_interval_us + grid[k].start_us, SlotEv{ev.bi, k});
      }
      queue.schedule((ev.bi + 1) * cfg.beacon_interval_us + grid.front().start_us,
                     SlotEv{ev.bi + 1, 0});
    }
    if (pending_plan && pending_at_us <= now()) {
      install(std::move(*pending_plan));
      pending_plan.reset();
    }
    const AbsoluteSlot& g = grid[ev.k];
    const auto& here = active[g.slot_index];

    std::set<NodeId> txs;
    std::set<NodeId> rxs;
    for (const auto& id : here) {
      txs.insert(id.tx);
      rxs.insert(id.rx);
    }
    for (const auto& id : txs) {
      if (rxs.contains(id)) {
        throw EngineAssertion("node " + id.str() + " scheduled to transmit and receive in slot " +
                              std::to_string(g.slot_index));
      }
    }

    nlohmann::ordered_json slot;
    slot["alloc"] = g.sp_allocation_id;
    slot["bi"] = ev.bi;
    slot["interval"] = g.interval_index;
    slot["index"] = g.slot_index;
    slot["start_us"] = now();
    slot["duration_us"] = g.duration_us;
    slot["category"] = to_string(g.category);
    auto act = nlohmann::ordered_json::array();
    for (const auto& id : here) act.push_back(id.str());
    slot["active"] = std::move(act);
    emit("slot_boundary", NodeId{}, std::move(slot), nullptr, "", seq);

    for (const auto& id : here) {
      LinkRt* l = find_link(id);
      if (l == nullptr || !l->alive) continue;
      l->window_end_us = now() + g.duration_us - cfg.slot_guard_us;
      l->window_category = g.category;
      l->window_slot = g.slot_index;
      if (g.category == SlotCategory::Data) {
        if (l->flow != nullptr) usable_air_us[g.slot_index] += static_cast<double>(g.duration_us - cfg.slot_guard_us);
        try_send_data(*l);
      } else {
        send_control_burst(*l);
      }
    }
  }

  void on_tx(TxEv& ev, std::uint64_t seq) {
    LinkRt* l = find_link(ev.link);
    auto frame_json = to_json(ev.frame);
    frame_json["tx_sector"] = l != nullptr ? l->tx_sector : -1;
    emit("frame_tx_start", ev.link.tx, nullptr, std::move(frame_json), "sent", seq);

    if (ev.frame.kind == FrameKind::LinkMeasurementRequest) metrics.lm_request_times_us.push_back(now());
    if (ev.frame.kind == FrameKind::LinkMeasurementReport) {
      const auto& r = std::get<LinkMeasurementReport>(ev.frame.body);
      metrics.reports.push_back({now(), r.reporter, ev.frame.rx, r.rsni_db, r.sequence_number});
    }

    Transmission t;
    t.id = next_tx_id++;
    t.link = ev.link;
    t.start_us = now();
    t.end_us = now() + airtime_us(ev.frame.size_bits, ev.rate_bps);
    t.rate_bps = ev.rate_bps;
    t.frame = std::move(ev.frame);
    const TimeUs prop =
        propagation_delay_us(distance_m(node(t.link.tx).position, node(t.link.rx).position));
    queue.schedule(t.end_us + prop, RxEv{t.id});
    air.push_back(std::move(t));
  }

  std::string reception_outcome(const Transmission& t, const LinkRt& l, double& snr_db) {
    const NodeId& rx = t.link.rx;
    for (const auto& other : air) {
      if (other.id == t.id || other.start_us >= t.end_us || other.end_us <= t.start_us) continue;
      if (other.link.tx == rx) return "receiver_busy";
    }
    const NodeModel& rx_node = node(rx);
    for (const auto& other : air) {
      if (other.id == t.id || other.start_us >= t.end_us || other.end_us <= t.start_us) continue;
      if (other.link.tx == t.link.tx) continue;
      const LinkRt* ol = find_link(other.link);
      if (ol == nullptr) continue;
      const NodeModel& itx = node(other.link.tx);
      if (itx.position == rx_node.position) return "interference";
      const double p = channel.received_power_dbm(itx, ol->tx_sector, rx_node, l.rx_sector) +
                       (ol->tx_power_dbm - itx.tx_power_dbm);
      if (channel.is_harmful(p)) return "interference";
    }
    snr_db = sample(l).snr_db;
    double threshold = cfg.mcs.lowest().min_snr_db;
    if (t.frame.kind == FrameKind::Data) {
      const int idx = std::get<DataFrame>(t.frame.body).mcs_index;
      for (const auto& e : cfg.mcs.entries()) {
        if (e.mcs_index == idx) threshold = e.min_snr_db;
      }
    }
    return snr_db >= threshold ? "decoded" : "below_threshold";
  }

  void on_rx(const RxEv& ev, std::uint64_t seq) {
    auto it = std::find_if(air.begin(), air.end(), [&](const Transmission& t) { return t.id == ev.tx_id; });
    if (it == air.end()) throw EngineAssertion("reception without transmission");
    Transmission& t = *it;
    LinkRt* l = find_link(t.link);
    double snr = 0.0;
    const std::string outcome = l == nullptr ? "not_addressed" : reception_outcome(t, *l, snr);
    auto frame_json = to_json(t.frame);
    frame_json["rx_sector"] = l != nullptr ? l->rx_sector : -1;
    frame_json["snr_db"] = snr;
    emit("frame_rx_complete", t.link.rx, nullptr, std::move(frame_json), outcome, seq);
    t.done = true;
    if (outcome == "decoded") {
      last_rx[{t.link.rx, t.link.tx}] = now();
      handle_frame(*l, t.frame);
    }
    while (!air.empty() && air.front().done && air.front().end_us + 100 < now()) air.pop_front();
  }

  void handle_frame(LinkRt& l, const TddFrame& frame) {
    std::visit(overloaded{
                   [&](const DataFrame& d) { on_data(l, frame, d); },
                   [&](const BlockAckFrame& ba) { on_block_ack(l, ba); },
                   [&](const AnnounceFrame& a) {
                     for (const auto& e : a.elements) {
                       if (std::holds_alternative<TddBandwidthRequestElement>(e)) {
                         ++metrics.bandwidth_requests;
                       }
                     }
                   },
                   [&](const LinkMeasurementRequestFrame& r) { on_lm_request(l, r); },
                   [&](const LinkMeasurementReport& r) { on_lm_report(l, r); },
                   [](const auto&) {},
               },
               frame.body);
  }

  void on_data(LinkRt& l, const TddFrame& frame, const DataFrame& d) {
    l.m.phy_data_bits += frame.size_bits;
    for (const auto& f : d.fragments) {
      l.highest_seen = std::max(l.highest_seen, f.mpdu_seq);
      RxMpdu& r = l.rx[f.mpdu_seq];
      if (r.done) continue;
      if (r.fragments.emplace(f.offset_bits, f.bits).second) r.received_bits += f.bits;
      if (r.received_bits < f.mpdu_bits) continue;
      r.done = true;
      r.fragments.clear();
      l.completed_unacked.push_back(f.mpdu_seq);
      l.m.delivered_bits += f.mpdu_bits;
      l.m.goodput_bits += f.mpdu_bits - overhead_bits();
      l.m.latency_us.push_back(now() - f.eligible_us);
      ++l.m.mpdus_delivered;
    }
    LinkRt* back = find_link(reverse(l.id));
    if (back == nullptr) return;
    back->awaiting_ack_since.push_back(now());
    if (!back->block_ack_due) back->block_ack_due = next_basic_after(*back, now());
  }

  void on_block_ack(LinkRt& l, const BlockAckFrame& ba) {
    LinkRt* fwd = find_link(reverse(l.id));
    if (fwd == nullptr) return;
    for (auto seq : ba.acked_seqs) fwd->in_flight.erase(seq);
    std::vector<Mpdu> retry;
    for (auto it = fwd->in_flight.begin(); it != fwd->in_flight.end();) {
      if (it->first > ba.highest_seen) break;
      if (it->second.retried) {
        fwd->m.dropped_bits += it->second.bits;
      } else {
        Mpdu m = it->second;
        m.retried = true;
        m.sent_bits = 0;
        retry.push_back(m);
        ++fwd->m.retries;
      }
      it = fwd->in_flight.erase(it);
    }
    for (auto it = retry.rbegin(); it != retry.rend(); ++it) fwd->queue.push_front(*it);
  }

  void on_lm_request(LinkRt& l, const LinkMeasurementRequestFrame& r) {
    if (!r.periodic) return;
    const PeriodicReportRequest& req = *r.periodic;
    const NodeId& responder = l.id.rx;
    LinkRt* back = find_link(reverse(l.id));
    if (back == nullptr) return;
    const TimeUs span_end = req.start_time_us + static_cast<TimeUs>(req.count) * req.interval_us;
    std::vector<AbsoluteSlot> slots;
    for (std::int64_t bi = req.start_time_us / cfg.beacon_interval_us;
         bi <= span_end / cfg.beacon_interval_us; ++bi) {
      if (const auto* s = ap_slots(back->ap, bi)) slots.insert(slots.end(), s->begin(), s->end());
    }
    const auto decision = handle_periodic_report_request(req, slots, back->sta, back->direction);
    nlohmann::ordered_json detail{{"requester", l.id.tx.str()}, {"count", req.count}};
    if (decision.accepted) {
      auto times = nlohmann::ordered_json::array();
      for (TimeUs t : decision.emission_times_us) times.push_back(t);
      detail["emissions_us"] = std::move(times);
      back->report_due.insert(back->report_due.end(), decision.emission_times_us.begin(),
                              decision.emission_times_us.end());
      std::sort(back->report_due.begin(), back->report_due.end());
      notice(responder, "periodic_report_accepted", std::move(detail));
    } else {
      detail["reason"] = decision.reason;
      notice(responder, "periodic_report_rejected", std::move(detail));
    }
  }

  void on_lm_report(LinkRt& l, const LinkMeasurementReport& r) {
    if (!cfg.maintenance.tpc_enabled) return;
    // The report measured the requester's transmissions toward the reporter.
    LinkRt* measured = find_link(reverse(l.id));
    if (measured == nullptr) return;
    const NodeModel& requester = node(measured->id.tx);
    const double before = measured->tx_power_dbm;
    const double after = tpc_update(before, r.rsni_db, cfg.maintenance.tpc_target_rsni_db,
                                     requester.power_limits, cfg.maintenance.tpc_max_step_db);
    measured->tx_power_dbm = after;
    metrics.tpc_updates.push_back({now(), measured->id, before, after, r.rsni_db});
    notice(requester.id, "tpc_update",
           {{"link", measured->id.str()}, {"before_dbm", before}, {"after_dbm", after},
            {"rsni_db", r.rsni_db}});
  }

  void on_arrival(const ArrivalEv& ev, std::uint64_t seq) {
    LinkRt* l = find_link(ev.link);
    emit("timer", ev.link.tx, nullptr, nullptr, "arrival", seq);
    if (l == nullptr || l->flow == nullptr) return;
    enqueue_mpdu(*l, now());
    ++l->arrivals;
    const FlowSpec& f = *l->flow;
    const double payload_bits = cfg.sizes.data_payload_bytes * 8.0;
    TimeUs next = 0;
    if (f.traffic == TrafficKind::Cbr) {
      next = data_start_us + f.start_us +
             static_cast<TimeUs>(std::floor(static_cast<double>(l->arrivals) * payload_bits * 1e6 / f.rate_bps));
    } else {
      std::exponential_distribution<double> gap(f.rate_bps / payload_bits / 1e6);
      l->poisson_clock_us += gap(rng);
      next = static_cast<TimeUs>(std::ceil(l->poisson_clock_us));
    }
    queue.schedule(std::max(next, now()), ArrivalEv{ev.link});
    try_send_data(*l);
  }

  /// Clocks drift lazily: every maintenance tick integrates the time since
  /// the previous one.
  void advance_clocks() {
    const TimeUs dt = now() - last_clock_us;
    last_clock_us = now();
    for (auto& n : cfg.nodes) {
      const SyncQuality before = n.clock.quality;
      n.clock = advance_clock(n.clock, dt, cfg.maintenance.sync_tolerance_us);
      if (before == SyncQuality::GlobalSync && n.clock.quality == SyncQuality::Holdover) {
        metrics.holdover_nodes.push_back(n.id);
        notice(n.id, "clock_holdover", {{"offset_us", n.clock.offset_us}});
      }
    }
  }

  void on_tick(const TickEv& ev, std::uint64_t seq) {
    const auto& mc = cfg.maintenance;
    switch (ev.kind) {
      case TickKind::KeepAlive: {
        emit("maintenance_tick", NodeId{}, nullptr, nullptr, "keepalive", seq);
        advance_clocks();
        for (const auto& pair : planned_pairs()) {
          LinkRt* dl = find_link({pair.first, pair.second});
          LinkRt* ul = find_link({pair.second, pair.first});
          if (dl == nullptr || ul == nullptr || !dl->alive) continue;
          const bool dead =
              keepalive_check(last_rx[{pair.second, pair.first}], now(), mc.keepalive_timeout_us) ==
                  Liveness::Dead ||
              keepalive_check(last_rx[{pair.first, pair.second}], now(), mc.keepalive_timeout_us) ==
                  Liveness::Dead;
          if (dead) {
            dl->alive = false;
            ul->alive = false;
            dead_pairs.insert(pair);
            metrics.dead_links.push_back(dl->id);
            metrics.dead_links.push_back(ul->id);
            notice(pair.first, "link_dead", {{"sta", pair.second.str()}});
            queue.schedule(now(), ReplanEv{});
            continue;
          }
          for (LinkRt* l : {dl, ul}) {
            KeepAliveElement ka;
            ka.period_us = mc.keepalive_period_us;
            l->mgmt.push_back(announce_frame(build_announce(l->id.tx, l->id.rx, {ka}), cfg.sizes));
          }
        }
        queue.schedule(now() + mc.keepalive_period_us, TickEv{TickKind::KeepAlive});
        return;
      }
      case TickKind::BandwidthRequest: {
        emit("maintenance_tick", NodeId{}, nullptr, nullptr, "bandwidth_request", seq);
        for (auto& [id, l] : links) {
          if (l.flow == nullptr || l.direction != Direction::Uplink || !l.alive) continue;
          std::int64_t queued = 0;
          for (const auto& m : l.queue) queued += m.bits - m.sent_bits;
          TddBandwidthRequestElement req{static_cast<std::uint64_t>(queued / 8), l.flow->rate_bps,
                                         l.flow->traffic_id};
          l.mgmt.push_back(announce_frame(build_announce(l.id.tx, l.id.rx, {req}), cfg.sizes));
        }
        queue.schedule(now() + mc.bandwidth_request_period_us, TickEv{TickKind::BandwidthRequest});
        return;
      }
      case TickKind::Resync:
        emit("maintenance_tick", NodeId{}, nullptr, nullptr, "resync", seq);
        advance_clocks();
        for (auto& n : cfg.nodes) n.clock = resync_clock(n.clock);
        queue.schedule(now() + mc.resync_period_us, TickEv{TickKind::Resync});
        return;
    }
  }

  std::vector<std::pair<NodeId, NodeId>> planned_pairs() const {
    std::set<std::pair<NodeId, NodeId>> pairs;
    for (const auto& ap : plan.aps) {
      for (const auto& e : ap.schedule.entries) {
        if (e.assignee) pairs.insert({ap.ap, *e.assignee});
      }
    }
    return {pairs.begin(), pairs.end()};
  }

  void on_replan(std::uint64_t seq) {
    GlobalSchedule next = replan_now();
    ++metrics.replans;
    const std::int64_t bi = now() / cfg.beacon_interval_us;
    TimeUs at = bi * cfg.beacon_interval_us + cfg.data_sp.start_time_us;
    if (at <= now()) at += cfg.beacon_interval_us;
    auto starved = nlohmann::ordered_json::array();
    for (const auto& id : next.starved()) starved.push_back(id.str());
    emit("timer", NodeId{}, nullptr, {{"effective_us", at}, {"starved", std::move(starved)}},
         "replan", seq);
    pending_plan = std::move(next);
    pending_at_us = at;
  }

  void on_loss(const LossEv& ev, std::uint64_t seq) {
    const LossEvent& e = cfg.events[ev.index];
    channel.set_loss_offset(e.a, e.b, e.loss_db);
    emit("timer", e.a, nullptr, {{"peer", e.b.str()}, {"loss_db", e.loss_db}}, "loss_change", seq);
  }

  void dispatch(SimEvent<Ev> ev) {
    std::visit(overloaded{
                   [&](SlotEv& e) { on_slot(e, ev.seq); },
                   [&](TxEv& e) { on_tx(e, ev.seq); },
                   [&](RxEv& e) { on_rx(e, ev.seq); },
                   [&](ArrivalEv& e) { on_arrival(e, ev.seq); },
                   [&](WakeEv& e) {
                     emit("timer", e.link.tx, nullptr, nullptr, "tx_ready", ev.seq);
                     if (LinkRt* l = find_link(e.link)) {
                       l->wake_pending = false;
                       try_send_data(*l);
                     }
                   },
                   [&](TickEv& e) { on_tick(e, ev.seq); },
                   [&](LossEv& e) { on_loss(e, ev.seq); },
                   [&](ReplanEv&) { on_replan(ev.seq); },
                   [&](NoticeEv& e) {
                     emit("timer", e.node, nullptr, std::move(e.detail), e.outcome, ev.seq);
                   },
               },
               ev.payload);
  }

  Metrics run_until(TimeUs t_end_us) {
    prepare();
    while (!queue.empty() && queue.next_time() < t_end_us) dispatch(queue.pop());
    clock.now_us = std::max(clock.now_us, t_end_us);
    return collect();
  }

  Metrics collect() const {
    Metrics out = metrics;
    out.end_us = clock.now_us;
    for (const auto& f : cfg.flows) {
      LinkMetrics m;
      auto it = links.find(f.link());
      if (it != links.end()) {
        const LinkRt& l = it->second;
        m = l.m;
        m.tx_power_dbm = l.tx_power_dbm;
        std::int64_t queued = 0;
        for (const auto& q : l.queue) queued += q.bits;
        for (const auto& [seq, q] : l.in_flight) {
          auto r = l.rx.find(seq);
          if (r == l.rx.end() || !r->second.done) queued += q.bits;
        }
        m.queued_bits = queued;
      } else {
        m.link = f.link();
        m.ap = f.ap;
        m.sta = f.sta;
        m.direction = f.direction;
      }
      if (const LinkGrant* g = plan.grant(f.link())) {
        m.demanded_rate_bps = g->demanded_rate_bps;
        m.granted_rate_bps = g->granted_rate_bps;
        m.starved = g->starved();
      } else {
        m.starved = true;
      }
      out.links.push_back(std::move(m));
    }
    double used = 0.0;
    double usable = 0.0;
    out.data_slot_utilization.assign(used_air_us.size(), 0.0);
    for (std::size_t s = 0; s < used_air_us.size(); ++s) {
      if (usable_air_us[s] > 0.0) out.data_slot_utilization[s] = used_air_us[s] / usable_air_us[s];
      used += used_air_us[s];
      usable += usable_air_us[s];
    }
    out.data_utilization = usable > 0.0 ? used / usable : 0.0;
    out.trace_records = trace != nullptr ? trace->count() : 0;
    return out;
  }

  bool enqueue_frame(TddFrame frame) {
    prepare();
    if (!is_frame_allowed_in_tdd_slot(frame.kind)) {
      ++metrics.prohibited_frames;
      const auto seq = clock.next_seq++;
      emit("frame_tx_start", frame.tx, nullptr, to_json(frame), "prohibited_frame", seq);
      return false;
    }
    LinkRt* l = find_link({frame.tx, frame.rx});
    if (l == nullptr) throw InvalidArgument("no trained link " + frame.tx.str() + "->" + frame.rx.str());
    if (frame.kind == FrameKind::Data) throw InvalidArgument("data frames come from flows");
    l->mgmt.push_back(std::move(frame));
    return true;
  }
};

World::World(WorldConfig cfg, TraceSink* trace) : impl_(std::make_unique<Impl>(std::move(cfg), trace)) {}
World::~World() = default;

const GlobalSchedule& World::prepare() { return impl_->prepare(); }
Metrics World::run_until(TimeUs t_end_us) { return impl_->run_until(t_end_us); }
bool World::enqueue_frame(TddFrame frame) { return impl_->enqueue_frame(std::move(frame)); }
Metrics World::collect_metrics() const { return impl_->collect(); }
TimeUs World::now() const { return impl_->now(); }
TimeUs World::data_start_us() const { return impl_->data_start_us; }
const GlobalSchedule& World::plan() const { return impl_->plan; }
const InterferenceGraph& World::graph() const { return impl_->graph; }
const std::vector<BeamformingResult>& World::training() const { return impl_->training; }
const WorldConfig& World::config() const { return impl_->cfg; }

Metrics run_until(World& world, TimeUs t_end_us) { return world.run_until(t_end_us); }

}  // namespace fwa
