#include "fwa/controller.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <set>
#include <tuple>

#include "fwa/errors.hpp"

namespace fwa {

// ---- graph ------------------------------------------------------------------

int InterferenceGraph::add_vertex(LinkVertex vertex) {
  if (find(vertex.id)) throw InvalidArgument("duplicate link " + vertex.id.str());
  vertices_.push_back(std::move(vertex));
  for (auto& row : adj_) row.push_back(0);
  adj_.emplace_back(vertices_.size(), 0);
  return size() - 1;
}

void InterferenceGraph::add_edge(int a, int b) {
  if (a == b) throw InvalidArgument("self edge");
  adj_.at(a).at(b) = 1;
  adj_.at(b).at(a) = 1;
}

std::optional<int> InterferenceGraph::find(const LinkId& id) const {
  for (int i = 0; i < size(); ++i) {
    if (vertices_[i].id == id) return i;
  }
  return std::nullopt;
}

std::optional<int> InterferenceGraph::find(const NodeId& ap, const NodeId& sta,
                                           Direction direction) const {
  return find(direction == Direction::Downlink ? LinkId{ap, sta} : LinkId{sta, ap});
}

bool InterferenceGraph::adjacent(int a, int b) const { return adj_.at(a).at(b) != 0; }

std::vector<int> InterferenceGraph::neighbors(int i) const {
  std::vector<int> out;
  for (int j = 0; j < size(); ++j) {
    if (adj_[i][j]) out.push_back(j);
  }
  return out;
}

int InterferenceGraph::edge_count() const {
  int count = 0;
  for (int i = 0; i < size(); ++i) {
    for (int j = i + 1; j < size(); ++j) count += adj_[i][j];
  }
  return count;
}

namespace {

using SampleKey = std::tuple<NodeId, NodeId, int, int>;

struct MeasuredPower {
  std::map<SampleKey, double> snr_db;

  /// Received power at `rx` from `tx`, derived from a report in either
  /// direction; reports measured the reverse path are rescaled to the
  /// forward transmitter's power.
  std::optional<double> lookup(const NodeModel& tx, int tx_sector, const NodeModel& rx,
                               int rx_sector, double noise_dbm) const {
    if (auto it = snr_db.find({tx.id, rx.id, tx_sector, rx_sector}); it != snr_db.end()) {
      return it->second + noise_dbm;
    }
    if (auto it = snr_db.find({rx.id, tx.id, rx_sector, tx_sector}); it != snr_db.end()) {
      return it->second + noise_dbm - rx.tx_power_dbm + tx.tx_power_dbm;
    }
    return std::nullopt;
  }
};

}  // namespace

InterferenceGraph build_interference_graph(std::span<const NodeModel> nodes,
                                           std::span<const TrainedLink> links,
                                           std::span<const BeamMeasurementReport> reports,
                                           const ChannelModel& channel) {
  std::map<NodeId, const NodeModel*> by_id;
  for (const auto& n : nodes) by_id[n.id] = &n;
  auto node = [&](const NodeId& id) -> const NodeModel& {
    auto it = by_id.find(id);
    if (it == by_id.end()) throw InvalidArgument("trained link names unknown node " + id.str());
    return *it->second;
  };

  InterferenceGraph graph;
  std::set<std::pair<NodeId, NodeId>> seen;
  for (const auto& link : links) {
    const NodeModel& init = node(link.initiator_id);
    const NodeModel& resp = node(link.responder_id);
    // The AP side is whichever end is an AP; the initiator otherwise.
    const bool init_is_ap = is_ap(init.role) || !is_ap(resp.role);
    const NodeModel& ap = init_is_ap ? init : resp;
    const NodeModel& sta = init_is_ap ? resp : init;
    const int ap_sector = init_is_ap ? link.initiator_sector : link.responder_sector;
    const int sta_sector = init_is_ap ? link.responder_sector : link.initiator_sector;
    if (!seen.insert({ap.id, sta.id}).second) continue;

    graph.add_vertex(LinkVertex{{ap.id, sta.id}, ap.id, sta.id, Direction::Downlink, ap_sector,
                                sta_sector, channel.sample(ap, ap_sector, sta, sta_sector).snr_db});
    graph.add_vertex(LinkVertex{{sta.id, ap.id}, ap.id, sta.id, Direction::Uplink, sta_sector,
                                ap_sector, channel.sample(sta, sta_sector, ap, ap_sector).snr_db});
  }

  MeasuredPower measured;
  for (const auto& report : reports) {
    for (const auto& s : report.samples) {
      measured.snr_db[{report.initiator_id, report.responder_id, s.initiator_sector,
                       s.responder_sector}] = s.snr_db;
    }
  }
  const double noise = channel.noise_floor_dbm();

  // Power that vertex `j`'s transmitter puts on vertex `i`'s receiver.
  auto harmful = [&](const LinkVertex& victim, const LinkVertex& aggressor, bool& from_model) {
    const NodeModel& tx = node(aggressor.id.tx);
    const NodeModel& rx = node(victim.id.rx);
    auto power = measured.lookup(tx, aggressor.tx_sector, rx, victim.rx_sector, noise);
    if (!power) {
      from_model = true;
      power = channel.received_power_dbm(tx, aggressor.tx_sector, rx, victim.rx_sector);
    }
    return channel.is_harmful(*power);
  };

  for (int i = 0; i < graph.size(); ++i) {
    for (int j = i + 1; j < graph.size(); ++j) {
      const LinkVertex& a = graph.vertex(i);
      const LinkVertex& b = graph.vertex(j);
      std::set<NodeId> ends{a.id.tx, a.id.rx};
      const bool shared = ends.contains(b.id.tx) || ends.contains(b.id.rx);
      const bool colocated = node(a.id.rx).position == node(b.id.tx).position ||
                             node(b.id.rx).position == node(a.id.tx).position;
      if (shared || colocated) {
        graph.add_edge(i, j);
        continue;
      }
      bool from_model = false;
      const bool conflict = harmful(a, b, from_model) || harmful(b, a, from_model);
      if (from_model) graph.mark_model_derived(i, j);
      if (conflict) graph.add_edge(i, j);
    }
  }
  return graph;
}

// ---- schedule ---------------------------------------------------------------

std::vector<LinkId> GlobalSchedule::starved() const {
  std::vector<LinkId> out;
  for (const auto& g : grants) {
    if (g.starved()) out.push_back(g.link);
  }
  return out;
}

double GlobalSchedule::total_granted_bps() const {
  double total = 0.0;
  for (const auto& g : grants) total += g.granted_rate_bps;
  return total;
}

const LinkGrant* GlobalSchedule::grant(const LinkId& link) const {
  for (const auto& g : grants) {
    if (g.link == link) return &g;
  }
  return nullptr;
}

std::vector<LinkId> GlobalSchedule::active_links(int slot_index) const {
  std::vector<LinkId> out;
  for (const auto& ap : aps) {
    for (const auto& e : ap.schedule.entries) {
      if (e.slot_index != slot_index || !e.assignee) continue;
      out.push_back(e.direction == Direction::Downlink ? LinkId{ap.ap, *e.assignee}
                                                        : LinkId{*e.assignee, ap.ap});
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

double slot_rate_bps(const SlotPlanTemplate& grid, TimeUs slot_duration_us, double phy_rate_bps) {
  return static_cast<double>(slot_duration_us) /
         static_cast<double>(grid.structure.interval_duration_us) *
         static_cast<double>(grid.sp.duration_us) / static_cast<double>(grid.beacon_interval_us) *
         phy_rate_bps;
}

namespace {

void validate_grid(const SlotPlanTemplate& grid) {
  if (grid.beacon_interval_us <= 0) throw InvalidArgument("beacon interval must be positive");
  validate_extended_schedule(std::span(&grid.sp, 1), grid.beacon_interval_us);
  if (!grid.sp.is_tdd) throw InvalidArgument("planning grid needs a TDD SP");
  if (grid.structure.allocation_id != grid.sp.allocation_id) {
    throw InvalidArgument("slot structure allocation does not match the SP");
  }
  if (grid.structure.interval_duration_us <= 0 ||
      grid.sp.duration_us % grid.structure.interval_duration_us != 0) {
    throw StructureError("SP duration is not a whole number of TDD intervals");
  }
  const auto problems = validate_schedule(grid.structure, {grid.sp.allocation_id, {}});
  if (!problems.empty()) {
    throw StructureError("slot structure: " + to_string(problems.front().kind) + " " +
                         problems.front().detail);
  }
}

struct Candidate {
  std::size_t demand = 0;
  int vertex = -1;
  double phy_rate_bps = 0.0;
};

}  // namespace

GlobalSchedule GreedyStrategy::plan(const InterferenceGraph& graph,
                                    std::span<const DemandSpec> demands,
                                    const SlotPlanTemplate& grid, const McsTable& mcs,
                                    const ControllerConfig& cfg) const {
  validate_grid(grid);
  if (!(cfg.dl_fraction >= 0.0 && cfg.dl_fraction <= 1.0)) {
    throw InvalidArgument("dl_fraction must lie in [0, 1]");
  }

  GlobalSchedule out;
  out.grid = grid;
  std::set<LinkId> seen_links;
  for (const auto& d : demands) {
    if (!(d.demanded_rate_bps >= 0.0)) throw InvalidArgument("negative demand on " + d.link().str());
    if (!seen_links.insert(d.link()).second) {
      throw InvalidArgument("duplicate demand for " + d.link().str());
    }
    LinkGrant g;
    g.link = d.link();
    g.ap = d.ap;
    g.sta = d.sta;
    g.direction = d.direction;
    g.demanded_rate_bps = d.demanded_rate_bps;
    g.elastic = d.elastic;
    out.grants.push_back(std::move(g));
  }

  // Links that take part in planning.
  std::vector<Candidate> cands;
  for (std::size_t i = 0; i < demands.size(); ++i) {
    const auto& d = demands[i];
    if (d.demanded_rate_bps <= 0.0 && !d.elastic) continue;
    auto v = graph.find(d.ap, d.sta, d.direction);
    if (!v) {
      out.grants[i].starved_reason = "link not trained";
      continue;
    }
    auto entry = mcs_from_snr(mcs, graph.vertex(*v).snr_db);
    if (!entry) {
      out.grants[i].starved_reason = "link below MCS 0";
      continue;
    }
    out.grants[i].phy_rate_bps = entry->phy_rate_bps;
    cands.push_back({i, *v, entry->phy_rate_bps});
  }
  auto key = [&](const Candidate& c) {
    const auto& d = demands[c.demand];
    return d.elastic ? std::numeric_limits<double>::infinity() : d.demanded_rate_bps;
  };
  std::stable_sort(cands.begin(), cands.end(), [&](const Candidate& a, const Candidate& b) {
    if (key(a) != key(b)) return key(a) > key(b);
    return demands[a.demand].link() < demands[b.demand].link();
  });

  const auto& slots = grid.structure.slots;
  std::vector<std::vector<int>> active(slots.size());
  auto compatible = [&](int vertex, int slot) {
    for (int u : active[slot]) {
      if (u == vertex || graph.adjacent(u, vertex)) return false;
    }
    return true;
  };

  // Basic slots alternate DL, UL in index order. Every planned AP-STA pair
  // needs one of each so both ends can send acks and management frames.
  std::vector<int> basic;
  std::vector<int> data;
  for (int s = 0; s < static_cast<int>(slots.size()); ++s) {
    (slots[s].category == SlotCategory::Basic ? basic : data).push_back(s);
  }
  auto basic_dir = [&](std::size_t k) { return k % 2 == 0 ? Direction::Downlink : Direction::Uplink; };

  std::set<std::pair<NodeId, NodeId>> failed_pairs;
  std::set<std::pair<NodeId, NodeId>> done_pairs;
  for (const auto& c : cands) {
    const auto& d = demands[c.demand];
    const std::pair<NodeId, NodeId> pair{d.ap, d.sta};
    if (!done_pairs.insert(pair).second) continue;
    std::vector<std::pair<int, int>> placed;  // (slot, vertex)
    bool ok = true;
    for (Direction dir : {Direction::Downlink, Direction::Uplink}) {
      auto v = graph.find(d.ap, d.sta, dir);
      bool found = false;
      for (std::size_t k = 0; v && k < basic.size(); ++k) {
        if (basic_dir(k) == dir && compatible(*v, basic[k])) {
          active[basic[k]].push_back(*v);
          placed.emplace_back(basic[k], *v);
          found = true;
          break;
        }
      }
      if (!found) {
        ok = false;
        break;
      }
    }
    if (!ok) {
      for (const auto& [slot, v] : placed) std::erase(active[slot], v);
      failed_pairs.insert(pair);
    }
  }
  std::vector<Candidate> planned;
  for (const auto& c : cands) {
    const auto& d = demands[c.demand];
    if (failed_pairs.contains({d.ap, d.sta})) {
      out.grants[c.demand].starved_reason = "no compatible BASIC slot";
    } else {
      planned.push_back(c);
    }
  }

  bool has_dl = false;
  bool has_ul = false;
  for (const auto& c : planned) {
    (demands[c.demand].direction == Direction::Downlink ? has_dl : has_ul) = true;
  }
  const std::size_t n = data.size();
  std::size_t dl_count = 0;
  if (has_dl && has_ul) {
    dl_count = std::min(n, static_cast<std::size_t>(std::ceil(cfg.dl_fraction * n - 1e-9)));
  } else if (has_dl) {
    dl_count = n;
  }
  auto pool_dir = [&](std::size_t k) { return k < dl_count ? Direction::Downlink : Direction::Uplink; };

  // First fit in demand order.
  for (const auto& c : planned) {
    const auto& d = demands[c.demand];
    double granted = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      if (pool_dir(k) != d.direction) continue;
      if (d.elastic ? granted > 0.0 : granted >= d.demanded_rate_bps) break;
      if (!compatible(c.vertex, data[k])) continue;
      active[data[k]].push_back(c.vertex);
      granted += slot_rate_bps(grid, slots[data[k]].duration_us, c.phy_rate_bps);
    }
  }
  // Fill: add any demanded link that still fits.
  for (std::size_t k = 0; k < n; ++k) {
    for (const auto& c : planned) {
      if (demands[c.demand].direction != pool_dir(k)) continue;
      if (compatible(c.vertex, data[k])) active[data[k]].push_back(c.vertex);
    }
  }

  for (const auto& c : planned) {
    auto& g = out.grants[c.demand];
    for (int s = 0; s < static_cast<int>(slots.size()); ++s) {
      if (std::find(active[s].begin(), active[s].end(), c.vertex) == active[s].end()) continue;
      if (slots[s].category == SlotCategory::Data) {
        g.data_slots.push_back(s);
        g.granted_rate_bps += slot_rate_bps(grid, slots[s].duration_us, c.phy_rate_bps);
      } else {
        g.basic_slots.push_back(s);
      }
    }
    if (g.data_slots.empty()) {
      g.starved_reason = "no DATA slot";
    } else if (!g.elastic && g.granted_rate_bps < g.demanded_rate_bps * (1.0 - 1e-12)) {
      g.starved_reason = "demand exceeds capacity";
    }
  }

  std::map<NodeId, ApSchedule> per_ap;
  for (int s = 0; s < static_cast<int>(slots.size()); ++s) {
    std::vector<int> here = active[s];
    std::sort(here.begin(), here.end(), [&](int a, int b) {
      return graph.vertex(a).id < graph.vertex(b).id;
    });
    for (int v : here) {
      const auto& vx = graph.vertex(v);
      auto& ap = per_ap[vx.ap];
      ap.ap = vx.ap;
      ap.schedule.entries.push_back(SlotAssignment{s, vx.sta, vx.direction});
    }
  }
  for (auto& [id, ap] : per_ap) {
    ap.entry = grid.sp;
    ap.structure = grid.structure;
    ap.schedule.allocation_id = grid.sp.allocation_id;
    out.aps.push_back(std::move(ap));
  }
  return out;
}

GlobalSchedule assign_slots(const InterferenceGraph& graph, std::span<const DemandSpec> demands,
                            const SlotPlanTemplate& grid, const McsTable& mcs,
                            const ControllerConfig& cfg) {
  return GreedyStrategy{}.plan(graph, demands, grid, mcs, cfg);
}

// ---- verification -----------------------------------------------------------

std::vector<GlobalViolation> verify_global(const GlobalSchedule& schedule,
                                           const InterferenceGraph& graph, const McsTable& mcs) {
  std::vector<GlobalViolation> out;
  const auto& structure = schedule.grid.structure;
  const int slot_count = static_cast<int>(structure.slots.size());
  std::vector<std::vector<int>> active(slot_count);

  for (const auto& ap : schedule.aps) {
    if (ap.structure != structure || ap.entry != schedule.grid.sp) {
      out.push_back({"grid mismatch", -1, "AP " + ap.ap.str() + " uses its own slot grid"});
      continue;
    }
    for (const auto& v : validate_schedule(ap.structure, ap.schedule)) {
      out.push_back({to_string(v.kind), v.slot_index, "AP " + ap.ap.str() + ": " + v.detail});
    }
    for (const auto& e : ap.schedule.entries) {
      if (!e.assignee || e.slot_index < 0 || e.slot_index >= slot_count) continue;
      auto v = graph.find(ap.ap, *e.assignee, e.direction);
      if (!v) {
        out.push_back({"unknown link", e.slot_index,
                       ap.ap.str() + "/" + e.assignee->str() + " " + to_string(e.direction)});
        continue;
      }
      active[e.slot_index].push_back(*v);
    }
  }

  const double floor_db = mcs.lowest().min_snr_db;
  std::set<int> weak_reported;
  std::set<NodeId> participants;
  std::set<NodeId> has_basic_tx;
  for (int s = 0; s < slot_count; ++s) {
    const auto& here = active[s];
    std::set<NodeId> txs;
    std::set<NodeId> rxs;
    bool dl = false;
    bool ul = false;
    for (std::size_t i = 0; i < here.size(); ++i) {
      const auto& a = graph.vertex(here[i]);
      txs.insert(a.id.tx);
      rxs.insert(a.id.rx);
      (a.direction == Direction::Downlink ? dl : ul) = true;
      if (a.snr_db < floor_db && weak_reported.insert(here[i]).second) {
        out.push_back({"link below MCS 0", s, a.id.str()});
      }
      if (structure.slots[s].category == SlotCategory::Data) participants.insert(a.sta);
      if (structure.slots[s].category == SlotCategory::Basic && a.direction == Direction::Uplink) {
        has_basic_tx.insert(a.sta);
      }
      for (std::size_t j = i + 1; j < here.size(); ++j) {
        if (here[i] == here[j] || graph.adjacent(here[i], here[j])) {
          out.push_back({"interference conflict", s,
                         a.id.str() + " with " + graph.vertex(here[j]).id.str()});
        }
      }
    }
    for (const auto& id : txs) {
      if (rxs.contains(id)) out.push_back({"node dual role", s, id.str()});
    }
    if (dl && ul) out.push_back({"duplex mixing", s, ""});
  }
  for (const auto& sta : participants) {
    if (!has_basic_tx.contains(sta)) out.push_back({"missing basic tx slot", -1, sta.str()});
  }
  return out;
}

}  // namespace fwa
