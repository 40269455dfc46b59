#pragma once

// Topology and grid generators shared by the controller tests and the
// acceptance suite.

#include <algorithm>
#include <cmath>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "fwa/controller.hpp"
#include "oracles.hpp"

namespace fixtures {

using namespace fwa;

// Sector 7 of this codebook points along +x, sector 15 along -x.
inline Codebook grid16() { return Codebook::uniform(16, 25.0, -5.0, 360.0, 11.25); }

inline NodeModel node(const std::string& id, Position p, Role role) { return {NodeId(id), role, p, grid16()}; }

inline TrainedLink train(const NodeModel& ap, const NodeModel& sta) {
  const auto best = oracle::brute_force_best(ap, sta);
  return {ap.id, sta.id, best.tx, best.rx, best.snr};
}

inline SlotPlanTemplate default_grid() {
  return {{1, 0, 25'600, true}, default_slot_structure(1), 25'600};
}

/// 24 slots of 66 us; the listed indices are Basic.
inline SlotPlanTemplate grid_with_basic(const std::set<int>& basic) {
  TddSlotStructure s{1, 1600, {}};
  for (int i = 0; i < 24; ++i) {
    s.slots.push_back({i * 66, 66, basic.contains(i) ? SlotCategory::Basic : SlotCategory::Data});
  }
  return {{1, 0, 25'600, true}, s, 25'600};
}

/// Pairs "a<i>"/"s<i>" with a DL and an UL vertex each at 30 dB, plus the
/// shared-node edges between them.
inline InterferenceGraph synthetic(int pairs) {
  InterferenceGraph g;
  for (int i = 0; i < pairs; ++i) {
    const NodeId ap("a" + std::to_string(i));
    const NodeId sta("s" + std::to_string(i));
    const int dl = g.add_vertex({{ap, sta}, ap, sta, Direction::Downlink, 0, 0, 30.0});
    const int ul = g.add_vertex({{sta, ap}, ap, sta, Direction::Uplink, 0, 0, 30.0});
    g.add_edge(dl, ul);
  }
  return g;
}

inline DemandSpec elastic(const LinkVertex& v) { return {v.ap, v.sta, v.direction, 0.0, true}; }

struct RandomCase {
  InterferenceGraph graph;
  std::vector<DemandSpec> demands;
};

inline RandomCase random_synthetic(std::mt19937_64& rng, int pairs, double edge_p) {
  RandomCase c{synthetic(pairs), {}};
  std::bernoulli_distribution edge(edge_p);
  for (int i = 0; i < c.graph.size(); ++i) {
    for (int j = i + 1; j < c.graph.size(); ++j) {
      if (edge(rng)) c.graph.add_edge(i, j);
    }
  }
  std::uniform_int_distribution<int> kind(0, 3);
  std::uniform_real_distribution<double> rate(1e8, 3e9);
  for (const auto& v : c.graph.vertices()) {
    switch (kind(rng)) {
      case 0: break;
      case 1: c.demands.push_back(elastic(v)); break;
      default: c.demands.push_back({v.ap, v.sta, v.direction, rate(rng), false});
    }
  }
  return c;
}

/// Random FWA deployment: APs on a coarse grid, each STA attached to its
/// nearest AP, every link trained on the exhaustive best pair.
struct Deployment {
  std::vector<NodeModel> nodes;
  std::vector<TrainedLink> links;
  std::vector<DemandSpec> demands;
};

inline Deployment random_deployment(std::mt19937_64& rng, int max_nodes) {
  Deployment d;
  std::uniform_int_distribution<int> n_nodes(2, max_nodes);
  const int n = n_nodes(rng);
  const int aps = std::max(1, n / 4);
  std::uniform_real_distribution<double> coord(-400.0, 400.0);
  std::set<std::pair<long, long>> used;
  auto fresh = [&]() {
    while (true) {
      Position p{std::round(coord(rng)), std::round(coord(rng))};
      if (used.insert({std::lround(p.x_m), std::lround(p.y_m)}).second) return p;
    }
  };
  for (int i = 0; i < aps; ++i) d.nodes.push_back(node("ap" + std::to_string(i), fresh(), Role::DnAp));
  for (int i = aps; i < n; ++i) d.nodes.push_back(node("sta" + std::to_string(i), fresh(), Role::CnSta));
  std::uniform_int_distribution<int> kind(0, 3);
  std::uniform_real_distribution<double> rate(1e7, 2e9);
  for (int i = aps; i < n; ++i) {
    int best = 0;
    for (int a = 1; a < aps; ++a) {
      if (distance_m(d.nodes[a].position, d.nodes[i].position) <
          distance_m(d.nodes[best].position, d.nodes[i].position)) {
        best = a;
      }
    }
    const auto link = train(d.nodes[best], d.nodes[i]);
    if (link.snr_db < 1.0) continue;
    d.links.push_back(link);
    for (Direction dir : {Direction::Downlink, Direction::Uplink}) {
      const int k = kind(rng);
      if (k == 0) continue;
      d.demands.push_back({d.nodes[best].id, d.nodes[i].id, dir, k == 1 ? 0.0 : rate(rng), k == 1});
    }
  }
  return d;
}

inline std::vector<int> data_slots(const SlotPlanTemplate& grid) {
  std::vector<int> out;
  for (int s = 0; s < static_cast<int>(grid.structure.slots.size()); ++s) {
    if (grid.structure.slots[s].category == SlotCategory::Data) out.push_back(s);
  }
  return out;
}

/// Bitmask of graph vertices active in `slot`.
inline std::uint32_t slot_mask(const GlobalSchedule& plan, const InterferenceGraph& g, int slot) {
  std::uint32_t mask = 0;
  for (const auto& id : plan.active_links(slot)) mask |= 1u << *g.find(id);
  return mask;
}

}  // namespace fixtures
