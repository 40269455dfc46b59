#pragma once

// Centralized controller: interference graph over directed trained links and
// a greedy planner that hands out a shared TDD slot grid to every AP.

#include <compare>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fwa/channel.hpp"
#include "fwa/domain.hpp"
#include "fwa/tdd_beamforming.hpp"
#include "fwa/tdd_schedule.hpp"

namespace fwa {

struct LinkId {
  NodeId tx;
  NodeId rx;
  auto operator<=>(const LinkId&) const = default;
  std::string str() const { return tx.str() + "->" + rx.str(); }
};

struct LinkVertex {
  LinkId id;
  NodeId ap;
  NodeId sta;
  Direction direction = Direction::Downlink;
  int tx_sector = 0;
  int rx_sector = 0;
  double snr_db = 0.0;
};

class InterferenceGraph {
 public:
  int add_vertex(LinkVertex vertex);
  void add_edge(int a, int b);

  std::span<const LinkVertex> vertices() const { return vertices_; }
  int size() const { return static_cast<int>(vertices_.size()); }
  const LinkVertex& vertex(int i) const { return vertices_.at(i); }
  std::optional<int> find(const LinkId& id) const;
  std::optional<int> find(const NodeId& ap, const NodeId& sta, Direction direction) const;

  bool adjacent(int a, int b) const;
  std::vector<int> neighbors(int i) const;
  int edge_count() const;

  /// Link pairs whose interference came from the channel model rather than a
  /// beam measurement report.
  const std::vector<std::pair<int, int>>& model_derived() const { return model_derived_; }
  void mark_model_derived(int a, int b) { model_derived_.emplace_back(a, b); }

 private:
  std::vector<LinkVertex> vertices_;
  std::vector<std::vector<char>> adj_;
  std::vector<std::pair<int, int>> model_derived_;
};

/// Each trained pair becomes a downlink and an uplink vertex. Two vertices
/// conflict when they share a node or when either transmitter, on its trained
/// sector, lands harmful power on the other receiver's trained sector.
/// Measured SNRs from `reports` take precedence over the channel model.
InterferenceGraph build_interference_graph(std::span<const NodeModel> nodes,
                                           std::span<const TrainedLink> links,
                                           std::span<const BeamMeasurementReport> reports,
                                           const ChannelModel& channel);

struct DemandSpec {
  NodeId ap;
  NodeId sta;
  Direction direction = Direction::Downlink;
  double demanded_rate_bps = 0.0;
  /// Saturated sources: take whatever is left, starved only with no slot.
  bool elastic = false;

  LinkId link() const {
    return direction == Direction::Downlink ? LinkId{ap, sta} : LinkId{sta, ap};
  }
};

/// The grid every AP shares: one TDD SP per beacon interval and its slot
/// structure.
struct SlotPlanTemplate {
  ExtendedScheduleEntry sp;
  TddSlotStructure structure;
  TimeUs beacon_interval_us = 0;
};

struct ControllerConfig {
  /// Share of DATA slots reserved for downlink when both directions have demand.
  double dl_fraction = 0.75;

  bool operator==(const ControllerConfig&) const = default;
};

struct ApSchedule {
  NodeId ap;
  ExtendedScheduleEntry entry;
  TddSlotStructure structure;
  TddSlotSchedule schedule;
};

struct LinkGrant {
  LinkId link;
  NodeId ap;
  NodeId sta;
  Direction direction = Direction::Downlink;
  double demanded_rate_bps = 0.0;
  bool elastic = false;
  double phy_rate_bps = 0.0;
  double granted_rate_bps = 0.0;
  std::vector<int> data_slots;
  std::vector<int> basic_slots;
  /// Empty unless starved.
  std::string starved_reason;

  bool starved() const { return !starved_reason.empty(); }
};

struct GlobalSchedule {
  SlotPlanTemplate grid;
  std::vector<ApSchedule> aps;
  std::vector<LinkGrant> grants;

  std::vector<LinkId> starved() const;
  double total_granted_bps() const;
  const LinkGrant* grant(const LinkId& link) const;
  /// Links active in slot `slot_index` of every interval.
  std::vector<LinkId> active_links(int slot_index) const;
};

class SchedulingStrategy {
 public:
  virtual ~SchedulingStrategy() = default;
  virtual GlobalSchedule plan(const InterferenceGraph& graph, std::span<const DemandSpec> demands,
                              const SlotPlanTemplate& grid, const McsTable& mcs,
                              const ControllerConfig& cfg) const = 0;
};

/// Demand-sorted first fit over the DATA pools, then a fill pass so no DATA
/// slot stays empty while a demanded link could still join it.
class GreedyStrategy final : public SchedulingStrategy {
 public:
  GlobalSchedule plan(const InterferenceGraph& graph, std::span<const DemandSpec> demands,
                      const SlotPlanTemplate& grid, const McsTable& mcs,
                      const ControllerConfig& cfg) const override;
};

GlobalSchedule assign_slots(const InterferenceGraph& graph, std::span<const DemandSpec> demands,
                            const SlotPlanTemplate& grid, const McsTable& mcs = {},
                            const ControllerConfig& cfg = {});

/// Rate a link gets from owning `slot_duration_us` of every interval.
double slot_rate_bps(const SlotPlanTemplate& grid, TimeUs slot_duration_us, double phy_rate_bps);

struct GlobalViolation {
  std::string kind;
  int slot_index = -1;
  std::string detail;
};

/// Every rule a global schedule breaks; empty means conflict free.
std::vector<GlobalViolation> verify_global(const GlobalSchedule& schedule,
                                           const InterferenceGraph& graph,
                                           const McsTable& mcs = {});

}  // namespace fwa
