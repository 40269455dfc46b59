#pragma once

// Discrete-event world: beamforming, controller planning, then slot-driven
// data and maintenance traffic over the shared TDD grid.

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "fwa/channel.hpp"
#include "fwa/controller.hpp"
#include "fwa/domain.hpp"
#include "fwa/frames.hpp"
#include "fwa/link_maintenance.hpp"
#include "fwa/tdd_beamforming.hpp"
#include "fwa/tdd_schedule.hpp"
#include "fwa/trace.hpp"

namespace fwa {

enum class TrafficKind { Saturated, Cbr, Poisson };

std::string to_string(TrafficKind kind);
TrafficKind traffic_kind_from_string(const std::string& text);

struct FlowSpec {
  NodeId ap;
  NodeId sta;
  Direction direction = Direction::Downlink;
  TrafficKind traffic = TrafficKind::Saturated;
  /// Payload rate for CBR and Poisson sources; ignored when saturated.
  double rate_bps = 0.0;
  int traffic_id = 0;
  /// Relative to the start of the data phase.
  TimeUs start_us = 0;

  bool operator==(const FlowSpec&) const = default;
  LinkId link() const {
    return direction == Direction::Downlink ? LinkId{ap, sta} : LinkId{sta, ap};
  }
};

struct BeamformingRun {
  BeamformingMode mode = BeamformingMode::Individual;
  NodeId initiator;
  std::vector<NodeId> responders;
  BeamformingTiming timing;

  bool operator==(const BeamformingRun&) const = default;
};

/// A requester asks a responder for periodic Link Measurement Reports with a
/// single request frame. `request.start_time_us` is relative to the data phase.
struct MeasurementSetup {
  NodeId requester;
  NodeId responder;
  PeriodicReportRequest request;

  bool operator==(const MeasurementSetup& o) const {
    return requester == o.requester && responder == o.responder &&
           request.start_time_us == o.request.start_time_us &&
           request.interval_us == o.request.interval_us && request.count == o.request.count;
  }
};

/// What-if: from `at_us` (relative to the data phase) the pair sees `loss_db`
/// extra attenuation.
struct LossEvent {
  TimeUs at_us = 0;
  NodeId a;
  NodeId b;
  double loss_db = 0.0;

  bool operator==(const LossEvent&) const = default;
};

struct WorldConfig {
  std::uint64_t seed = 1;
  std::vector<NodeModel> nodes;
  LinkBudgetConfig link_budget;
  std::map<std::pair<NodeId, NodeId>, double> loss_offsets;
  McsTable mcs;
  FrameSizes sizes;

  TimeUs beacon_interval_us = 100'000;
  /// The TDD data SP, relative to each beacon interval start.
  ExtendedScheduleEntry data_sp{1, 0, 25'600, true};
  TddSlotStructure structure = default_slot_structure(1);
  /// Tail of every slot kept idle so frames land before the slot ends.
  TimeUs slot_guard_us = 1;

  /// Beamforming runs execute back to back, one training window each.
  std::vector<BeamformingRun> beamforming;
  TimeUs training_window_us = 25'600;

  ControllerConfig controller;
  std::vector<FlowSpec> flows;
  MaintenanceConfig maintenance;
  std::vector<MeasurementSetup> measurements;
  std::vector<LossEvent> events;

  bool operator==(const WorldConfig&) const = default;
};

/// Throws InvalidArgument on the first structural problem.
void validate(const WorldConfig& cfg);

struct LinkMetrics {
  LinkId link;
  NodeId ap;
  NodeId sta;
  Direction direction = Direction::Downlink;
  double demanded_rate_bps = 0.0;
  double granted_rate_bps = 0.0;
  bool starved = false;

  /// MAC bits (payload plus overhead) of whole MPDUs.
  std::int64_t offered_bits = 0;
  std::int64_t delivered_bits = 0;
  std::int64_t dropped_bits = 0;
  std::int64_t queued_bits = 0;
  /// Payload bits of delivered MPDUs.
  std::int64_t goodput_bits = 0;
  /// Bits carried by decoded data PPDUs, fragments included.
  std::int64_t phy_data_bits = 0;
  double data_airtime_us = 0.0;
  std::int64_t mpdus_delivered = 0;
  std::int64_t retries = 0;

  std::vector<TimeUs> latency_us;
  std::vector<TimeUs> ack_delay_us;
  std::vector<std::pair<TimeUs, double>> snr_trace;
  int last_mcs = -1;
  double tx_power_dbm = 0.0;
};

struct ReportEvent {
  TimeUs time_us = 0;
  NodeId reporter;
  NodeId requester;
  double rsni_db = 0.0;
  std::uint32_t sequence_number = 0;
};

struct TpcEvent {
  TimeUs time_us = 0;
  LinkId link;
  double before_dbm = 0.0;
  double after_dbm = 0.0;
  double measured_rsni_db = 0.0;
};

struct Metrics {
  TimeUs data_start_us = 0;
  TimeUs end_us = 0;
  std::vector<LinkMetrics> links;
  /// Used airtime over usable airtime of every assigned DATA slot, by slot index.
  std::vector<double> data_slot_utilization;
  double data_utilization = 0.0;

  int beamforming_runs = 0;
  int ssw_transmissions = 0;
  int trained_links = 0;
  std::vector<TimeUs> lm_request_times_us;
  std::vector<ReportEvent> reports;
  std::vector<TpcEvent> tpc_updates;
  std::vector<LinkId> dead_links;
  int replans = 0;
  int prohibited_frames = 0;
  int bandwidth_requests = 0;
  std::vector<NodeId> holdover_nodes;
  std::size_t trace_records = 0;

  const LinkMetrics* link(const LinkId& id) const;
};

class World {
 public:
  /// `trace` may be null and must outlive the world.
  explicit World(WorldConfig cfg, TraceSink* trace = nullptr);
  ~World();
  World(const World&) = delete;
  World& operator=(const World&) = delete;

  /// Runs the beamforming phase and plans the first schedule. Idempotent.
  const GlobalSchedule& prepare();

  /// Advances the simulation to `t_end_us` (absolute) and returns metrics.
  Metrics run_until(TimeUs t_end_us);

  /// Queues a management frame for its link's next Basic slot. Frames barred
  /// from TDD slots are dropped with a trace record and false is returned.
  bool enqueue_frame(TddFrame frame);

  Metrics collect_metrics() const;

  TimeUs now() const;
  TimeUs data_start_us() const;
  const GlobalSchedule& plan() const;
  const InterferenceGraph& graph() const;
  const std::vector<BeamformingResult>& training() const;
  const WorldConfig& config() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

/// Convenience wrapper over World::run_until.
Metrics run_until(World& world, TimeUs t_end_us);

}  // namespace fwa
