#pragma once

// Link maintenance: Announce frames carrying Heartbeat / Keep Alive /
// Bandwidth Request elements, unsolicited periodic link measurement, keep-alive
// supervision, transmit power control and clock drift.

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fwa/channel.hpp"
#include "fwa/domain.hpp"
#include "fwa/frames.hpp"
#include "fwa/tdd_schedule.hpp"

namespace fwa {

struct MaintenanceConfig {
  TimeUs keepalive_period_us = 100'000;
  TimeUs keepalive_timeout_us = 1'000'000;
  double tpc_target_rsni_db = 20.0;
  double tpc_max_step_db = 3.0;
  bool tpc_enabled = false;
  double sync_tolerance_us = 1.0;
  /// 0 disables the resync stub.
  TimeUs resync_period_us = 0;
  /// 0 disables uplink bandwidth requests.
  TimeUs bandwidth_request_period_us = 0;

  bool operator==(const MaintenanceConfig&) const = default;
};

/// Throws InvalidArgument when elements are empty or a broadcast asks for an ack.
AnnounceFrame build_announce(const NodeId& sender, std::optional<NodeId> receiver,
                             std::vector<MaintenanceElement> elements, bool needs_ack = false,
                             bool encrypted = false);

TddFrame announce_frame(AnnounceFrame announce, const FrameSizes& sizes);

/// Throws InvalidArgument unless interval > 0 and count >= 1.
void validate(const PeriodicReportRequest& request);

struct PeriodicReportDecision {
  bool accepted = false;
  /// One entry per requested report; empty on reject.
  std::vector<TimeUs> emission_times_us;
  std::string reason;
};

/// Accepts when every window [start + k*interval, start + (k+1)*interval)
/// contains the start of a Basic slot in which `responder` transmits; the
/// report goes out at the start of the first such slot. `responder_direction`
/// is Uplink when the responder is the STA named in the slot assignments.
PeriodicReportDecision handle_periodic_report_request(const PeriodicReportRequest& request,
                                                      std::span<const AbsoluteSlot> slots,
                                                      const NodeId& sta,
                                                      Direction responder_direction =
                                                          Direction::Uplink);

/// One direction of a link as seen by the node that measures it.
struct MeasuredLink {
  const NodeModel* transmitter = nullptr;
  int tx_sector = 0;
  const NodeModel* reporter = nullptr;
  int rx_sector = 0;
  bool trained = false;
};

/// Samples the channel for `link` and stamps `next_sequence`, which is then
/// incremented. Throws ProtocolError for an untrained link.
LinkMeasurementReport emit_link_measurement_report(const MeasuredLink& link,
                                                   const ChannelModel& channel,
                                                   std::uint32_t& next_sequence);

enum class Liveness { Alive, Dead };

std::string to_string(Liveness liveness);

/// Dead only when strictly more than `timeout_us` has passed.
Liveness keepalive_check(TimeUs last_rx_us, TimeUs now_us, TimeUs timeout_us);

/// Proportional power step toward `target_rsni_db`, limited to ±max_step_db
/// and then to the node's power limits.
double tpc_update(double current_dbm, double measured_rsni_db, double target_rsni_db,
                  const PowerLimits& limits, double max_step_db = 3.0);

/// Integrates drift over `dt_us`; a synchronized clock whose offset leaves
/// the tolerance drops to holdover.
ClockModel advance_clock(ClockModel clock, TimeUs dt_us, double sync_tolerance_us = 1.0);

/// Stub for whatever time-sync protocol the deployment runs.
ClockModel resync_clock(ClockModel clock);

}  // namespace fwa
