#include "fwa/link_maintenance.hpp"

#include <algorithm>
#include <cmath>

#include "fwa/errors.hpp"

namespace fwa {

AnnounceFrame build_announce(const NodeId& sender, std::optional<NodeId> receiver,
                             std::vector<MaintenanceElement> elements, bool needs_ack,
                             bool encrypted) {
  if (elements.empty()) throw InvalidArgument("Announce frame needs at least one element");
  if (!receiver && needs_ack) throw InvalidArgument("broadcast Announce cannot request an ack");
  if (sender.empty()) throw InvalidArgument("Announce frame needs a sender");
  AnnounceFrame frame;
  frame.sender = sender;
  frame.receiver = std::move(receiver);
  frame.needs_ack = needs_ack;
  frame.encrypted = encrypted;
  frame.elements = std::move(elements);
  return frame;
}

TddFrame announce_frame(AnnounceFrame announce, const FrameSizes& sizes) {
  TddFrame frame;
  frame.kind = FrameKind::Announce;
  frame.tx = announce.sender;
  if (announce.receiver) frame.rx = *announce.receiver;
  frame.size_bits = static_cast<std::int64_t>(sizes.announce_bytes) * 8;
  frame.body = std::move(announce);
  return frame;
}

void validate(const PeriodicReportRequest& request) {
  if (request.interval_us <= 0) throw InvalidArgument("report interval must be positive");
  if (request.count < 1) throw InvalidArgument("report count must be at least 1");
  if (request.start_time_us < 0) throw InvalidArgument("report start time is negative");
}

PeriodicReportDecision handle_periodic_report_request(const PeriodicReportRequest& request,
                                                      std::span<const AbsoluteSlot> slots,
                                                      const NodeId& sta,
                                                      Direction responder_direction) {
  validate(request);
  std::vector<const AbsoluteSlot*> tx_slots;
  for (const auto& slot : slots) {
    if (slot.category == SlotCategory::Basic && slot.assignee == sta &&
        slot.direction == responder_direction) {
      tx_slots.push_back(&slot);
    }
  }
  std::sort(tx_slots.begin(), tx_slots.end(),
            [](const AbsoluteSlot* a, const AbsoluteSlot* b) { return a->start_us < b->start_us; });

  PeriodicReportDecision decision;
  for (int k = 0; k < request.count; ++k) {
    const TimeUs from = request.start_time_us + k * request.interval_us;
    const TimeUs until = from + request.interval_us;
    auto it = std::lower_bound(tx_slots.begin(), tx_slots.end(), from,
                               [](const AbsoluteSlot* s, TimeUs t) { return s->start_us < t; });
    if (it == tx_slots.end() || (*it)->start_us >= until) {
      decision.emission_times_us.clear();
      decision.reason = "no transmit slot for report " + std::to_string(k) + " in [" +
                        std::to_string(from) + ", " + std::to_string(until) + ")";
      return decision;
    }
    decision.emission_times_us.push_back((*it)->start_us);
  }
  decision.accepted = true;
  return decision;
}

LinkMeasurementReport emit_link_measurement_report(const MeasuredLink& link,
                                                   const ChannelModel& channel,
                                                   std::uint32_t& next_sequence) {
  if (link.transmitter == nullptr || link.reporter == nullptr) {
    throw InvalidArgument("measured link needs both endpoints");
  }
  if (!link.trained) {
    throw ProtocolError("link " + link.transmitter->id.str() + "->" + link.reporter->id.str() +
                        " is not trained");
  }
  const LinkSample sample =
      channel.sample(*link.transmitter, link.tx_sector, *link.reporter, link.rx_sector);
  LinkMeasurementReport report;
  report.measured_tx = link.transmitter->id;
  report.reporter = link.reporter->id;
  report.rcpi_dbm = sample.rcpi_dbm;
  report.rsni_db = sample.rsni_db;
  report.tpc_fields.push_back(TpcFields{link.reporter->tx_power_dbm, sample.rsni_db});
  report.sequence_number = next_sequence++;
  return report;
}

std::string to_string(Liveness liveness) {
  return liveness == Liveness::Alive ? "ALIVE" : "DEAD";
}

Liveness keepalive_check(TimeUs last_rx_us, TimeUs now_us, TimeUs timeout_us) {
  if (timeout_us <= 0) throw InvalidArgument("keep-alive timeout must be positive");
  return now_us - last_rx_us > timeout_us ? Liveness::Dead : Liveness::Alive;
}

double tpc_update(double current_dbm, double measured_rsni_db, double target_rsni_db,
                  const PowerLimits& limits, double max_step_db) {
  if (limits.min_dbm > limits.max_dbm) throw InvalidArgument("power limits are inverted");
  if (current_dbm < limits.min_dbm || current_dbm > limits.max_dbm) {
    throw InvalidArgument("current power outside limits");
  }
  if (!(max_step_db > 0.0)) throw InvalidArgument("TPC step must be positive");
  const double step = std::clamp(measured_rsni_db - target_rsni_db, -max_step_db, max_step_db);
  return std::clamp(current_dbm - step, limits.min_dbm, limits.max_dbm);
}

ClockModel advance_clock(ClockModel clock, TimeUs dt_us, double sync_tolerance_us) {
  if (dt_us < 0) throw InvalidArgument("clock cannot run backwards");
  clock.offset_us += clock.drift_ppm * static_cast<double>(dt_us) / 1e6;
  if (clock.quality == SyncQuality::GlobalSync && std::abs(clock.offset_us) > sync_tolerance_us) {
    clock.quality = SyncQuality::Holdover;
  }
  return clock;
}

ClockModel resync_clock(ClockModel clock) {
  clock.offset_us = 0.0;
  clock.quality = SyncQuality::GlobalSync;
  return clock;
}

}  // namespace fwa
