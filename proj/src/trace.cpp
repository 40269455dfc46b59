#include "fwa/trace.hpp"

#include <ostream>

namespace fwa {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};

nlohmann::ordered_json element_json(const MaintenanceElement& element) {
  nlohmann::ordered_json j;
  j["element"] = element_name(element);
  std::visit(overloaded{
                 [&](const HeartbeatElement& e) {
                   j["grants"] = e.tx_rx_slot_grants.size();
                   j["params"] = e.updated_params;
                 },
                 [&](const KeepAliveElement& e) {
                   j["period_us"] = e.period_us;
                   j["rx_slots"] = e.negotiated_rx_slots;
                 },
                 [&](const TddBandwidthRequestElement& e) {
                   j["queue_size_bytes"] = e.queue_size_bytes;
                   j["arrival_rate_bps"] = e.arrival_rate_bps;
                   j["traffic_id"] = e.traffic_id;
                 },
                 [&](const DmgLinkMarginElement& e) { j["chains"] = e.per_chain_params.size(); },
                 [&](const TddSynchronizationElement& e) {
                   j["clock_quality"] = to_string(e.clock_quality);
                   j["accuracy_us"] = e.accuracy_us;
                 },
                 [&](const PeriodicReportRequest& e) {
                   j["start_time_us"] = e.start_time_us;
                   j["interval_us"] = e.interval_us;
                   j["count"] = e.count;
                 },
             },
             element);
  return j;
}

}  // namespace

void TraceSink::emit(TimeUs t, std::uint64_t seq, const std::string& kind, const std::string& node,
                     nlohmann::ordered_json slot, nlohmann::ordered_json frame,
                     const std::string& outcome) {
  nlohmann::ordered_json record;
  record["t"] = t;
  record["seq"] = seq;
  record["kind"] = kind;
  record["node"] = node;
  record["slot"] = std::move(slot);
  record["frame"] = std::move(frame);
  record["outcome"] = outcome;
  if (out_ != nullptr) *out_ << record.dump() << '\n';
  ++count_;
  if (keep_) records_.push_back(std::move(record));
}

nlohmann::ordered_json to_json(const AbsoluteSlot& slot) {
  nlohmann::ordered_json j;
  j["alloc"] = slot.sp_allocation_id;
  j["interval"] = slot.interval_index;
  j["index"] = slot.slot_index;
  j["start_us"] = slot.start_us;
  j["duration_us"] = slot.duration_us;
  j["category"] = to_string(slot.category);
  j["assignee"] = slot.assignee ? nlohmann::ordered_json(slot.assignee->str()) : nlohmann::ordered_json(nullptr);
  j["dir"] = to_string(slot.direction);
  return j;
}

nlohmann::ordered_json to_json(const TddFrame& frame) {
  nlohmann::ordered_json j;
  j["type"] = to_string(frame.kind);
  j["tx"] = frame.tx.str();
  j["rx"] = frame.rx.empty() ? nlohmann::ordered_json(nullptr) : nlohmann::ordered_json(frame.rx.str());
  j["bits"] = frame.size_bits;
  std::visit(overloaded{
                 [](const ControlFrame&) {},
                 [](const AckFrame&) {},
                 [&](const DataFrame& f) {
                   j["mcs"] = f.mcs_index;
                   j["fragments"] = f.fragments.size();
                   if (!f.fragments.empty()) {
                     j["first_seq"] = f.fragments.front().mpdu_seq;
                     j["last_seq"] = f.fragments.back().mpdu_seq;
                   }
                 },
                 [&](const BlockAckFrame& f) {
                   j["acked"] = f.acked_seqs.size();
                   j["highest_seen"] = f.highest_seen;
                 },
                 [&](const AnnounceFrame& f) {
                   j["needs_ack"] = f.needs_ack;
                   j["broadcast"] = !f.receiver.has_value();
                   auto elements = nlohmann::ordered_json::array();
                   for (const auto& e : f.elements) elements.push_back(element_json(e));
                   j["elements"] = std::move(elements);
                 },
                 [&](const TddSswFrame& f) {
                   j["tx_sector_index"] = f.tx_sector_index;
                   j["end_of_training"] = f.end_of_training;
                   if (f.slot_countdown) {
                     j["slot_countdown"] = *f.slot_countdown;
                   } else {
                     nlohmann::ordered_json offsets;
                     for (const auto& [id, off] : f.feedback_offset_us) {
                       offsets[id.str()] = {off, f.ack_offset_us.at(id)};
                     }
                     j["offsets"] = std::move(offsets);
                   }
                 },
                 [&](const TddSswFeedbackFrame& f) {
                   j["responder"] = f.responder_id.str();
                   j["responder_sector_index"] = f.responder_sector_index;
                   j["echoed_tx_sector_index"] = f.echoed_tx_sector_index;
                 },
                 [&](const TddSswAckFrame& f) {
                   j["initiator_tx_sector"] = f.initiator_tx_sector;
                   j["responder_feedback_sector"] = f.responder_feedback_sector;
                   j["measured_snr_db"] = f.measured_snr_db;
                   j["end_of_training"] = f.end_of_training;
                 },
                 [&](const LinkMeasurementRequestFrame& f) {
                   if (f.periodic) j["periodic"] = element_json(*f.periodic);
                 },
                 [&](const LinkMeasurementReport& f) {
                   j["rcpi_dbm"] = f.rcpi_dbm;
                   j["rsni_db"] = f.rsni_db;
                   j["sequence_number"] = f.sequence_number;
                 },
             },
             frame.body);
  return j;
}

}  // namespace fwa
