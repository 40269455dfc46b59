#pragma once

// Every MAC frame the simulator moves over the air, as one tagged union.

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "fwa/domain.hpp"

namespace fwa {

enum class FrameKind {
  Data,
  Ack,
  BlockAck,
  Announce,
  TddSsw,
  TddSswFeedback,
  TddSswAck,
  LinkMeasurementRequest,
  LinkMeasurementReport,
  Rts,
  DmgCts,
  Grant,
  GrantAck,
};

std::string to_string(FrameKind kind);
FrameKind frame_kind_from_string(const std::string& text);

// ---- beamforming ---------------------------------------------------------

struct TddSswFrame {
  int tx_sector_index = 0;
  /// Offsets are relative to the start of this frame's transmission.
  std::map<NodeId, TimeUs> feedback_offset_us;
  std::map<NodeId, TimeUs> ack_offset_us;
  bool end_of_training = false;
  /// Measurement mode only: SSW frames still to come after this one.
  std::optional<int> slot_countdown;
};

struct TddSswFeedbackFrame {
  NodeId responder_id;
  int responder_sector_index = 0;
  int echoed_tx_sector_index = 0;
};

struct TddSswAckFrame {
  int initiator_tx_sector = 0;
  int responder_feedback_sector = 0;
  double measured_snr_db = 0.0;
  bool end_of_training = false;
  /// (initiator Announce, responder Announce), relative to the Ack start.
  std::pair<TimeUs, TimeUs> announce_offsets_us{0, 0};
};

// ---- link maintenance elements --------------------------------------------

struct SlotGrant {
  int slot_index = 0;
  Direction direction = Direction::Downlink;
  bool operator==(const SlotGrant&) const = default;
};

struct HeartbeatElement {
  std::map<std::string, double> updated_params;
  std::vector<SlotGrant> tx_rx_slot_grants;
};

struct KeepAliveElement {
  TimeUs period_us = 0;
  std::vector<int> negotiated_rx_slots;
};

struct TddBandwidthRequestElement {
  std::uint64_t queue_size_bytes = 0;
  double arrival_rate_bps = 0.0;
  int traffic_id = 0;
};

struct TpcFields {
  double tx_power_dbm = 0.0;
  double link_margin_db = 0.0;
};

struct ChainParams {
  int chain = 0;
  double rcpi_dbm = 0.0;
  double rsni_db = 0.0;
};

/// PHY counters are carried but the simulator leaves them at zero.
struct DmgLinkMarginElement {
  std::vector<ChainParams> per_chain_params;
  std::vector<TpcFields> tpc_fields;
  std::uint64_t ppdu_count = 0;
  std::uint64_t ldpc_codewords = 0;
  std::uint64_t sc_blocks = 0;
  std::uint64_t ofdm_symbols = 0;
};

struct TddSynchronizationElement {
  SyncQuality clock_quality = SyncQuality::GlobalSync;
  double accuracy_us = 0.0;
};

struct PeriodicReportRequest {
  TimeUs start_time_us = 0;
  TimeUs interval_us = 0;
  int count = 0;
};

using MaintenanceElement =
    std::variant<HeartbeatElement, KeepAliveElement, TddBandwidthRequestElement,
                 DmgLinkMarginElement, TddSynchronizationElement, PeriodicReportRequest>;

std::string element_name(const MaintenanceElement& element);

struct AnnounceFrame {
  NodeId sender;
  std::optional<NodeId> receiver;  // nullopt = broadcast
  bool needs_ack = false;
  bool encrypted = false;
  std::vector<MaintenanceElement> elements;
};

struct LinkMeasurementRequestFrame {
  std::optional<PeriodicReportRequest> periodic;
};

struct LinkMeasurementReport {
  NodeId measured_tx;  // peer whose signal was measured
  NodeId reporter;
  double rcpi_dbm = 0.0;
  double rsni_db = 0.0;
  std::vector<TpcFields> tpc_fields;
  std::uint32_t sequence_number = 0;
};

// ---- data plane ------------------------------------------------------------

struct DataFragment {
  std::uint64_t mpdu_seq = 0;
  std::int64_t offset_bits = 0;
  std::int64_t bits = 0;
  std::int64_t mpdu_bits = 0;
  TimeUs eligible_us = 0;
  int traffic_id = 0;
};

struct DataFrame {
  std::vector<DataFragment> fragments;
  int mcs_index = 0;
  double phy_rate_bps = 0.0;
};

struct AckFrame {};

struct BlockAckFrame {
  std::vector<std::uint64_t> acked_seqs;
  std::uint64_t highest_seen = 0;
};

/// RTS / DMG CTS / Grant / Grant Ack: modeled only to be rejected in TDD slots.
struct ControlFrame {};

using FrameBody =
    std::variant<ControlFrame, DataFrame, AckFrame, BlockAckFrame, AnnounceFrame, TddSswFrame,
                 TddSswFeedbackFrame, TddSswAckFrame, LinkMeasurementRequestFrame,
                 LinkMeasurementReport>;

struct TddFrame {
  FrameKind kind = FrameKind::Data;
  NodeId tx;
  NodeId rx;  // empty for broadcast
  std::int64_t size_bits = 0;
  FrameBody body;
};

/// Default on-air sizes; all are scenario-configurable.
struct FrameSizes {
  int data_payload_bytes = 1500;
  int data_overhead_bytes = 40;
  int ssw_bytes = 32;
  int ack_bytes = 16;
  int block_ack_bytes = 32;
  int announce_bytes = 128;
  int link_measurement_bytes = 64;
  int rts_bytes = 20;

  bool operator==(const FrameSizes&) const = default;
};

/// Bytes on air for a non-data frame kind.
int control_frame_bytes(const FrameSizes& sizes, FrameKind kind);

/// Airtime of `bits` at `rate_bps`, rounded up to whole microseconds.
TimeUs airtime_us(std::int64_t bits, double rate_bps);

/// Airtime without rounding, for reporting.
double exact_airtime_us(std::int64_t bits, double rate_bps);

/// Bits that fit into `window_us` at `rate_bps`.
std::int64_t capacity_bits(TimeUs window_us, double rate_bps);

TddFrame make_control_frame(FrameKind kind, const NodeId& tx, const NodeId& rx,
                            const FrameSizes& sizes);

}  // namespace fwa
