#include "fwa/frames.hpp"

#include <array>
#include <cmath>

#include "fwa/errors.hpp"

namespace fwa {

namespace {

constexpr std::array<std::pair<FrameKind, const char*>, 13> kKindNames{{
    {FrameKind::Data, "Data"},
    {FrameKind::Ack, "Ack"},
    {FrameKind::BlockAck, "BlockAck"},
    {FrameKind::Announce, "Announce"},
    {FrameKind::TddSsw, "TddSsw"},
    {FrameKind::TddSswFeedback, "TddSswFeedback"},
    {FrameKind::TddSswAck, "TddSswAck"},
    {FrameKind::LinkMeasurementRequest, "LinkMeasurementRequest"},
    {FrameKind::LinkMeasurementReport, "LinkMeasurementReport"},
    {FrameKind::Rts, "RTS"},
    {FrameKind::DmgCts, "DMG_CTS"},
    {FrameKind::Grant, "Grant"},
    {FrameKind::GrantAck, "GrantAck"},
}};

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};

}  // namespace

std::string to_string(FrameKind kind) {
  for (const auto& [k, name] : kKindNames) {
    if (k == kind) return name;
  }
  return "?";
}

FrameKind frame_kind_from_string(const std::string& text) {
  for (const auto& [k, name] : kKindNames) {
    if (text == name) return k;
  }
  throw InvalidArgument("unknown frame kind '" + text + "'");
}

std::string element_name(const MaintenanceElement& element) {
  return std::visit(overloaded{
                        [](const HeartbeatElement&) { return "Heartbeat"; },
                        [](const KeepAliveElement&) { return "KeepAlive"; },
                        [](const TddBandwidthRequestElement&) { return "TddBandwidthRequest"; },
                        [](const DmgLinkMarginElement&) { return "DmgLinkMargin"; },
                        [](const TddSynchronizationElement&) { return "TddSynchronization"; },
                        [](const PeriodicReportRequest&) { return "PeriodicReportRequest"; },
                    },
                    element);
}

int control_frame_bytes(const FrameSizes& sizes, FrameKind kind) {
  switch (kind) {
    case FrameKind::Ack: return sizes.ack_bytes;
    case FrameKind::BlockAck: return sizes.block_ack_bytes;
    case FrameKind::Announce: return sizes.announce_bytes;
    case FrameKind::TddSsw:
    case FrameKind::TddSswFeedback:
    case FrameKind::TddSswAck: return sizes.ssw_bytes;
    case FrameKind::LinkMeasurementRequest:
    case FrameKind::LinkMeasurementReport: return sizes.link_measurement_bytes;
    case FrameKind::Rts:
    case FrameKind::DmgCts:
    case FrameKind::Grant:
    case FrameKind::GrantAck: return sizes.rts_bytes;
    case FrameKind::Data: break;
  }
  throw InvalidArgument("data frames have no fixed size");
}

TimeUs airtime_us(std::int64_t bits, double rate_bps) {
  if (!(rate_bps > 0.0)) throw InvalidArgument("rate must be positive");
  // Rates in the tables are whole Mbps, so the product is exact in integers.
  const auto rate_mbps = static_cast<std::int64_t>(std::llround(rate_bps / 1e6));
  if (static_cast<double>(rate_mbps) * 1e6 == rate_bps) {
    return (bits + rate_mbps - 1) / rate_mbps;
  }
  return static_cast<TimeUs>(std::ceil(static_cast<double>(bits) * 1e6 / rate_bps));
}

double exact_airtime_us(std::int64_t bits, double rate_bps) {
  return static_cast<double>(bits) * 1e6 / rate_bps;
}

std::int64_t capacity_bits(TimeUs window_us, double rate_bps) {
  if (window_us <= 0) return 0;
  const auto rate_mbps = static_cast<std::int64_t>(std::llround(rate_bps / 1e6));
  if (static_cast<double>(rate_mbps) * 1e6 == rate_bps) return window_us * rate_mbps;
  return static_cast<std::int64_t>(std::floor(static_cast<double>(window_us) * rate_bps / 1e6));
}

TddFrame make_control_frame(FrameKind kind, const NodeId& tx, const NodeId& rx,
                            const FrameSizes& sizes) {
  TddFrame frame;
  frame.kind = kind;
  frame.tx = tx;
  frame.rx = rx;
  frame.size_bits = static_cast<std::int64_t>(control_frame_bytes(sizes, kind)) * 8;
  switch (kind) {
    case FrameKind::Ack: frame.body = AckFrame{}; break;
    case FrameKind::BlockAck: frame.body = BlockAckFrame{}; break;
    default: frame.body = ControlFrame{}; break;
  }
  return frame;
}

}  // namespace fwa
