#pragma once

// Identifiers, node and antenna models, the MCS table and the deployment
// requirement constants shared by every other module.

#include <compare>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace fwa {

/// Simulation time and durations, in integer microseconds.
using TimeUs = std::int64_t;

class NodeId {
 public:
  NodeId() = default;
  explicit NodeId(std::string value) : value_(std::move(value)) {}

  const std::string& str() const noexcept { return value_; }
  bool empty() const noexcept { return value_.empty(); }

  auto operator<=>(const NodeId&) const = default;

 private:
  std::string value_;
};

enum class Role { DnAp, DnSta, CnSta };

/// Downlink is AP to STA; uplink is STA to AP.
enum class Direction { Downlink, Uplink };

std::string to_string(Direction direction);
Direction direction_from_string(const std::string& text);

std::string to_string(Role role);
Role role_from_string(const std::string& text);
inline bool is_ap(Role role) { return role == Role::DnAp; }

struct Position {
  double x_m = 0.0;
  double y_m = 0.0;
  auto operator<=>(const Position&) const = default;
};

double distance_m(const Position& a, const Position& b);

/// Bearing from `from` to `to`, degrees, normalized to (-180, 180].
double bearing_deg(const Position& from, const Position& to);

/// Wraps any angle into (-180, 180].
double normalize_angle_deg(double angle_deg);

struct Sector {
  int index = 0;
  double boresight_deg = 0.0;
  double beamwidth_deg = 0.0;
  double mainlobe_gain_dbi = 0.0;
  double sidelobe_gain_dbi = 0.0;
  auto operator<=>(const Sector&) const = default;
};

/// Ordered sector list used for both transmit and receive.
class Codebook {
 public:
  Codebook() = default;
  /// Throws InvalidArgument when indices are not 0..n-1 in order or a
  /// mainlobe gain does not exceed its sidelobe floor.
  explicit Codebook(std::vector<Sector> sectors);

  /// `count` equal sectors tiling `span_deg` centred on `center_deg`.
  static Codebook uniform(int count, double mainlobe_gain_dbi, double sidelobe_gain_dbi,
                          double span_deg = 360.0, double center_deg = 0.0);

  std::span<const Sector> sectors() const noexcept { return sectors_; }
  int size() const noexcept { return static_cast<int>(sectors_.size()); }
  const Sector& at(int index) const;

  bool operator==(const Codebook&) const = default;

 private:
  std::vector<Sector> sectors_;
};

/// Flat-top pattern: mainlobe gain inside beamwidth/2 of boresight
/// (boundary inclusive), sidelobe floor elsewhere.
double sector_gain_dbi(const Codebook& codebook, int sector_index, double angle_deg);

struct PowerLimits {
  double min_dbm = -10.0;
  double max_dbm = 20.0;
  auto operator<=>(const PowerLimits&) const = default;
};

enum class SyncQuality { GlobalSync, Holdover, Unsynced };

std::string to_string(SyncQuality quality);
SyncQuality sync_quality_from_string(const std::string& text);

struct ClockModel {
  double offset_us = 0.0;
  double drift_ppm = 0.0;
  SyncQuality quality = SyncQuality::GlobalSync;
  auto operator<=>(const ClockModel&) const = default;
};

struct NodeModel {
  NodeId id;
  Role role = Role::CnSta;
  Position position;
  Codebook codebook;
  double tx_power_dbm = 10.0;
  PowerLimits power_limits;
  bool tdd_capable = true;
  ClockModel clock;

  bool operator==(const NodeModel&) const = default;
};

/// Throws InvalidArgument if the node breaks a NodeModel invariant.
void validate_node(const NodeModel& node);

struct McsEntry {
  int mcs_index = 0;
  double min_snr_db = 0.0;
  double phy_rate_bps = 0.0;
  auto operator<=>(const McsEntry&) const = default;
};

/// Rate table, strictly increasing in both threshold and rate.
class McsTable {
 public:
  /// The default table.
  McsTable();
  explicit McsTable(std::vector<McsEntry> entries);
  static McsTable default_table();

  std::span<const McsEntry> entries() const noexcept { return entries_; }
  const McsEntry& lowest() const { return entries_.front(); }

  bool operator==(const McsTable&) const = default;

 private:
  std::vector<McsEntry> entries_;
};

/// Highest-rate entry whose threshold is at or below `snr_db`.
std::optional<McsEntry> mcs_from_snr(std::span<const McsEntry> table, double snr_db);
inline std::optional<McsEntry> mcs_from_snr(const McsTable& table, double snr_db) {
  return mcs_from_snr(table.entries(), snr_db);
}

struct Requirements {
  static constexpr double max_hop_m = 300.0;
  static constexpr double min_dl_rate_bps = 4e9;
  static constexpr double max_latency_s = 15e-3;
};

}  // namespace fwa

template <>
struct std::hash<fwa::NodeId> {
  std::size_t operator()(const fwa::NodeId& id) const noexcept {
    return std::hash<std::string>{}(id.str());
  }
};
