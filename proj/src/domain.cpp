#include "fwa/domain.hpp"

#include <cmath>
#include <numbers>

#include "fwa/errors.hpp"

namespace fwa {

std::string to_string(Role role) {
  switch (role) {
    case Role::DnAp: return "DN_AP";
    case Role::DnSta: return "DN_STA";
    case Role::CnSta: return "CN_STA";
  }
  return "?";
}

Role role_from_string(const std::string& text) {
  if (text == "DN_AP") return Role::DnAp;
  if (text == "DN_STA") return Role::DnSta;
  if (text == "CN_STA") return Role::CnSta;
  throw InvalidArgument("unknown role '" + text + "'");
}

std::string to_string(Direction direction) {
  return direction == Direction::Downlink ? "DL" : "UL";
}

Direction direction_from_string(const std::string& text) {
  if (text == "DL" || text == "DOWNLINK") return Direction::Downlink;
  if (text == "UL" || text == "UPLINK") return Direction::Uplink;
  throw InvalidArgument("unknown direction '" + text + "'");
}

std::string to_string(SyncQuality quality) {
  switch (quality) {
    case SyncQuality::GlobalSync: return "GLOBAL_SYNC";
    case SyncQuality::Holdover: return "HOLDOVER";
    case SyncQuality::Unsynced: return "UNSYNCED";
  }
  return "?";
}

SyncQuality sync_quality_from_string(const std::string& text) {
  if (text == "GLOBAL_SYNC") return SyncQuality::GlobalSync;
  if (text == "HOLDOVER") return SyncQuality::Holdover;
  if (text == "UNSYNCED") return SyncQuality::Unsynced;
  throw InvalidArgument("unknown clock quality '" + text + "'");
}

double distance_m(const Position& a, const Position& b) {
  return std::hypot(b.x_m - a.x_m, b.y_m - a.y_m);
}

double normalize_angle_deg(double angle_deg) {
  double wrapped = std::fmod(angle_deg, 360.0);
  if (wrapped <= -180.0) wrapped += 360.0;
  if (wrapped > 180.0) wrapped -= 360.0;
  return wrapped;
}

double bearing_deg(const Position& from, const Position& to) {
  const double radians = std::atan2(to.y_m - from.y_m, to.x_m - from.x_m);
  return normalize_angle_deg(radians * 180.0 / std::numbers::pi);
}

Codebook::Codebook(std::vector<Sector> sectors) : sectors_(std::move(sectors)) {
  if (sectors_.empty()) throw InvalidArgument("codebook must contain at least one sector");
  for (std::size_t i = 0; i < sectors_.size(); ++i) {
    const Sector& s = sectors_[i];
    if (s.index != static_cast<int>(i)) {
      throw InvalidArgument("sector indices must be 0..n-1 in order; found " +
                            std::to_string(s.index) + " at position " + std::to_string(i));
    }
    if (!(s.mainlobe_gain_dbi > s.sidelobe_gain_dbi)) {
      throw InvalidArgument("sector " + std::to_string(i) +
                            ": mainlobe gain must exceed sidelobe gain");
    }
    if (!(s.beamwidth_deg > 0.0) || s.beamwidth_deg > 360.0) {
      throw InvalidArgument("sector " + std::to_string(i) + ": beamwidth must be in (0, 360]");
    }
  }
}

Codebook Codebook::uniform(int count, double mainlobe_gain_dbi, double sidelobe_gain_dbi,
                           double span_deg, double center_deg) {
  if (count <= 0) throw InvalidArgument("uniform codebook needs a positive sector count");
  const double width = span_deg / count;
  std::vector<Sector> sectors;
  sectors.reserve(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) {
    const double boresight = center_deg - span_deg / 2.0 + (i + 0.5) * width;
    sectors.push_back({i, normalize_angle_deg(boresight), width, mainlobe_gain_dbi,
                       sidelobe_gain_dbi});
  }
  return Codebook(std::move(sectors));
}

const Sector& Codebook::at(int index) const {
  if (index < 0 || index >= size()) {
    throw InvalidArgument("unknown sector index " + std::to_string(index));
  }
  return sectors_[static_cast<std::size_t>(index)];
}

double sector_gain_dbi(const Codebook& codebook, int sector_index, double angle_deg) {
  const Sector& sector = codebook.at(sector_index);
  const double off_axis = std::abs(normalize_angle_deg(angle_deg - sector.boresight_deg));
  return off_axis <= sector.beamwidth_deg / 2.0 ? sector.mainlobe_gain_dbi
                                                : sector.sidelobe_gain_dbi;
}

void validate_node(const NodeModel& node) {
  if (node.id.empty()) throw InvalidArgument("node id must not be empty");
  if (node.codebook.size() == 0) {
    throw InvalidArgument("node " + node.id.str() + " has an empty codebook");
  }
  if (node.power_limits.min_dbm > node.power_limits.max_dbm) {
    throw InvalidArgument("node " + node.id.str() + ": power limits inverted");
  }
  if (node.tx_power_dbm < node.power_limits.min_dbm ||
      node.tx_power_dbm > node.power_limits.max_dbm) {
    throw InvalidArgument("node " + node.id.str() + ": tx power outside limits");
  }
}

McsTable::McsTable(std::vector<McsEntry> entries) : entries_(std::move(entries)) {
  if (entries_.empty()) throw InvalidArgument("MCS table must not be empty");
  for (std::size_t i = 1; i < entries_.size(); ++i) {
    if (!(entries_[i].min_snr_db > entries_[i - 1].min_snr_db) ||
        !(entries_[i].phy_rate_bps > entries_[i - 1].phy_rate_bps)) {
      throw InvalidArgument("MCS table must be strictly increasing in threshold and rate");
    }
  }
}

McsTable::McsTable() : McsTable(default_table()) {}

McsTable McsTable::default_table() {
  return McsTable(std::vector<McsEntry>{{0, 1.0, 385e6},
                   {1, 3.0, 770e6},
                   {2, 5.0, 1155e6},
                   {3, 7.0, 1540e6},
                   {4, 9.0, 1925e6},
                   {6, 12.0, 2693e6},
                   {8, 15.0, 3080e6},
                   {10, 17.0, 3850e6},
                   {12, 18.0, 4620e6}});
}

std::optional<McsEntry> mcs_from_snr(std::span<const McsEntry> table, double snr_db) {
  if (table.empty()) throw InvalidArgument("MCS table must not be empty");
  std::optional<McsEntry> best;
  for (const McsEntry& entry : table) {
    if (entry.min_snr_db <= snr_db &&
        (!best || entry.phy_rate_bps > best->phy_rate_bps)) {
      best = entry;
    }
  }
  return best;
}

}  // namespace fwa
