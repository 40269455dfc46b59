#pragma once

// Reference computations written from first principles. They deliberately
// avoid calling the library code they check.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <vector>

#include "fwa/domain.hpp"
#include "fwa/tdd_schedule.hpp"

namespace oracle {

inline double friis_db(double distance_m, double carrier_hz) {
  const double c = 299792458.0;
  return 20.0 * std::log10(4.0 * std::numbers::pi * distance_m * carrier_hz / c);
}

inline double thermal_noise_dbm(double bandwidth_hz, double nf_db) {
  // kT at 290 K is -174 dBm/Hz.
  return -174.0 + 10.0 * std::log10(bandwidth_hz) + nf_db;
}

/// Angle between a sector boresight and a bearing, folded into [0, 180].
inline double off_axis_deg(double bearing, double boresight) {
  double d = std::fmod(bearing - boresight, 360.0);
  if (d < 0) d += 360.0;
  return d > 180.0 ? 360.0 - d : d;
}

inline double gain(const fwa::Sector& s, double bearing) {
  return off_axis_deg(bearing, s.boresight_deg) <= s.beamwidth_deg / 2.0 ? s.mainlobe_gain_dbi
                                                                          : s.sidelobe_gain_dbi;
}

inline double bearing(const fwa::Position& from, const fwa::Position& to) {
  return std::atan2(to.y_m - from.y_m, to.x_m - from.x_m) * 180.0 / std::numbers::pi;
}

struct LinkBudget {
  double carrier_hz = 60e9;
  double bandwidth_hz = 2.16e9;
  double nf_db = 10.0;
};

/// SNR with the rounded -147.55 dB Friis constant replaced by the exact 4*pi/c.
inline double snr_db(const fwa::NodeModel& tx, int ts, const fwa::NodeModel& rx, int rs,
                     const LinkBudget& lb = {}) {
  const double d = std::hypot(rx.position.x_m - tx.position.x_m, rx.position.y_m - tx.position.y_m);
  const double g = gain(tx.codebook.sectors()[ts], bearing(tx.position, rx.position)) +
                   gain(rx.codebook.sectors()[rs], bearing(rx.position, tx.position));
  return tx.tx_power_dbm + g - friis_db(d, lb.carrier_hz) - thermal_noise_dbm(lb.bandwidth_hz, lb.nf_db);
}

struct BestPair {
  int tx = -1;
  int rx = -1;
  double snr = -1e300;
};

/// Exhaustive argmax over the sector grid; ties go to the lowest (tx, rx).
/// Gains are compared directly so equal-gain pairs tie exactly.
inline BestPair brute_force_best(const fwa::NodeModel& a, const fwa::NodeModel& b,
                                 const LinkBudget& lb = {}) {
  BestPair best;
  double best_gain = -1e300;
  const double ab = bearing(a.position, b.position);
  const double ba = bearing(b.position, a.position);
  for (int t = 0; t < a.codebook.size(); ++t) {
    for (int r = 0; r < b.codebook.size(); ++r) {
      const double g = gain(a.codebook.sectors()[t], ab) + gain(b.codebook.sectors()[r], ba);
      if (g > best_gain) {
        best_gain = g;
        best = {t, r, 0.0};
      }
    }
  }
  best.snr = snr_db(a, best.tx, b, best.rx, lb);
  return best;
}

/// Forward scan for the first Basic slot after `after` where `sta` is the
/// transmitter.
inline std::optional<fwa::AbsoluteSlot> first_basic_tx(const std::vector<fwa::AbsoluteSlot>& slots,
                                                       const fwa::NodeId& sta, fwa::TimeUs after) {
  std::optional<fwa::AbsoluteSlot> best;
  for (const auto& s : slots) {
    if (s.category != fwa::SlotCategory::Basic || !s.assignee || *s.assignee != sta) continue;
    if (s.direction != fwa::Direction::Uplink || s.start_us <= after) continue;
    if (!best || s.start_us < best->start_us) best = s;
  }
  return best;
}

/// Every independent set of an undirected graph given as an adjacency matrix.
inline std::vector<std::uint32_t> independent_sets(const std::vector<std::vector<bool>>& adj) {
  const int n = static_cast<int>(adj.size());
  std::vector<std::uint32_t> out;
  for (std::uint32_t mask = 0; mask < (1u << n); ++mask) {
    bool ok = true;
    for (int i = 0; ok && i < n; ++i) {
      if (!(mask >> i & 1u)) continue;
      for (int j = i + 1; ok && j < n; ++j) {
        if ((mask >> j & 1u) && adj[i][j]) ok = false;
      }
    }
    if (ok) out.push_back(mask);
  }
  return out;
}

/// TPC as a plain loop: proportional step, step clamp, then power clamp.
inline std::vector<double> tpc_trajectory(double power, double rsni, double target, double step,
                                          double lo, double hi, int rounds) {
  std::vector<double> powers{power};
  for (int k = 0; k < rounds; ++k) {
    double delta = -(rsni - target);
    delta = std::max(-step, std::min(step, delta));
    const double next = std::max(lo, std::min(hi, power + delta));
    rsni += next - power;
    power = next;
    powers.push_back(power);
  }
  return powers;
}

}  // namespace oracle
