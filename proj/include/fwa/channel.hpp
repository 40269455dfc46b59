#pragma once

// Deterministic line-of-sight link budget between (node, sector) endpoints.

#include <map>
#include <utility>

#include "fwa/domain.hpp"

namespace fwa {

struct LinkBudgetConfig {
  double carrier_hz = 60e9;
  double bandwidth_hz = 2.16e9;
  double noise_figure_db = 10.0;
  /// Interference is harmful once it exceeds noise floor + this margin.
  double interference_threshold_db = 0.0;

  bool operator==(const LinkBudgetConfig&) const = default;
};

void validate(const LinkBudgetConfig& cfg);

struct LinkSample {
  NodeId tx_node;
  NodeId rx_node;
  int tx_sector = 0;
  int rx_sector = 0;
  double snr_db = 0.0;
  double rcpi_dbm = 0.0;
  double rsni_db = 0.0;
};

/// Friis free-space loss in dB.
double path_loss_db(double distance_m, double carrier_hz);

/// Thermal noise over the channel bandwidth plus receiver noise figure, dBm.
double noise_floor_dbm(const LinkBudgetConfig& cfg);

/// Power arriving at `rx` (using `rx_sector`) from `tx` (using `tx_sector`), dBm.
/// `extra_loss_db` is a what-if attenuation on top of free space.
double received_power_dbm(const NodeModel& tx, int tx_sector, const NodeModel& rx, int rx_sector,
                          const LinkBudgetConfig& cfg, double extra_loss_db = 0.0);

LinkSample link_snr_db(const NodeModel& tx, int tx_sector, const NodeModel& rx, int rx_sector,
                       const LinkBudgetConfig& cfg, double extra_loss_db = 0.0);

/// Speed-of-light delay rounded to the nearest microsecond.
TimeUs propagation_delay_us(double distance_m);

/// Link budget plus per-pair constant loss offsets (symmetric in the pair).
class ChannelModel {
 public:
  ChannelModel() = default;
  explicit ChannelModel(LinkBudgetConfig cfg) : cfg_(cfg) { validate(cfg_); }

  const LinkBudgetConfig& config() const noexcept { return cfg_; }
  double noise_floor_dbm() const { return fwa::noise_floor_dbm(cfg_); }

  void set_loss_offset(const NodeId& a, const NodeId& b, double loss_db);
  double loss_offset(const NodeId& a, const NodeId& b) const;
  const std::map<std::pair<NodeId, NodeId>, double>& loss_offsets() const { return offsets_; }

  LinkSample sample(const NodeModel& tx, int tx_sector, const NodeModel& rx, int rx_sector) const;
  double received_power_dbm(const NodeModel& tx, int tx_sector, const NodeModel& rx,
                            int rx_sector) const;
  /// True when an unintended signal at this power breaks a concurrent reception.
  bool is_harmful(double interference_dbm) const;

 private:
  static std::pair<NodeId, NodeId> key(const NodeId& a, const NodeId& b);

  LinkBudgetConfig cfg_;
  std::map<std::pair<NodeId, NodeId>, double> offsets_;
};

}  // namespace fwa
