#include "fwa/channel.hpp"

#include <cmath>

#include "fwa/errors.hpp"

namespace fwa {

namespace {
constexpr double kSpeedOfLightMps = 299792458.0;
constexpr double kThermalNoiseDbmPerHz = -174.0;
}  // namespace

void validate(const LinkBudgetConfig& cfg) {
  if (!(cfg.carrier_hz > 0.0)) throw InvalidArgument("carrier_hz must be positive");
  if (!(cfg.bandwidth_hz > 0.0)) throw InvalidArgument("bandwidth_hz must be positive");
}

double path_loss_db(double distance_m, double carrier_hz) {
  if (!(distance_m > 0.0)) throw InvalidArgument("distance must be positive");
  return 20.0 * std::log10(distance_m) + 20.0 * std::log10(carrier_hz) - 147.55;
}

double noise_floor_dbm(const LinkBudgetConfig& cfg) {
  return kThermalNoiseDbmPerHz + 10.0 * std::log10(cfg.bandwidth_hz) + cfg.noise_figure_db;
}

double received_power_dbm(const NodeModel& tx, int tx_sector, const NodeModel& rx, int rx_sector,
                          const LinkBudgetConfig& cfg, double extra_loss_db) {
  const double d = distance_m(tx.position, rx.position);
  if (!(d > 0.0)) {
    throw InvalidArgument("nodes " + tx.id.str() + " and " + rx.id.str() +
                          " are at the same position");
  }
  // Summing the two gains first keeps the result bit-identical when the
  // roles of the endpoints are swapped.
  const double gains = sector_gain_dbi(tx.codebook, tx_sector, bearing_deg(tx.position, rx.position)) +
                       sector_gain_dbi(rx.codebook, rx_sector, bearing_deg(rx.position, tx.position));
  return tx.tx_power_dbm + gains - (path_loss_db(d, cfg.carrier_hz) + extra_loss_db);
}

LinkSample link_snr_db(const NodeModel& tx, int tx_sector, const NodeModel& rx, int rx_sector,
                       const LinkBudgetConfig& cfg, double extra_loss_db) {
  const double noise = noise_floor_dbm(cfg);
  const double rcpi = received_power_dbm(tx, tx_sector, rx, rx_sector, cfg, extra_loss_db);
  LinkSample sample;
  sample.tx_node = tx.id;
  sample.rx_node = rx.id;
  sample.tx_sector = tx_sector;
  sample.rx_sector = rx_sector;
  sample.snr_db = rcpi - noise;
  sample.rcpi_dbm = rcpi;
  sample.rsni_db = sample.snr_db;
  return sample;
}

TimeUs propagation_delay_us(double distance_m) {
  return static_cast<TimeUs>(std::llround(distance_m / kSpeedOfLightMps * 1e6));
}

std::pair<NodeId, NodeId> ChannelModel::key(const NodeId& a, const NodeId& b) {
  return a < b ? std::pair{a, b} : std::pair{b, a};
}

void ChannelModel::set_loss_offset(const NodeId& a, const NodeId& b, double loss_db) {
  if (loss_db == 0.0) {
    offsets_.erase(key(a, b));
  } else {
    offsets_[key(a, b)] = loss_db;
  }
}

double ChannelModel::loss_offset(const NodeId& a, const NodeId& b) const {
  auto it = offsets_.find(key(a, b));
  return it == offsets_.end() ? 0.0 : it->second;
}

LinkSample ChannelModel::sample(const NodeModel& tx, int tx_sector, const NodeModel& rx,
                                int rx_sector) const {
  return link_snr_db(tx, tx_sector, rx, rx_sector, cfg_, loss_offset(tx.id, rx.id));
}

double ChannelModel::received_power_dbm(const NodeModel& tx, int tx_sector, const NodeModel& rx,
                                        int rx_sector) const {
  return fwa::received_power_dbm(tx, tx_sector, rx, rx_sector, cfg_, loss_offset(tx.id, rx.id));
}

bool ChannelModel::is_harmful(double interference_dbm) const {
  return interference_dbm > noise_floor_dbm() + cfg_.interference_threshold_db;
}

}  // namespace fwa
