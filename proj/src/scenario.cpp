#include "fwa/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <memory>
#include <set>
#include <sstream>

#include <yaml-cpp/yaml.h>

#include "fwa/errors.hpp"

namespace fwa {

namespace {

std::string join(const std::string& path, const std::string& key) {
  return path.empty() ? key : path + "." + key;
}

std::string item(const std::string& path, std::size_t i) {
  return path + "[" + std::to_string(i) + "]";
}

template <class T>
const char* type_name() {
  if constexpr (std::is_same_v<T, bool>) return "a boolean";
  if constexpr (std::is_integral_v<T>) return "an integer";
  if constexpr (std::is_floating_point_v<T>) return "a number";
  return "a string";
}

class Reader {
 public:
  std::vector<std::string> problems;

  void problem(const std::string& path, const std::string& message) {
    problems.push_back(path + ": " + message);
  }

  template <class T>
  std::optional<T> scalar(const YAML::Node& node, const std::string& path) {
    if (!node.IsScalar()) {
      problem(path, std::string("expected ") + type_name<T>());
      return std::nullopt;
    }
    try {
      return node.as<T>();
    } catch (const YAML::Exception&) {
      problem(path, "'" + node.Scalar() + "' is not " + type_name<T>());
      return std::nullopt;
    }
  }

  template <class T>
  T get(const YAML::Node& map, const std::string& key, const std::string& path, T fallback) {
    const YAML::Node node = map[key];
    if (!node || node.IsNull()) return fallback;
    auto value = scalar<T>(node, join(path, key));
    return value ? *value : fallback;
  }

  std::optional<NodeId> id(const YAML::Node& map, const std::string& key, const std::string& path) {
    const YAML::Node node = map[key];
    if (!node) {
      problem(join(path, key), "missing");
      return std::nullopt;
    }
    auto text = scalar<std::string>(node, join(path, key));
    if (!text) return std::nullopt;
    return NodeId(*text);
  }

  bool is_map(const YAML::Node& node, const std::string& path) {
    if (!node.IsMap()) {
      problem(path, "expected a mapping");
      return false;
    }
    return true;
  }

  bool is_seq(const YAML::Node& node, const std::string& path) {
    if (!node.IsSequence()) {
      problem(path, "expected a list");
      return false;
    }
    return true;
  }

  void keys(const YAML::Node& map, std::initializer_list<const char*> allowed,
            const std::string& path) {
    for (const auto& kv : map) {
      const std::string key = kv.first.Scalar();
      if (std::none_of(allowed.begin(), allowed.end(), [&](const char* a) { return key == a; })) {
        problem(join(path, key), "unknown key");
      }
    }
  }

  template <class F>
  void guard(const std::string& path, F&& f) {
    try {
      f();
    } catch (const std::exception& e) {
      problem(path, e.what());
    }
  }
};

// ---- parsing ----------------------------------------------------------------

std::optional<Codebook> parse_codebook(Reader& r, const YAML::Node& node, const std::string& path) {
  if (!r.is_map(node, path)) return std::nullopt;
  r.keys(node, {"uniform", "sectors"}, path);
  std::optional<Codebook> out;
  if (const YAML::Node u = node["uniform"]) {
    const std::string p = join(path, "uniform");
    if (!r.is_map(u, p)) return std::nullopt;
    r.keys(u, {"sectors", "mainlobe_dbi", "sidelobe_dbi", "span_deg", "center_deg"}, p);
    const int count = r.get<int>(u, "sectors", p, 0);
    const double main = r.get<double>(u, "mainlobe_dbi", p, 25.0);
    const double side = r.get<double>(u, "sidelobe_dbi", p, -5.0);
    const double span = r.get<double>(u, "span_deg", p, 360.0);
    const double center = r.get<double>(u, "center_deg", p, 0.0);
    r.guard(p, [&] { out = Codebook::uniform(count, main, side, span, center); });
  } else if (const YAML::Node s = node["sectors"]) {
    const std::string p = join(path, "sectors");
    if (!r.is_seq(s, p)) return std::nullopt;
    std::vector<Sector> sectors;
    for (std::size_t i = 0; i < s.size(); ++i) {
      const std::string sp = item(p, i);
      if (!r.is_map(s[i], sp)) continue;
      r.keys(s[i], {"boresight_deg", "beamwidth_deg", "mainlobe_dbi", "sidelobe_dbi"}, sp);
      Sector sector;
      sector.index = static_cast<int>(i);
      sector.boresight_deg = r.get<double>(s[i], "boresight_deg", sp, 0.0);
      sector.beamwidth_deg = r.get<double>(s[i], "beamwidth_deg", sp, 0.0);
      sector.mainlobe_gain_dbi = r.get<double>(s[i], "mainlobe_dbi", sp, 0.0);
      sector.sidelobe_gain_dbi = r.get<double>(s[i], "sidelobe_dbi", sp, 0.0);
      sectors.push_back(sector);
    }
    r.guard(p, [&] { out = Codebook(std::move(sectors)); });
  } else {
    r.problem(path, "needs 'uniform' or 'sectors'");
  }
  return out;
}

void parse_nodes(Reader& r, const YAML::Node& root, WorldConfig& w) {
  std::map<std::string, Codebook> named;
  if (const YAML::Node cbs = root["codebooks"]) {
    if (r.is_map(cbs, "codebooks")) {
      for (const auto& kv : cbs) {
        const std::string name = kv.first.Scalar();
        if (auto cb = parse_codebook(r, kv.second, "codebooks." + name)) named.emplace(name, *cb);
      }
    }
  }
  const YAML::Node nodes = root["nodes"];
  if (!nodes) {
    r.problem("nodes", "missing");
    return;
  }
  if (!r.is_seq(nodes, "nodes")) return;
  std::set<NodeId> seen;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    const std::string p = item("nodes", i);
    const YAML::Node n = nodes[i];
    if (!r.is_map(n, p)) continue;
    r.keys(n, {"id", "role", "position", "codebook", "tx_power_dbm", "power_limits", "tdd_capable",
               "clock"},
           p);
    NodeModel node;
    if (auto id = r.id(n, "id", p)) node.id = *id;
    if (node.id.empty()) r.problem(join(p, "id"), "must not be empty");
    if (!seen.insert(node.id).second) r.problem(join(p, "id"), "duplicate node id '" + node.id.str() + "'");
    r.guard(join(p, "role"), [&] { node.role = role_from_string(r.get<std::string>(n, "role", p, "CN_STA")); });
    if (const YAML::Node pos = n["position"]) {
      if (pos.IsSequence() && pos.size() == 2) {
        node.position.x_m = r.scalar<double>(pos[0], join(p, "position[0]")).value_or(0.0);
        node.position.y_m = r.scalar<double>(pos[1], join(p, "position[1]")).value_or(0.0);
      } else {
        r.problem(join(p, "position"), "expected [x_m, y_m]");
      }
    } else {
      r.problem(join(p, "position"), "missing");
    }
    if (const YAML::Node cb = n["codebook"]) {
      if (cb.IsScalar()) {
        auto it = named.find(cb.Scalar());
        if (it == named.end()) {
          r.problem(join(p, "codebook"), "unknown codebook '" + cb.Scalar() + "'");
        } else {
          node.codebook = it->second;
        }
      } else if (auto parsed = parse_codebook(r, cb, join(p, "codebook"))) {
        node.codebook = *parsed;
      }
    } else {
      r.problem(join(p, "codebook"), "missing");
    }
    node.tx_power_dbm = r.get<double>(n, "tx_power_dbm", p, node.tx_power_dbm);
    if (const YAML::Node lim = n["power_limits"]) {
      const std::string lp = join(p, "power_limits");
      if (r.is_map(lim, lp)) {
        r.keys(lim, {"min_dbm", "max_dbm"}, lp);
        node.power_limits.min_dbm = r.get<double>(lim, "min_dbm", lp, node.power_limits.min_dbm);
        node.power_limits.max_dbm = r.get<double>(lim, "max_dbm", lp, node.power_limits.max_dbm);
      }
    }
    node.tdd_capable = r.get<bool>(n, "tdd_capable", p, true);
    if (const YAML::Node clk = n["clock"]) {
      const std::string cp = join(p, "clock");
      if (r.is_map(clk, cp)) {
        r.keys(clk, {"offset_us", "drift_ppm", "quality"}, cp);
        node.clock.offset_us = r.get<double>(clk, "offset_us", cp, 0.0);
        node.clock.drift_ppm = r.get<double>(clk, "drift_ppm", cp, 0.0);
        r.guard(join(cp, "quality"), [&] {
          node.clock.quality =
              sync_quality_from_string(r.get<std::string>(clk, "quality", cp, "GLOBAL_SYNC"));
        });
      }
    }
    if (node.codebook.size() > 0) r.guard(p, [&] { validate_node(node); });
    w.nodes.push_back(std::move(node));
  }
}

void parse_timing(Reader& r, const YAML::Node& root, WorldConfig& w) {
  w.beacon_interval_us = r.get<TimeUs>(root, "beacon_interval_us", "", w.beacon_interval_us);
  w.training_window_us = r.get<TimeUs>(root, "training_window_us", "", w.training_window_us);
  if (w.beacon_interval_us <= 0) r.problem("beacon_interval_us", "must be positive");
  if (w.training_window_us <= 0) r.problem("training_window_us", "must be positive");

  if (const YAML::Node sp = root["data_sp"]) {
    if (r.is_map(sp, "data_sp")) {
      r.keys(sp, {"allocation_id", "start_us", "duration_us"}, "data_sp");
      w.data_sp.allocation_id = r.get<int>(sp, "allocation_id", "data_sp", w.data_sp.allocation_id);
      w.data_sp.start_time_us = r.get<TimeUs>(sp, "start_us", "data_sp", w.data_sp.start_time_us);
      w.data_sp.duration_us = r.get<TimeUs>(sp, "duration_us", "data_sp", w.data_sp.duration_us);
    }
  }
  w.data_sp.is_tdd = true;
  if (w.beacon_interval_us > 0) {
    r.guard("data_sp", [&] { validate_extended_schedule(std::span(&w.data_sp, 1), w.beacon_interval_us); });
  }

  w.structure = default_slot_structure(w.data_sp.allocation_id);
  if (const YAML::Node ss = root["slot_structure"]) {
    const std::string p = "slot_structure";
    if (r.is_map(ss, p)) {
      r.keys(ss, {"interval_us", "guard_us", "slots"}, p);
      w.slot_guard_us = r.get<TimeUs>(ss, "guard_us", p, w.slot_guard_us);
      const YAML::Node slots = ss["slots"];
      if (slots && slots.IsSequence()) {
        w.structure.slots.clear();
        w.structure.interval_duration_us = r.get<TimeUs>(ss, "interval_us", p, 0);
        if (!ss["interval_us"]) r.problem(join(p, "interval_us"), "required with an explicit slot list");
        for (std::size_t i = 0; i < slots.size(); ++i) {
          const std::string sp = item(join(p, "slots"), i);
          if (!r.is_map(slots[i], sp)) continue;
          r.keys(slots[i], {"start_us", "duration_us", "category"}, sp);
          SlotSpec spec;
          spec.start_offset_us = r.get<TimeUs>(slots[i], "start_us", sp, 0);
          spec.duration_us = r.get<TimeUs>(slots[i], "duration_us", sp, 0);
          r.guard(join(sp, "category"), [&] {
            spec.category = slot_category_from_string(r.get<std::string>(slots[i], "category", sp, "DATA"));
          });
          w.structure.slots.push_back(spec);
        }
      } else if (slots && !(slots.IsScalar() && slots.Scalar() == "default")) {
        r.problem(join(p, "slots"), "expected 'default' or a list of slots");
      } else if (ss["interval_us"] &&
                 r.get<TimeUs>(ss, "interval_us", p, 0) != w.structure.interval_duration_us) {
        r.problem(join(p, "interval_us"), "the default layout uses a 1600 us interval");
      }
    }
  }
  for (const auto& v : validate_schedule(w.structure, {w.structure.allocation_id, {}})) {
    r.problem("slot_structure", to_string(v.kind) + (v.detail.empty() ? "" : " (" + v.detail + ")"));
  }
  if (w.structure.interval_duration_us > 0 && w.data_sp.duration_us % w.structure.interval_duration_us != 0) {
    r.problem("data_sp.duration_us", "not a whole number of " +
                                         std::to_string(w.structure.interval_duration_us) + " us intervals");
  }
  for (std::size_t i = 0; i < w.structure.slots.size(); ++i) {
    if (w.slot_guard_us < 0 || w.slot_guard_us >= w.structure.slots[i].duration_us) {
      r.problem("slot_structure.guard_us", "must be non-negative and shorter than slot " + std::to_string(i));
      break;
    }
  }
}

void parse_radio(Reader& r, const YAML::Node& root, WorldConfig& w) {
  if (const YAML::Node lb = root["link_budget"]) {
    const std::string p = "link_budget";
    if (r.is_map(lb, p)) {
      r.keys(lb, {"carrier_hz", "bandwidth_hz", "noise_figure_db", "interference_threshold_db"}, p);
      auto& c = w.link_budget;
      c.carrier_hz = r.get<double>(lb, "carrier_hz", p, c.carrier_hz);
      c.bandwidth_hz = r.get<double>(lb, "bandwidth_hz", p, c.bandwidth_hz);
      c.noise_figure_db = r.get<double>(lb, "noise_figure_db", p, c.noise_figure_db);
      c.interference_threshold_db = r.get<double>(lb, "interference_threshold_db", p, c.interference_threshold_db);
      r.guard(p, [&] { validate(c); });
    }
  }
  if (const YAML::Node mt = root["mcs_table"]) {
    if (r.is_seq(mt, "mcs_table")) {
      std::vector<McsEntry> entries;
      for (std::size_t i = 0; i < mt.size(); ++i) {
        const std::string p = item("mcs_table", i);
        if (!r.is_map(mt[i], p)) continue;
        r.keys(mt[i], {"index", "min_snr_db", "rate_bps"}, p);
        entries.push_back({r.get<int>(mt[i], "index", p, 0), r.get<double>(mt[i], "min_snr_db", p, 0.0),
                           r.get<double>(mt[i], "rate_bps", p, 0.0)});
      }
      r.guard("mcs_table", [&] { w.mcs = McsTable(std::move(entries)); });
    }
  }
  if (const YAML::Node fs = root["frame_sizes"]) {
    const std::string p = "frame_sizes";
    if (r.is_map(fs, p)) {
      r.keys(fs, {"data_payload_bytes", "data_overhead_bytes", "ssw_bytes", "ack_bytes", "block_ack_bytes",
                  "announce_bytes", "link_measurement_bytes", "rts_bytes"},
             p);
      auto& s = w.sizes;
      s.data_payload_bytes = r.get<int>(fs, "data_payload_bytes", p, s.data_payload_bytes);
      s.data_overhead_bytes = r.get<int>(fs, "data_overhead_bytes", p, s.data_overhead_bytes);
      s.ssw_bytes = r.get<int>(fs, "ssw_bytes", p, s.ssw_bytes);
      s.ack_bytes = r.get<int>(fs, "ack_bytes", p, s.ack_bytes);
      s.block_ack_bytes = r.get<int>(fs, "block_ack_bytes", p, s.block_ack_bytes);
      s.announce_bytes = r.get<int>(fs, "announce_bytes", p, s.announce_bytes);
      s.link_measurement_bytes = r.get<int>(fs, "link_measurement_bytes", p, s.link_measurement_bytes);
      s.rts_bytes = r.get<int>(fs, "rts_bytes", p, s.rts_bytes);
      if (s.data_payload_bytes <= 0) r.problem(join(p, "data_payload_bytes"), "must be positive");
      for (int v : {s.data_overhead_bytes}) {
        if (v < 0) r.problem(join(p, "data_overhead_bytes"), "must not be negative");
      }
      for (int v : {s.ssw_bytes, s.ack_bytes, s.block_ack_bytes, s.announce_bytes, s.link_measurement_bytes,
                    s.rts_bytes}) {
        if (v <= 0) {
          r.problem(p, "control frame sizes must be positive");
          break;
        }
      }
    }
  }
}

void parse_activity(Reader& r, const YAML::Node& root, WorldConfig& w) {
  std::set<NodeId> ids;
  std::map<NodeId, Role> roles;
  for (const auto& n : w.nodes) {
    ids.insert(n.id);
    roles[n.id] = n.role;
  }
  auto ref = [&](const YAML::Node& map, const std::string& key, const std::string& path) {
    auto id = r.id(map, key, path);
    if (id && !ids.contains(*id)) r.problem(join(path, key), "unknown node '" + id->str() + "'");
    return id.value_or(NodeId{});
  };

  if (const YAML::Node lo = root["loss_offsets"]) {
    if (r.is_seq(lo, "loss_offsets")) {
      for (std::size_t i = 0; i < lo.size(); ++i) {
        const std::string p = item("loss_offsets", i);
        if (!r.is_map(lo[i], p)) continue;
        r.keys(lo[i], {"a", "b", "loss_db"}, p);
        NodeId a = ref(lo[i], "a", p);
        NodeId b = ref(lo[i], "b", p);
        if (a == b) r.problem(p, "a loss offset needs two different nodes");
        if (b < a) std::swap(a, b);
        w.loss_offsets[{a, b}] = r.get<double>(lo[i], "loss_db", p, 0.0);
      }
    }
  }

  if (const YAML::Node bf = root["beamforming"]) {
    if (r.is_seq(bf, "beamforming")) {
      for (std::size_t i = 0; i < bf.size(); ++i) {
        const std::string p = item("beamforming", i);
        if (!r.is_map(bf[i], p)) continue;
        r.keys(bf[i], {"mode", "initiator", "responders", "repetitions", "ssw_period_us", "feedback_slot_us",
                       "ack_slot_us", "announce_slot_us"},
               p);
        BeamformingRun run;
        r.guard(join(p, "mode"), [&] {
          run.mode = beamforming_mode_from_string(r.get<std::string>(bf[i], "mode", p, "INDIVIDUAL"));
        });
        run.initiator = ref(bf[i], "initiator", p);
        const YAML::Node resp = bf[i]["responders"];
        if (!resp) {
          r.problem(join(p, "responders"), "missing");
        } else if (resp.IsScalar()) {
          run.responders.push_back(ref(bf[i], "responders", p));
        } else if (r.is_seq(resp, join(p, "responders"))) {
          for (std::size_t j = 0; j < resp.size(); ++j) {
            auto text = r.scalar<std::string>(resp[j], item(join(p, "responders"), j));
            if (!text) continue;
            if (!ids.contains(NodeId(*text))) {
              r.problem(item(join(p, "responders"), j), "unknown node '" + *text + "'");
            }
            run.responders.emplace_back(*text);
          }
        }
        if (run.mode == BeamformingMode::Individual && run.responders.size() != 1) {
          r.problem(join(p, "responders"), "INDIVIDUAL mode takes exactly one responder");
        }
        auto& t = run.timing;
        t.repetitions = r.get<int>(bf[i], "repetitions", p, t.repetitions);
        t.ssw_period_us = r.get<TimeUs>(bf[i], "ssw_period_us", p, t.ssw_period_us);
        t.feedback_slot_us = r.get<TimeUs>(bf[i], "feedback_slot_us", p, t.feedback_slot_us);
        t.ack_slot_us = r.get<TimeUs>(bf[i], "ack_slot_us", p, t.ack_slot_us);
        t.announce_slot_us = r.get<TimeUs>(bf[i], "announce_slot_us", p, t.announce_slot_us);
        if (t.repetitions < 0 || t.ssw_period_us <= 0 || t.feedback_slot_us <= 0 || t.ack_slot_us <= 0 ||
            t.announce_slot_us <= 0) {
          r.problem(p, "beamforming timing values must be positive");
        }
        w.beamforming.push_back(std::move(run));
      }
    }
  }

  if (const YAML::Node c = root["controller"]) {
    if (r.is_map(c, "controller")) {
      r.keys(c, {"dl_fraction"}, "controller");
      w.controller.dl_fraction = r.get<double>(c, "dl_fraction", "controller", w.controller.dl_fraction);
      if (!(w.controller.dl_fraction >= 0.0 && w.controller.dl_fraction <= 1.0)) {
        r.problem("controller.dl_fraction", "must lie in [0, 1]");
      }
    }
  }

  if (const YAML::Node d = root["demands"]) {
    std::set<LinkId> links;
    if (r.is_seq(d, "demands")) {
      for (std::size_t i = 0; i < d.size(); ++i) {
        const std::string p = item("demands", i);
        if (!r.is_map(d[i], p)) continue;
        r.keys(d[i], {"ap", "sta", "direction", "traffic", "rate_bps", "traffic_id", "start_us"}, p);
        FlowSpec f;
        f.ap = ref(d[i], "ap", p);
        f.sta = ref(d[i], "sta", p);
        if (roles.contains(f.ap) && !is_ap(roles[f.ap])) r.problem(join(p, "ap"), "node is not a DN_AP");
        if (f.ap == f.sta) r.problem(p, "ap and sta must differ");
        r.guard(join(p, "direction"), [&] {
          f.direction = direction_from_string(r.get<std::string>(d[i], "direction", p, "DL"));
        });
        r.guard(join(p, "traffic"), [&] {
          f.traffic = traffic_kind_from_string(r.get<std::string>(d[i], "traffic", p, "saturated"));
        });
        f.rate_bps = r.get<double>(d[i], "rate_bps", p, 0.0);
        f.traffic_id = r.get<int>(d[i], "traffic_id", p, 0);
        f.start_us = r.get<TimeUs>(d[i], "start_us", p, 0);
        if (f.traffic != TrafficKind::Saturated && !(f.rate_bps > 0.0)) {
          r.problem(join(p, "rate_bps"), "must be positive for " + to_string(f.traffic) + " traffic");
        }
        if (f.rate_bps < 0.0) r.problem(join(p, "rate_bps"), "must not be negative");
        if (f.start_us < 0) r.problem(join(p, "start_us"), "must not be negative");
        if (!links.insert(f.link()).second) r.problem(p, "second demand on link " + f.link().str());
        w.flows.push_back(std::move(f));
      }
    }
  }

  if (const YAML::Node m = root["maintenance"]) {
    const std::string p = "maintenance";
    if (r.is_map(m, p)) {
      r.keys(m, {"keepalive_period_us", "keepalive_timeout_us", "sync_tolerance_us", "resync_period_us",
                 "bandwidth_request_period_us", "tpc"},
             p);
      auto& mc = w.maintenance;
      mc.keepalive_period_us = r.get<TimeUs>(m, "keepalive_period_us", p, mc.keepalive_period_us);
      mc.keepalive_timeout_us = r.get<TimeUs>(m, "keepalive_timeout_us", p, mc.keepalive_timeout_us);
      mc.sync_tolerance_us = r.get<double>(m, "sync_tolerance_us", p, mc.sync_tolerance_us);
      mc.resync_period_us = r.get<TimeUs>(m, "resync_period_us", p, mc.resync_period_us);
      mc.bandwidth_request_period_us =
          r.get<TimeUs>(m, "bandwidth_request_period_us", p, mc.bandwidth_request_period_us);
      if (const YAML::Node tpc = m["tpc"]) {
        const std::string tp = join(p, "tpc");
        if (r.is_map(tpc, tp)) {
          r.keys(tpc, {"enabled", "target_rsni_db", "max_step_db"}, tp);
          mc.tpc_enabled = r.get<bool>(tpc, "enabled", tp, true);
          mc.tpc_target_rsni_db = r.get<double>(tpc, "target_rsni_db", tp, mc.tpc_target_rsni_db);
          mc.tpc_max_step_db = r.get<double>(tpc, "max_step_db", tp, mc.tpc_max_step_db);
        }
      }
      if (mc.keepalive_period_us <= 0) r.problem(join(p, "keepalive_period_us"), "must be positive");
      if (mc.keepalive_timeout_us <= 0) r.problem(join(p, "keepalive_timeout_us"), "must be positive");
      if (mc.sync_tolerance_us < 0) r.problem(join(p, "sync_tolerance_us"), "must not be negative");
      if (mc.resync_period_us < 0) r.problem(join(p, "resync_period_us"), "must not be negative");
      if (mc.bandwidth_request_period_us < 0) {
        r.problem(join(p, "bandwidth_request_period_us"), "must not be negative");
      }
      if (!(mc.tpc_max_step_db > 0.0)) r.problem(join(p, "tpc.max_step_db"), "must be positive");
    }
  }

  if (const YAML::Node ms = root["measurements"]) {
    if (r.is_seq(ms, "measurements")) {
      for (std::size_t i = 0; i < ms.size(); ++i) {
        const std::string p = item("measurements", i);
        if (!r.is_map(ms[i], p)) continue;
        r.keys(ms[i], {"requester", "responder", "start_us", "interval_us", "count"}, p);
        MeasurementSetup m;
        m.requester = ref(ms[i], "requester", p);
        m.responder = ref(ms[i], "responder", p);
        m.request.start_time_us = r.get<TimeUs>(ms[i], "start_us", p, 0);
        m.request.interval_us = r.get<TimeUs>(ms[i], "interval_us", p, 0);
        m.request.count = r.get<int>(ms[i], "count", p, 0);
        r.guard(p, [&] { validate(m.request); });
        w.measurements.push_back(std::move(m));
      }
    }
  }

  if (const YAML::Node ev = root["events"]) {
    if (r.is_seq(ev, "events")) {
      for (std::size_t i = 0; i < ev.size(); ++i) {
        const std::string p = item("events", i);
        if (!r.is_map(ev[i], p)) continue;
        r.keys(ev[i], {"at_us", "a", "b", "loss_db"}, p);
        LossEvent e;
        e.at_us = r.get<TimeUs>(ev[i], "at_us", p, 0);
        e.a = ref(ev[i], "a", p);
        e.b = ref(ev[i], "b", p);
        e.loss_db = r.get<double>(ev[i], "loss_db", p, 0.0);
        if (e.at_us < 0) r.problem(join(p, "at_us"), "must not be negative");
        if (e.a == e.b) r.problem(p, "an event needs two different nodes");
        w.events.push_back(std::move(e));
      }
    }
  }
}

ScenarioConfig parse_root(const YAML::Node& root) {
  Reader r;
  ScenarioConfig cfg;
  if (!root.IsMap()) throw ConfigError({"scenario: top level must be a mapping"});
  r.keys(root, {"seed", "duration_ms", "duration_us", "beacon_interval_us", "training_window_us", "data_sp",
                "slot_structure", "link_budget", "mcs_table", "frame_sizes", "codebooks", "nodes",
                "loss_offsets", "beamforming", "controller", "demands", "maintenance", "measurements",
                "events", "output"},
         "");
  cfg.world.seed = r.get<std::uint64_t>(root, "seed", "", 1);
  if (root["duration_us"]) {
    cfg.duration_us = r.get<TimeUs>(root, "duration_us", "", 0);
  } else if (root["duration_ms"]) {
    cfg.duration_us = std::llround(r.get<double>(root, "duration_ms", "", 0.0) * 1000.0);
  } else {
    r.problem("duration_ms", "missing");
  }
  if (cfg.duration_us <= 0 && (root["duration_us"] || root["duration_ms"])) {
    r.problem(root["duration_us"] ? "duration_us" : "duration_ms", "must be positive");
  }
  parse_timing(r, root, cfg.world);
  parse_radio(r, root, cfg.world);
  parse_nodes(r, root, cfg.world);
  parse_activity(r, root, cfg.world);
  if (const YAML::Node out = root["output"]) {
    if (r.is_map(out, "output")) {
      r.keys(out, {"trace", "metrics"}, "output");
      cfg.trace_path = r.get<std::string>(out, "trace", "output", "");
      cfg.metrics_path = r.get<std::string>(out, "metrics", "output", "");
    }
  }
  if (r.problems.empty()) r.guard("scenario", [&] { validate(cfg.world); });
  if (!r.problems.empty()) throw ConfigError(std::move(r.problems));
  return cfg;
}

// ---- serialization ----------------------------------------------------------

void emit_codebook(YAML::Emitter& out, const Codebook& cb) {
  out << YAML::BeginMap << YAML::Key << "sectors" << YAML::Value << YAML::BeginSeq;
  for (const auto& s : cb.sectors()) {
    out << YAML::Flow << YAML::BeginMap;
    out << YAML::Key << "boresight_deg" << YAML::Value << s.boresight_deg;
    out << YAML::Key << "beamwidth_deg" << YAML::Value << s.beamwidth_deg;
    out << YAML::Key << "mainlobe_dbi" << YAML::Value << s.mainlobe_gain_dbi;
    out << YAML::Key << "sidelobe_dbi" << YAML::Value << s.sidelobe_gain_dbi;
    out << YAML::EndMap;
  }
  out << YAML::EndSeq << YAML::EndMap;
}

template <class T>
void kv(YAML::Emitter& out, const char* key, const T& value) {
  out << YAML::Key << key << YAML::Value << value;
}

}  // namespace

ScenarioConfig parse_config(const std::string& yaml_text) {
  YAML::Node root;
  try {
    root = YAML::Load(yaml_text);
  } catch (const YAML::ParserException& e) {
    throw ConfigError({"line " + std::to_string(e.mark.line + 1) + ", column " +
                       std::to_string(e.mark.column + 1) + ": " + e.msg});
  }
  return parse_root(root);
}

ScenarioConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError({path + ": cannot open file"});
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

std::string serialize_config(const ScenarioConfig& cfg) {
  const WorldConfig& w = cfg.world;
  YAML::Emitter out;
  out.SetDoublePrecision(17);
  out << YAML::BeginMap;
  kv(out, "seed", static_cast<unsigned long long>(w.seed));
  kv(out, "duration_us", static_cast<long long>(cfg.duration_us));
  kv(out, "beacon_interval_us", static_cast<long long>(w.beacon_interval_us));
  kv(out, "training_window_us", static_cast<long long>(w.training_window_us));

  out << YAML::Key << "data_sp" << YAML::Value << YAML::Flow << YAML::BeginMap;
  kv(out, "allocation_id", w.data_sp.allocation_id);
  kv(out, "start_us", static_cast<long long>(w.data_sp.start_time_us));
  kv(out, "duration_us", static_cast<long long>(w.data_sp.duration_us));
  out << YAML::EndMap;

  out << YAML::Key << "slot_structure" << YAML::Value << YAML::BeginMap;
  kv(out, "interval_us", static_cast<long long>(w.structure.interval_duration_us));
  kv(out, "guard_us", static_cast<long long>(w.slot_guard_us));
  out << YAML::Key << "slots" << YAML::Value << YAML::BeginSeq;
  for (const auto& s : w.structure.slots) {
    out << YAML::Flow << YAML::BeginMap;
    kv(out, "start_us", static_cast<long long>(s.start_offset_us));
    kv(out, "duration_us", static_cast<long long>(s.duration_us));
    kv(out, "category", to_string(s.category));
    out << YAML::EndMap;
  }
  out << YAML::EndSeq << YAML::EndMap;

  out << YAML::Key << "link_budget" << YAML::Value << YAML::BeginMap;
  kv(out, "carrier_hz", w.link_budget.carrier_hz);
  kv(out, "bandwidth_hz", w.link_budget.bandwidth_hz);
  kv(out, "noise_figure_db", w.link_budget.noise_figure_db);
  kv(out, "interference_threshold_db", w.link_budget.interference_threshold_db);
  out << YAML::EndMap;

  out << YAML::Key << "mcs_table" << YAML::Value << YAML::BeginSeq;
  for (const auto& e : w.mcs.entries()) {
    out << YAML::Flow << YAML::BeginMap;
    kv(out, "index", e.mcs_index);
    kv(out, "min_snr_db", e.min_snr_db);
    kv(out, "rate_bps", e.phy_rate_bps);
    out << YAML::EndMap;
  }
  out << YAML::EndSeq;

  out << YAML::Key << "frame_sizes" << YAML::Value << YAML::BeginMap;
  kv(out, "data_payload_bytes", w.sizes.data_payload_bytes);
  kv(out, "data_overhead_bytes", w.sizes.data_overhead_bytes);
  kv(out, "ssw_bytes", w.sizes.ssw_bytes);
  kv(out, "ack_bytes", w.sizes.ack_bytes);
  kv(out, "block_ack_bytes", w.sizes.block_ack_bytes);
  kv(out, "announce_bytes", w.sizes.announce_bytes);
  kv(out, "link_measurement_bytes", w.sizes.link_measurement_bytes);
  kv(out, "rts_bytes", w.sizes.rts_bytes);
  out << YAML::EndMap;

  out << YAML::Key << "nodes" << YAML::Value << YAML::BeginSeq;
  for (const auto& n : w.nodes) {
    out << YAML::BeginMap;
    kv(out, "id", n.id.str());
    kv(out, "role", to_string(n.role));
    out << YAML::Key << "position" << YAML::Value << YAML::Flow << YAML::BeginSeq << n.position.x_m
        << n.position.y_m << YAML::EndSeq;
    kv(out, "tx_power_dbm", n.tx_power_dbm);
    out << YAML::Key << "power_limits" << YAML::Value << YAML::Flow << YAML::BeginMap;
    kv(out, "min_dbm", n.power_limits.min_dbm);
    kv(out, "max_dbm", n.power_limits.max_dbm);
    out << YAML::EndMap;
    kv(out, "tdd_capable", n.tdd_capable);
    out << YAML::Key << "clock" << YAML::Value << YAML::Flow << YAML::BeginMap;
    kv(out, "offset_us", n.clock.offset_us);
    kv(out, "drift_ppm", n.clock.drift_ppm);
    kv(out, "quality", to_string(n.clock.quality));
    out << YAML::EndMap;
    out << YAML::Key << "codebook" << YAML::Value;
    emit_codebook(out, n.codebook);
    out << YAML::EndMap;
  }
  out << YAML::EndSeq;

  out << YAML::Key << "loss_offsets" << YAML::Value << YAML::BeginSeq;
  for (const auto& [pair, loss] : w.loss_offsets) {
    out << YAML::Flow << YAML::BeginMap;
    kv(out, "a", pair.first.str());
    kv(out, "b", pair.second.str());
    kv(out, "loss_db", loss);
    out << YAML::EndMap;
  }
  out << YAML::EndSeq;

  out << YAML::Key << "beamforming" << YAML::Value << YAML::BeginSeq;
  for (const auto& run : w.beamforming) {
    out << YAML::BeginMap;
    kv(out, "mode", to_string(run.mode));
    kv(out, "initiator", run.initiator.str());
    out << YAML::Key << "responders" << YAML::Value << YAML::Flow << YAML::BeginSeq;
    for (const auto& id : run.responders) out << id.str();
    out << YAML::EndSeq;
    kv(out, "repetitions", run.timing.repetitions);
    kv(out, "ssw_period_us", static_cast<long long>(run.timing.ssw_period_us));
    kv(out, "feedback_slot_us", static_cast<long long>(run.timing.feedback_slot_us));
    kv(out, "ack_slot_us", static_cast<long long>(run.timing.ack_slot_us));
    kv(out, "announce_slot_us", static_cast<long long>(run.timing.announce_slot_us));
    out << YAML::EndMap;
  }
  out << YAML::EndSeq;

  out << YAML::Key << "controller" << YAML::Value << YAML::BeginMap;
  kv(out, "dl_fraction", w.controller.dl_fraction);
  out << YAML::EndMap;

  out << YAML::Key << "demands" << YAML::Value << YAML::BeginSeq;
  for (const auto& f : w.flows) {
    out << YAML::Flow << YAML::BeginMap;
    kv(out, "ap", f.ap.str());
    kv(out, "sta", f.sta.str());
    kv(out, "direction", to_string(f.direction));
    kv(out, "traffic", to_string(f.traffic));
    kv(out, "rate_bps", f.rate_bps);
    kv(out, "traffic_id", f.traffic_id);
    kv(out, "start_us", static_cast<long long>(f.start_us));
    out << YAML::EndMap;
  }
  out << YAML::EndSeq;

  const auto& mc = w.maintenance;
  out << YAML::Key << "maintenance" << YAML::Value << YAML::BeginMap;
  kv(out, "keepalive_period_us", static_cast<long long>(mc.keepalive_period_us));
  kv(out, "keepalive_timeout_us", static_cast<long long>(mc.keepalive_timeout_us));
  kv(out, "sync_tolerance_us", mc.sync_tolerance_us);
  kv(out, "resync_period_us", static_cast<long long>(mc.resync_period_us));
  kv(out, "bandwidth_request_period_us", static_cast<long long>(mc.bandwidth_request_period_us));
  out << YAML::Key << "tpc" << YAML::Value << YAML::Flow << YAML::BeginMap;
  kv(out, "enabled", mc.tpc_enabled);
  kv(out, "target_rsni_db", mc.tpc_target_rsni_db);
  kv(out, "max_step_db", mc.tpc_max_step_db);
  out << YAML::EndMap << YAML::EndMap;

  out << YAML::Key << "measurements" << YAML::Value << YAML::BeginSeq;
  for (const auto& m : w.measurements) {
    out << YAML::Flow << YAML::BeginMap;
    kv(out, "requester", m.requester.str());
    kv(out, "responder", m.responder.str());
    kv(out, "start_us", static_cast<long long>(m.request.start_time_us));
    kv(out, "interval_us", static_cast<long long>(m.request.interval_us));
    kv(out, "count", m.request.count);
    out << YAML::EndMap;
  }
  out << YAML::EndSeq;

  out << YAML::Key << "events" << YAML::Value << YAML::BeginSeq;
  for (const auto& e : w.events) {
    out << YAML::Flow << YAML::BeginMap;
    kv(out, "at_us", static_cast<long long>(e.at_us));
    kv(out, "a", e.a.str());
    kv(out, "b", e.b.str());
    kv(out, "loss_db", e.loss_db);
    out << YAML::EndMap;
  }
  out << YAML::EndSeq;

  if (!cfg.trace_path.empty() || !cfg.metrics_path.empty()) {
    out << YAML::Key << "output" << YAML::Value << YAML::BeginMap;
    if (!cfg.trace_path.empty()) kv(out, "trace", cfg.trace_path);
    if (!cfg.metrics_path.empty()) kv(out, "metrics", cfg.metrics_path);
    out << YAML::EndMap;
  }
  out << YAML::EndMap;
  return std::string(out.c_str()) + "\n";
}

// ---- orchestration ----------------------------------------------------------

nlohmann::ordered_json to_json(const GlobalSchedule& schedule) {
  nlohmann::ordered_json j;
  const auto& g = schedule.grid;
  j["beacon_interval_us"] = g.beacon_interval_us;
  j["sp"] = {{"allocation_id", g.sp.allocation_id},
             {"start_us", g.sp.start_time_us},
             {"duration_us", g.sp.duration_us}};
  j["interval_us"] = g.structure.interval_duration_us;
  auto slots = nlohmann::ordered_json::array();
  for (std::size_t i = 0; i < g.structure.slots.size(); ++i) {
    const auto& s = g.structure.slots[i];
    auto active = nlohmann::ordered_json::array();
    for (const auto& id : schedule.active_links(static_cast<int>(i))) active.push_back(id.str());
    slots.push_back({{"index", i},
                     {"start_us", s.start_offset_us},
                     {"duration_us", s.duration_us},
                     {"category", to_string(s.category)},
                     {"active", std::move(active)}});
  }
  j["slots"] = std::move(slots);
  auto aps = nlohmann::ordered_json::array();
  for (const auto& ap : schedule.aps) {
    auto entries = nlohmann::ordered_json::array();
    for (const auto& e : ap.schedule.entries) {
      entries.push_back({{"slot", e.slot_index},
                         {"sta", e.assignee ? e.assignee->str() : ""},
                         {"direction", to_string(e.direction)}});
    }
    aps.push_back({{"ap", ap.ap.str()}, {"entries", std::move(entries)}});
  }
  j["aps"] = std::move(aps);
  auto grants = nlohmann::ordered_json::array();
  for (const auto& gr : schedule.grants) {
    grants.push_back({{"link", gr.link.str()},
                      {"direction", to_string(gr.direction)},
                      {"elastic", gr.elastic},
                      {"demanded_bps", gr.demanded_rate_bps},
                      {"granted_bps", gr.granted_rate_bps},
                      {"phy_rate_bps", gr.phy_rate_bps},
                      {"data_slots", gr.data_slots},
                      {"basic_slots", gr.basic_slots},
                      {"starved", gr.starved_reason.empty() ? nlohmann::ordered_json(nullptr)
                                                            : nlohmann::ordered_json(gr.starved_reason)}});
  }
  j["grants"] = std::move(grants);
  return j;
}

nlohmann::ordered_json to_json(const BeamformingResult& result) {
  nlohmann::ordered_json j;
  j["mode"] = to_string(result.mode);
  auto links = nlohmann::ordered_json::array();
  for (const auto& l : result.links) {
    links.push_back({{"initiator", l.initiator_id.str()},
                     {"responder", l.responder_id.str()},
                     {"initiator_sector", l.initiator_sector},
                     {"responder_sector", l.responder_sector},
                     {"snr_db", l.snr_db}});
  }
  j["links"] = std::move(links);
  auto reports = nlohmann::ordered_json::array();
  for (const auto& r : result.reports) {
    auto best = std::max_element(r.samples.begin(), r.samples.end(),
                                 [](const auto& a, const auto& b) { return a.snr_db < b.snr_db; });
    nlohmann::ordered_json rj{{"initiator", r.initiator_id.str()},
                              {"responder", r.responder_id.str()},
                              {"samples", r.samples.size()}};
    if (best != r.samples.end()) {
      rj["best"] = {{"initiator_sector", best->initiator_sector},
                    {"responder_sector", best->responder_sector},
                    {"snr_db", best->snr_db}};
    }
    reports.push_back(std::move(rj));
  }
  j["reports"] = std::move(reports);
  j["ssw_transmissions"] = result.ssw_transmissions;
  j["responder_transmissions"] = result.responder_transmissions;
  j["end_us"] = result.end_us;
  return j;
}

nlohmann::ordered_json infeasibility_report(const GlobalSchedule& schedule) {
  nlohmann::ordered_json j;
  j["error"] = "infeasible_schedule";
  auto starved = nlohmann::ordered_json::array();
  for (const auto& g : schedule.grants) {
    if (!g.starved()) continue;
    starved.push_back({{"link", g.link.str()},
                       {"ap", g.ap.str()},
                       {"sta", g.sta.str()},
                       {"direction", to_string(g.direction)},
                       {"demanded_bps", g.demanded_rate_bps},
                       {"granted_bps", g.granted_rate_bps},
                       {"reason", g.starved_reason}});
  }
  j["starved"] = std::move(starved);
  return j;
}

void write_metrics_csv(std::ostream& out, const Metrics& metrics) {
  const double seconds = static_cast<double>(metrics.end_us - metrics.data_start_us) / 1e6;
  out << "link,ap,sta,direction,demanded_bps,granted_bps,starved,offered_bits,delivered_bits,"
         "dropped_bits,queued_bits,goodput_bits,goodput_bps,phy_data_bits,mpdus_delivered,retries,"
         "latency_mean_us,latency_max_us,ack_delay_max_us,last_mcs,tx_power_dbm\n";
  out << std::setprecision(10);
  for (const auto& l : metrics.links) {
    double mean = 0.0;
    TimeUs max_latency = 0;
    for (TimeUs v : l.latency_us) {
      mean += static_cast<double>(v);
      max_latency = std::max(max_latency, v);
    }
    if (!l.latency_us.empty()) mean /= static_cast<double>(l.latency_us.size());
    TimeUs max_ack = 0;
    for (TimeUs v : l.ack_delay_us) max_ack = std::max(max_ack, v);
    out << l.link.str() << ',' << l.ap.str() << ',' << l.sta.str() << ',' << to_string(l.direction) << ','
        << l.demanded_rate_bps << ',' << l.granted_rate_bps << ',' << (l.starved ? 1 : 0) << ','
        << l.offered_bits << ',' << l.delivered_bits << ',' << l.dropped_bits << ',' << l.queued_bits << ','
        << l.goodput_bits << ',' << (seconds > 0.0 ? static_cast<double>(l.goodput_bits) / seconds : 0.0)
        << ',' << l.phy_data_bits << ',' << l.mpdus_delivered << ',' << l.retries << ',' << mean << ','
        << max_latency << ',' << max_ack << ',' << l.last_mcs << ',' << l.tx_power_dbm << '\n';
  }
}

nlohmann::ordered_json to_json(const Metrics& m) {
  using Json = nlohmann::ordered_json;
  const double seconds = static_cast<double>(m.end_us - m.data_start_us) / 1e6;
  Json links = Json::array();
  for (const auto& l : m.links) {
    links.push_back({{"link", l.link.str()},
                     {"ap", l.ap.str()},
                     {"sta", l.sta.str()},
                     {"direction", to_string(l.direction)},
                     {"demanded_bps", l.demanded_rate_bps},
                     {"granted_bps", l.granted_rate_bps},
                     {"starved", l.starved},
                     {"offered_bits", l.offered_bits},
                     {"delivered_bits", l.delivered_bits},
                     {"dropped_bits", l.dropped_bits},
                     {"queued_bits", l.queued_bits},
                     {"goodput_bits", l.goodput_bits},
                     {"goodput_bps", seconds > 0.0 ? static_cast<double>(l.goodput_bits) / seconds : 0.0},
                     {"mpdus_delivered", l.mpdus_delivered},
                     {"retries", l.retries},
                     {"latency_us", l.latency_us},
                     {"ack_delay_us", l.ack_delay_us},
                     {"last_mcs", l.last_mcs},
                     {"tx_power_dbm", l.tx_power_dbm}});
  }
  Json reports = Json::array();
  for (const auto& r : m.reports) {
    reports.push_back({{"t", r.time_us},
                       {"reporter", r.reporter.str()},
                       {"requester", r.requester.str()},
                       {"rsni_db", r.rsni_db},
                       {"sequence_number", r.sequence_number}});
  }
  Json tpc = Json::array();
  for (const auto& u : m.tpc_updates) {
    tpc.push_back({{"t", u.time_us},
                   {"link", u.link.str()},
                   {"before_dbm", u.before_dbm},
                   {"after_dbm", u.after_dbm},
                   {"measured_rsni_db", u.measured_rsni_db}});
  }
  Json dead = Json::array();
  for (const auto& d : m.dead_links) dead.push_back(d.str());
  Json holdover = Json::array();
  for (const auto& n : m.holdover_nodes) holdover.push_back(n.str());
  return {{"data_start_us", m.data_start_us},
          {"end_us", m.end_us},
          {"data_utilization", m.data_utilization},
          {"trained_links", m.trained_links},
          {"ssw_transmissions", m.ssw_transmissions},
          {"replans", m.replans},
          {"prohibited_frames", m.prohibited_frames},
          {"trace_records", m.trace_records},
          {"links", std::move(links)},
          {"reports", std::move(reports)},
          {"tpc_updates", std::move(tpc)},
          {"dead_links", std::move(dead)},
          {"holdover_nodes", std::move(holdover)}};
}

namespace {

nlohmann::ordered_json error_report(const std::string& kind, const std::string& message) {
  return {{"error", kind}, {"message", message}};
}

template <class F>
RunOutcome guarded(const ScenarioConfig& cfg, F&& body) {
  RunOutcome out;
  std::ofstream trace_file;
  std::unique_ptr<TraceSink> sink;
  if (!cfg.trace_path.empty()) {
    trace_file.open(cfg.trace_path);
    if (!trace_file) {
      out.exit_code = kExitRuntimeError;
      out.report = error_report("io", "cannot write trace file " + cfg.trace_path);
      return out;
    }
    sink = std::make_unique<TraceSink>(trace_file);
  }
  try {
    World world(cfg.world, sink.get());
    body(world, out);
  } catch (const InvalidArgument& e) {
    out.exit_code = kExitConfigError;
    out.report = error_report("config", e.what());
  } catch (const StructureError& e) {
    out.exit_code = kExitConfigError;
    out.report = error_report("config", e.what());
  } catch (const std::exception& e) {
    out.exit_code = kExitRuntimeError;
    out.report = error_report("runtime", e.what());
  }
  return out;
}

}  // namespace

RunOutcome plan_scenario(const ScenarioConfig& cfg) {
  return guarded(cfg, [&](World& world, RunOutcome& out) {
    out.plan = world.prepare();
    if (!out.plan.starved().empty()) {
      out.exit_code = kExitInfeasible;
      out.report = infeasibility_report(out.plan);
    }
  });
}

RunOutcome run_scenario(const ScenarioConfig& cfg) {
  return guarded(cfg, [&](World& world, RunOutcome& out) {
    out.plan = world.prepare();
    if (!out.plan.starved().empty()) {
      out.exit_code = kExitInfeasible;
      out.report = infeasibility_report(out.plan);
      return;
    }
    out.metrics = world.run_until(world.data_start_us() + cfg.duration_us);
    if (!cfg.metrics_path.empty()) {
      std::ofstream csv(cfg.metrics_path);
      if (!csv) {
        out.exit_code = kExitRuntimeError;
        out.report = error_report("io", "cannot write metrics file " + cfg.metrics_path);
        return;
      }
      write_metrics_csv(csv, out.metrics);
    }
  });
}

}  // namespace fwa
