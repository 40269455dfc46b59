// Python module fwa_sim._core. Structured results cross the boundary as JSON
// text; the package wrapper turns them into dicts.

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "fwa/channel.hpp"
#include "fwa/errors.hpp"
#include "fwa/frames.hpp"
#include "fwa/link_maintenance.hpp"
#include "fwa/scenario.hpp"
#include "fwa/tdd_schedule.hpp"

namespace py = pybind11;

namespace {

using Json = nlohmann::ordered_json;

struct Scenario {
  fwa::ScenarioConfig cfg;

  std::string run(const std::string& trace, const std::string& metrics) const {
    fwa::ScenarioConfig c = cfg;
    c.trace_path = trace;
    c.metrics_path = metrics;
    fwa::RunOutcome out;
    {
      py::gil_scoped_release release;
      out = fwa::run_scenario(c);
    }
    Json j{{"exit_code", out.exit_code}, {"plan", fwa::to_json(out.plan)}};
    if (out.exit_code == fwa::kExitOk) j["metrics"] = fwa::to_json(out.metrics);
    if (!out.report.is_null()) j["report"] = out.report;
    return j.dump();
  }

  std::string plan() const {
    fwa::ScenarioConfig c = cfg;
    c.trace_path.clear();
    c.metrics_path.clear();
    const auto out = fwa::plan_scenario(c);
    Json j{{"exit_code", out.exit_code}, {"plan", fwa::to_json(out.plan)}};
    if (!out.report.is_null()) j["report"] = out.report;
    return j.dump();
  }

  /// Runs the scenario with an in-memory trace and returns it as JSON lines.
  std::string trace() const {
    std::string lines;
    {
      py::gil_scoped_release release;
      fwa::TraceSink sink;
      sink.keep_records(true);
      fwa::World world(cfg.world, &sink);
      world.prepare();
      world.run_until(world.data_start_us() + cfg.duration_us);
      for (const auto& r : sink.records()) lines += r.dump() + '\n';
    }
    return lines;
  }
};

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "TDD mmWave distribution network simulator";

  static py::exception<fwa::ConfigError> config_error(m, "ConfigError", PyExc_ValueError);
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const fwa::ConfigError& e) {
      config_error(e.what());
    } catch (const fwa::InvalidArgument& e) {
      PyErr_SetString(PyExc_ValueError, e.what());
    }
  });

  py::class_<Scenario>(m, "Scenario")
      .def_static("from_yaml", [](const std::string& text) { return Scenario{fwa::parse_config(text)}; })
      .def_static("load", [](const std::string& path) { return Scenario{fwa::load_config(path)}; })
      .def("to_yaml", [](const Scenario& s) { return fwa::serialize_config(s.cfg); })
      .def_property(
          "seed", [](const Scenario& s) { return s.cfg.world.seed; },
          [](Scenario& s, std::uint64_t seed) { s.cfg.world.seed = seed; })
      .def_property(
          "duration_us", [](const Scenario& s) { return s.cfg.duration_us; },
          [](Scenario& s, fwa::TimeUs d) {
            if (d <= 0) throw fwa::InvalidArgument("duration_us must be positive");
            s.cfg.duration_us = d;
          })
      .def("_run", &Scenario::run, py::arg("trace") = "", py::arg("metrics") = "")
      .def("_plan", &Scenario::plan)
      .def("_trace", &Scenario::trace);

  m.def("path_loss_db", &fwa::path_loss_db, py::arg("distance_m"), py::arg("carrier_hz") = 60e9);
  m.def("airtime_us", &fwa::airtime_us, py::arg("bits"), py::arg("rate_bps"));
  m.def("propagation_delay_us", &fwa::propagation_delay_us, py::arg("distance_m"));
  m.def("tpc_update",
        [](double current, double measured, double target, double lo, double hi, double max_step) {
          return fwa::tpc_update(current, measured, target, {lo, hi}, max_step);
        },
        py::arg("current_dbm"), py::arg("measured_rsni_db"), py::arg("target_rsni_db"), py::arg("min_dbm"),
        py::arg("max_dbm"), py::arg("max_step_db"));
  m.def("default_slot_starts",
        [](fwa::TimeUs sp_duration_us) {
          const auto slots =
              fwa::expand_sp({1, 0, sp_duration_us, true}, fwa::default_slot_structure(1), {1, {}});
          std::vector<std::pair<fwa::TimeUs, std::string>> out;
          for (const auto& s : slots) out.emplace_back(s.start_us, fwa::to_string(s.category));
          return out;
        },
        py::arg("sp_duration_us"),
        "(start_us, category) of every slot of an SP laid out with the default structure.");
}
