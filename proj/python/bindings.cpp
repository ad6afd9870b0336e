#include <pybind11/eigen.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "psgait/core_model.hpp"
#include "psgait/dcm.hpp"
#include "psgait/planner.hpp"
#include "psgait/scenario_io.hpp"
#include "psgait/sim.hpp"
#include "psgait/terrain.hpp"

namespace py = pybind11;
using namespace psgait;

namespace {

// JSON crosses the boundary as text; the Python side wraps it with the json module.
ScenarioFile resolve(const std::string& config_json, const std::string& preset_name,
                     const std::vector<std::string>& overrides) {
  nlohmann::json doc;
  if (!preset_name.empty()) {
    doc = to_json(preset(preset_name));
  } else {
    try {
      doc = nlohmann::json::parse(config_json.empty() ? "{}" : config_json);
    } catch (const nlohmann::json::parse_error& e) {
      throw ConfigError(std::string("invalid JSON: ") + e.what());
    }
    doc = to_json(scenario_from_json(doc));
  }
  for (const auto& o : overrides) apply_override(doc, o);
  return scenario_from_json(doc);
}

py::array_t<double> sample_matrix(const SimTrace& tr) {
  constexpr py::ssize_t cols = 13;
  py::array_t<double> out({static_cast<py::ssize_t>(tr.samples.size()), cols});
  auto m = out.mutable_unchecked<2>();
  for (std::size_t i = 0; i < tr.samples.size(); ++i) {
    const auto& s = tr.samples[i];
    const double row[cols] = {s.t,         s.state.x,      s.state.y,      s.state.z, s.state.vx,
                              s.state.vy,  s.state.vz,     s.state.lcom_x, s.state.lcom_y,
                              s.dcm.xi_x,  s.dcm.xi_y,     s.contact.position.x(),
                              s.contact.position.y()};
    for (py::ssize_t j = 0; j < cols; ++j) m(i, j) = row[j];
  }
  return out;
}

py::dict run_impl(const std::string& config_json, const std::string& preset_name,
                  const std::vector<std::string>& overrides) {
  const ScenarioFile f = resolve(config_json, preset_name, overrides);
  SimTrace tr;
  {
    py::gil_scoped_release release;
    tr = run_closed_loop(f.scenario, f.sim, f.params, f.planner);
  }
  std::ostringstream trace_csv, events_csv;
  write_trace_csv(trace_csv, tr);
  write_events_csv(events_csv, tr);
  py::dict out;
  out["summary_json"] = summary_json(tr, f).dump();
  out["samples"] = sample_matrix(tr);
  out["trace_csv"] = trace_csv.str();
  out["events_csv"] = events_csv.str();
  return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Piecewise-slope pendulum walking core";

  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<SingularTransition>(m, "SingularTransition", PyExc_ArithmeticError);
  py::register_exception<PreSlopeViolation>(m, "PreSlopeViolation", PyExc_ValueError);

  py::enum_<Side>(m, "Side").value("Left", Side::Left).value("Right", Side::Right);
  py::enum_<CamConvention>(m, "CamConvention")
      .value("Standard", CamConvention::Standard)
      .value("Mirrored", CamConvention::Mirrored);

  py::class_<ComState>(m, "ComState")
      .def(py::init<>())
      .def(py::init([](double x, double y, double z, double vx, double vy, double vz, double lx,
                       double ly) { return ComState{x, y, z, vx, vy, vz, lx, ly}; }),
           py::arg("x") = 0.0, py::arg("y") = 0.0, py::arg("z") = 0.0, py::arg("vx") = 0.0,
           py::arg("vy") = 0.0, py::arg("vz") = 0.0, py::arg("lcom_x") = 0.0,
           py::arg("lcom_y") = 0.0)
      .def_readwrite("x", &ComState::x)
      .def_readwrite("y", &ComState::y)
      .def_readwrite("z", &ComState::z)
      .def_readwrite("vx", &ComState::vx)
      .def_readwrite("vy", &ComState::vy)
      .def_readwrite("vz", &ComState::vz)
      .def_readwrite("lcom_x", &ComState::lcom_x)
      .def_readwrite("lcom_y", &ComState::lcom_y)
      .def("__eq__", [](const ComState& a, const ComState& b) { return a == b; })
      .def("__repr__", [](const ComState& s) {
        std::ostringstream os;
        os << "ComState(x=" << s.x << ", y=" << s.y << ", z=" << s.z << ", vx=" << s.vx
           << ", vy=" << s.vy << ", vz=" << s.vz << ", lcom_x=" << s.lcom_x
           << ", lcom_y=" << s.lcom_y << ")";
        return os.str();
      });

  py::class_<SlopeGradient>(m, "SlopeGradient")
      .def(py::init<>())
      .def(py::init<double, double>(), py::arg("kx"), py::arg("ky"))
      .def_property_readonly("kx", &SlopeGradient::kx)
      .def_property_readonly("ky", &SlopeGradient::ky);

  py::class_<ContactPoint>(m, "ContactPoint")
      .def(py::init([](const Eigen::Vector3d& p, Side side) { return ContactPoint{p, side}; }),
           py::arg("position") = Eigen::Vector3d::Zero().eval(), py::arg("side") = Side::Left)
      .def_readwrite("position", &ContactPoint::position)
      .def_readwrite("side", &ContactPoint::side);

  py::class_<PendulumParams>(m, "PendulumParams")
      .def(py::init<>())
      .def_readwrite("mass", &PendulumParams::mass)
      .def_readwrite("z_nominal", &PendulumParams::z_tilde_nom)
      .def_readwrite("alpha", &PendulumParams::alpha)
      .def_readwrite("cam_convention", &PendulumParams::cam_convention)
      .def_property_readonly("omega", &PendulumParams::omega);

  py::class_<NominalOrbit>(m, "NominalOrbit")
      .def_readonly("xdot_m", &NominalOrbit::xdot_m)
      .def_readonly("y_m", &NominalOrbit::y_m)
      .def_readonly("ydot_m", &NominalOrbit::ydot_m)
      .def_readonly("b_nom_x", &NominalOrbit::b_nom_x)
      .def_readonly("b_nom_y", &NominalOrbit::b_nom_y);

  m.def("galip_velocity", &galip_velocity, py::arg("state"), py::arg("params"),
        py::arg("support_z") = 0.0);
  m.def(
      "com_flow",
      [](const ComState& s, const ContactPoint& c, const SlopeGradient& k,
         const PendulumParams& p, double t, double cam_decay, const Eigen::Vector2d& accel) {
        return com_flow(s, c, k, p, t, FlowForcing{cam_decay, accel});
      },
      py::arg("state"), py::arg("contact"), py::arg("gradient"), py::arg("params"), py::arg("t"),
      py::arg("cam_decay") = 0.0, py::arg("accel") = Eigen::Vector2d::Zero().eval());
  m.def("delta_z_dot", &delta_z_dot, py::arg("state"), py::arg("pre"), py::arg("post"),
        py::arg("contact"));
  m.def("reset_map", &reset_map, py::arg("state"), py::arg("pre"), py::arg("post"),
        py::arg("contact"));
  m.def("nominal_orbit", &nominal_orbit, py::arg("px"), py::arg("py"), py::arg("w_signed"),
        py::arg("t_step"), py::arg("params"));
  m.def("deviation_decay", &deviation_decay, py::arg("x_dev"), py::arg("px"), py::arg("t_step"),
        py::arg("params"));

  m.def("preset_names", &preset_names);
  m.def(
      "preset_json", [](const std::string& name) { return to_json(preset(name)).dump(); },
      py::arg("name"));
  m.def(
      "normalize_config",
      [](const std::string& config_json) { return to_json(resolve(config_json, "", {})).dump(); },
      py::arg("config_json"));
  m.def("run", &run_impl, py::arg("config_json") = "", py::arg("preset") = "",
        py::arg("overrides") = std::vector<std::string>{});
}
