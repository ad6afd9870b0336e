#include "psgait/scenario_io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

namespace psgait {

using nlohmann::json;

namespace {

json vec(const Eigen::VectorXd& v) {
  json arr = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v[i]);
  return arr;
}

const char* convention_name(CamConvention c) {
  return c == CamConvention::Standard ? "standard" : "mirrored";
}

// Reads one JSON object, remembering which keys were consumed so leftovers can be rejected.
class ObjectReader {
 public:
  ObjectReader(const json& obj, std::string path) : obj_(obj), path_(std::move(path)) {
    if (!obj_.is_object()) fail(path_, "expected an object");
  }

  [[noreturn]] static void fail(const std::string& where, const std::string& what) {
    throw ConfigError(where + ": " + what);
  }

  bool has(const std::string& key) {
    seen_.insert(key);
    return obj_.contains(key);
  }

  double number(const std::string& key, double fallback) {
    if (!has(key)) return fallback;
    const json& v = obj_.at(key);
    if (!v.is_number()) fail(where(key), "expected a number");
    return v.get<double>();
  }

  int integer(const std::string& key, int fallback) {
    if (!has(key)) return fallback;
    const json& v = obj_.at(key);
    if (!v.is_number_integer()) fail(where(key), "expected an integer");
    return v.get<int>();
  }

  std::uint64_t unsigned_integer(const std::string& key, std::uint64_t fallback) {
    if (!has(key)) return fallback;
    const json& v = obj_.at(key);
    if (!v.is_number_integer() || v.get<long long>() < 0) fail(where(key), "expected a non-negative integer");
    return v.get<std::uint64_t>();
  }

  bool boolean(const std::string& key, bool fallback) {
    if (!has(key)) return fallback;
    const json& v = obj_.at(key);
    if (!v.is_boolean()) fail(where(key), "expected true or false");
    return v.get<bool>();
  }

  std::string string(const std::string& key, const std::string& fallback) {
    if (!has(key)) return fallback;
    const json& v = obj_.at(key);
    if (!v.is_string()) fail(where(key), "expected a string");
    return v.get<std::string>();
  }

  template <int N>
  Eigen::Matrix<double, N, 1> vector(const std::string& key,
                                     const Eigen::Matrix<double, N, 1>& fallback) {
    if (!has(key)) return fallback;
    const json& v = obj_.at(key);
    if (!v.is_array() || v.size() != N) fail(where(key), "expected an array of " + std::to_string(N) + " numbers");
    Eigen::Matrix<double, N, 1> out;
    for (int i = 0; i < N; ++i) {
      if (!v[i].is_number()) fail(where(key), "expected numbers");
      out[i] = v[i].get<double>();
    }
    return out;
  }

  const json* child(const std::string& key) {
    if (!has(key)) return nullptr;
    return &obj_.at(key);
  }

  std::string where(const std::string& key) const { return path_ + "." + key; }

  void finish() const {
    for (const auto& item : obj_.items()) {
      if (!seen_.count(item.key())) fail(where(item.key()), "unknown key");
    }
  }

 private:
  const json& obj_;
  std::string path_;
  std::set<std::string> seen_;
};

void read_scenario(const json& obj, ScenarioConfig& sc) {
  ObjectReader r(obj, "scenario");
  sc.name = r.string("name", sc.name);
  sc.p_init = r.vector<3>("p_init", sc.p_init);
  sc.yaw_step = r.number("yaw_step", sc.yaw_step);
  if (const json* d = r.child("disturbance")) {
    ObjectReader dr(*d, "scenario.disturbance");
    sc.disturbance[0] = dr.vector<2>("x", sc.disturbance[0]);
    sc.disturbance[1] = dr.vector<2>("y", sc.disturbance[1]);
    sc.disturbance[2] = dr.vector<2>("z", sc.disturbance[2]);
    dr.finish();
  }
  if (const json* e = r.child("elevation")) {
    ObjectReader er(*e, "scenario.elevation");
    try {
      sc.elevation_pattern =
          elevation_pattern_from_string(er.string("pattern", to_string(sc.elevation_pattern)));
    } catch (const std::invalid_argument& ex) {
      ObjectReader::fail("scenario.elevation.pattern", ex.what());
    }
    sc.elevation_amplitude = er.number("amplitude", sc.elevation_amplitude);
    er.finish();
  }
  sc.n_stones = r.integer("n_stones", sc.n_stones);
  sc.seed = r.unsigned_integer("seed", sc.seed);
  sc.alpha = r.number("alpha", sc.alpha);
  sc.pslip_enabled = r.boolean("pslip_enabled", sc.pslip_enabled);
  sc.step_width = r.number("step_width", sc.step_width);
  sc.stone_half_extents = r.vector<2>("stone_half_extents", sc.stone_half_extents);
  const std::string first = r.string("first_support", sc.first_support == Side::Left ? "left" : "right");
  if (first != "left" && first != "right")
    ObjectReader::fail("scenario.first_support", "expected \"left\" or \"right\"");
  sc.first_support = first == "left" ? Side::Left : Side::Right;

  if (const json* pushes = r.child("pushes")) {
    if (!pushes->is_array()) ObjectReader::fail("scenario.pushes", "expected an array");
    sc.pushes.clear();
    for (std::size_t i = 0; i < pushes->size(); ++i) {
      ObjectReader pr((*pushes)[i], "scenario.pushes[" + std::to_string(i) + "]");
      Push p;
      p.t_start = pr.number("t", p.t_start);
      p.force = pr.vector<3>("force", p.force);
      p.duration = pr.number("duration", p.duration);
      pr.finish();
      sc.pushes.push_back(p);
    }
  }
  if (const json* pulses = r.child("cam_pulses")) {
    if (!pulses->is_array()) ObjectReader::fail("scenario.cam_pulses", "expected an array");
    sc.cam_pulses.clear();
    for (std::size_t i = 0; i < pulses->size(); ++i) {
      ObjectReader cr((*pulses)[i], "scenario.cam_pulses[" + std::to_string(i) + "]");
      CamPulse c;
      c.t_start = cr.number("t", c.t_start);
      c.impulse = cr.vector<2>("impulse", c.impulse);
      c.period = cr.number("period", c.period);
      c.count = cr.integer("count", c.count);
      c.alternate = cr.boolean("alternate", c.alternate);
      cr.finish();
      sc.cam_pulses.push_back(c);
    }
  }
  r.finish();
}

void read_sim(const json& obj, SimConfig& sim) {
  ObjectReader r(obj, "sim");
  sim.dt = r.number("dt", sim.dt);
  sim.replan_hz = r.number("replan_hz", sim.replan_hz);
  sim.cam_decay_lambda = r.number("cam_decay_lambda", sim.cam_decay_lambda);
  sim.max_steps = r.integer("max_steps", sim.max_steps);
  sim.fall_threshold = r.number("fall_threshold", sim.fall_threshold);
  r.finish();
}

void read_params(const json& obj, PendulumParams& p) {
  ObjectReader r(obj, "params");
  p.mass = r.number("mass", p.mass);
  p.z_tilde_nom = r.number("z_nominal", p.z_tilde_nom);
  const std::string conv = r.string("cam_convention", convention_name(p.cam_convention));
  if (conv == "standard") {
    p.cam_convention = CamConvention::Standard;
  } else if (conv == "mirrored") {
    p.cam_convention = CamConvention::Mirrored;
  } else {
    ObjectReader::fail("params.cam_convention", "expected \"standard\" or \"mirrored\"");
  }
  r.finish();
}

void read_planner(const json& obj, PlannerConfig& pc) {
  ObjectReader r(obj, "planner");
  pc.horizon = r.integer("horizon", pc.horizon);
  pc.t_nom = r.number("t_nom", pc.t_nom);
  pc.t_min = r.number("t_min", pc.t_min);
  pc.t_max = r.number("t_max", pc.t_max);
  pc.weights.w_tau = r.number("w_tau", pc.weights.w_tau);
  pc.weights.w_b = r.number("w_b", pc.weights.w_b);
  pc.weights.w_u = r.number("w_u", pc.weights.w_u);
  pc.leg_reach = r.number("leg_reach", pc.leg_reach);
  pc.min_remaining = r.number("min_remaining", pc.min_remaining);
  pc.max_iterations = r.integer("max_iterations", pc.max_iterations);
  r.finish();
}

}  // namespace

json to_json(const ScenarioFile& file) {
  const ScenarioConfig& sc = file.scenario;
  json pushes = json::array();
  for (const auto& p : sc.pushes)
    pushes.push_back({{"t", p.t_start}, {"force", vec(p.force)}, {"duration", p.duration}});
  json pulses = json::array();
  for (const auto& c : sc.cam_pulses)
    pulses.push_back({{"t", c.t_start},
                      {"impulse", vec(c.impulse)},
                      {"period", c.period},
                      {"count", c.count},
                      {"alternate", c.alternate}});

  json doc;
  doc["schema_version"] = file.schema_version;
  doc["scenario"] = {
      {"name", sc.name},
      {"p_init", vec(sc.p_init)},
      {"yaw_step", sc.yaw_step},
      {"disturbance",
       {{"x", vec(sc.disturbance[0])}, {"y", vec(sc.disturbance[1])}, {"z", vec(sc.disturbance[2])}}},
      {"elevation", {{"pattern", to_string(sc.elevation_pattern)}, {"amplitude", sc.elevation_amplitude}}},
      {"n_stones", sc.n_stones},
      {"seed", sc.seed},
      {"alpha", sc.alpha},
      {"pslip_enabled", sc.pslip_enabled},
      {"step_width", sc.step_width},
      {"stone_half_extents", vec(sc.stone_half_extents)},
      {"first_support", sc.first_support == Side::Left ? "left" : "right"},
      {"pushes", pushes},
      {"cam_pulses", pulses},
  };
  doc["sim"] = {{"dt", file.sim.dt},
                {"replan_hz", file.sim.replan_hz},
                {"cam_decay_lambda", file.sim.cam_decay_lambda},
                {"max_steps", file.sim.max_steps},
                {"fall_threshold", file.sim.fall_threshold}};
  doc["params"] = {{"mass", file.params.mass},
                   {"z_nominal", file.params.z_tilde_nom},
                   {"cam_convention", convention_name(file.params.cam_convention)}};
  const PlannerConfig& pc = file.planner;
  doc["planner"] = {{"horizon", pc.horizon},
                    {"t_nom", pc.t_nom},
                    {"t_min", pc.t_min},
                    {"t_max", pc.t_max},
                    {"w_tau", pc.weights.w_tau},
                    {"w_b", pc.weights.w_b},
                    {"w_u", pc.weights.w_u},
                    {"leg_reach", pc.leg_reach},
                    {"min_remaining", pc.min_remaining},
                    {"max_iterations", pc.max_iterations}};
  return doc;
}

ScenarioFile scenario_from_json(const json& doc) {
  ScenarioFile file;
  ObjectReader r(doc, "$");
  file.schema_version = r.integer("schema_version", kSchemaVersion);
  if (file.schema_version != kSchemaVersion)
    ObjectReader::fail("$.schema_version", "unsupported version " + std::to_string(file.schema_version));
  if (const json* s = r.child("scenario")) read_scenario(*s, file.scenario);
  if (const json* s = r.child("sim")) read_sim(*s, file.sim);
  if (const json* s = r.child("params")) read_params(*s, file.params);
  if (const json* s = r.child("planner")) read_planner(*s, file.planner);
  r.finish();

  file.params.alpha = file.scenario.alpha;
  file.planner.pslip_enabled = file.scenario.pslip_enabled;
  file.planner.step_width = file.scenario.step_width;
  try {
    file.scenario.validate();
    file.sim.validate();
    file.params.validate();
    file.planner.validate();
  } catch (const std::invalid_argument& ex) {
    throw ConfigError(std::string("invalid configuration: ") + ex.what());
  }
  return file;
}

ScenarioFile load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open scenario file '" + path + "'");
  json doc;
  try {
    in >> doc;
  } catch (const json::parse_error& ex) {
    throw ConfigError("malformed JSON in '" + path + "': " + ex.what());
  }
  return scenario_from_json(doc);
}

void apply_override(json& doc, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) throw ConfigError("override must be KEY=VALUE: '" + assignment + "'");
  const std::string key = assignment.substr(0, eq);
  const std::string text = assignment.substr(eq + 1);

  json* node = &doc;
  std::stringstream parts(key);
  std::string part;
  while (std::getline(parts, part, '.')) {
    if (!node->is_object() || !node->contains(part)) throw ConfigError("unknown override key '" + key + "'");
    node = &(*node)[part];
  }
  json value;
  try {
    value = json::parse(text);
  } catch (const json::parse_error&) {
    value = text;
  }
  *node = value;
}

Push parse_push(const std::string& text) {
  Push p;
  p.force.setZero();
  bool have_t = false;
  std::stringstream parts(text);
  std::string item;
  while (std::getline(parts, item, ',')) {
    const auto eq = item.find('=');
    if (eq == std::string::npos) throw ConfigError("bad push field '" + item + "'");
    const std::string k = item.substr(0, eq);
    double v = 0.0;
    try {
      std::size_t used = 0;
      v = std::stod(item.substr(eq + 1), &used);
      if (used != item.size() - eq - 1) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw ConfigError("bad number in push field '" + item + "'");
    }
    if (k == "t") {
      p.t_start = v;
      have_t = true;
    } else if (k == "fx") {
      p.force.x() = v;
    } else if (k == "fy") {
      p.force.y() = v;
    } else if (k == "fz") {
      p.force.z() = v;
    } else if (k == "dur") {
      p.duration = v;
    } else {
      throw ConfigError("unknown push field '" + k + "'");
    }
  }
  if (!have_t) throw ConfigError("push needs t=<seconds>");
  if (!(p.duration > 0.0)) throw ConfigError("push duration must be > 0");
  return p;
}

std::vector<std::string> preset_names() { return {"a", "b", "c", "cam", "zdist"}; }

ScenarioFile preset(const std::string& name) {
  ScenarioFile f;
  ScenarioConfig& sc = f.scenario;
  sc.name = name;
  sc.p_init = {0.20, 0.0, 0.0};
  sc.n_stones = 60;
  f.sim.max_steps = 50;
  if (name == "a") {
    sc.elevation_pattern = ElevationPattern::Periodic;
    sc.elevation_amplitude = 0.17;
  } else if (name == "b") {
    sc.p_init = {0.20, 0.0, 0.10};
    sc.yaw_step = 0.2;
    sc.disturbance[0] = {-0.025, 0.025};
    sc.disturbance[1] = {-0.025, 0.025};
    sc.disturbance[2] = {-0.05, 0.05};
  } else if (name == "c") {
    sc.pushes = {Push{6.0, {-50.0, 0.0, 0.0}, 0.3}, Push{10.0, {60.0, 0.0, 0.0}, 0.3}};
  } else if (name == "cam") {
    // Flat walk with a CAM pulse every second step, alternating in sign.
    CamPulse pulse;
    pulse.t_start = 2.0;
    pulse.impulse = {0.0, 3.0};
    pulse.period = 1.0;
    pulse.count = 20;
    pulse.alternate = true;
    sc.cam_pulses = {pulse};
  } else if (name == "zdist") {
    sc.elevation_pattern = ElevationPattern::Random;
    sc.elevation_amplitude = 0.10;
  } else {
    throw ConfigError("unknown preset '" + name + "'");
  }
  f.params.alpha = sc.alpha;
  return f;
}

std::string describe_presets() {
  std::ostringstream os;
  os << "a      p_init (0.20, 0, 0) m, yaw 0, periodic stone height +/-0.17 m\n"
     << "b      p_init (0.20, 0, 0.10) m, yaw +/-0.2 rad alternating,\n"
     << "       disturbance U([-2.5,2.5] x [-2.5,2.5] x [-5,5]) cm\n"
     << "c      p_init (0.20, 0, 0) m, flat; pushes -50 N at 6.0 s and +60 N at 10.0 s\n"
     << "       along x, 0.3 s each\n"
     << "cam    flat; CAM pulses of +/-3 kg m^2/s about y every 1.0 s from 2.0 s\n"
     << "zdist  p_init (0.20, 0, 0) m, stone height U[-0.10, 0.10] m\n"
     << "All presets: 60 stones, 50 steps, stones 0.20 x 0.14 m, W = 0.2 m,\n"
     << "mass 44.9 kg, nominal height 0.78 m, T_nom = 0.5 s.\n";
  return os.str();
}

std::string format_number(double value) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9g", value);
  return buf;
}

void write_trace_csv(std::ostream& os, const SimTrace& trace) {
  os << "t,x,y,z,vx,vy,vz,lcom_x,lcom_y,xi_x,xi_y,contact_x,contact_y,contact_z,side,step_index,"
        "active_kx,active_ky\n";
  for (const auto& s : trace.samples) {
    const ComState& st = s.state;
    const Eigen::Vector3d& c = s.contact.position;
    for (const double v : {s.t, st.x, st.y, st.z, st.vx, st.vy, st.vz, st.lcom_x, st.lcom_y,
                           s.dcm.xi_x, s.dcm.xi_y, c.x(), c.y(), c.z()})
      os << format_number(v) << ',';
    os << to_string(s.contact.side) << ',' << s.step_index << ',' << format_number(s.active.kx())
       << ',' << format_number(s.active.ky()) << '\n';
  }
}

void write_events_csv(std::ostream& os, const SimTrace& trace) {
  os << "index,stone,touchdown_time,planned_duration,actual_duration,commanded_x,commanded_y,"
        "commanded_z,desired_x,desired_y,desired_z,deviation,feasible,offset_x,offset_y,"
        "offset_nom_x,offset_nom_y,offset_error,dcm_prediction_error\n";
  for (const auto& e : trace.events) {
    os << e.index << ',' << e.stone;
    for (const double v :
         {e.touchdown_time, e.planned_duration, e.actual_duration, e.commanded_position.x(),
          e.commanded_position.y(), e.commanded_position.z(), e.desired_position.x(),
          e.desired_position.y(), e.desired_position.z(), e.deviation})
      os << ',' << format_number(v);
    os << ',' << (e.feasible ? 1 : 0);
    for (const double v : {e.offset.x(), e.offset.y(), e.offset_nom.x(), e.offset_nom.y(),
                           e.offset_error, e.dcm_prediction_error})
      os << ',' << format_number(v);
    os << '\n';
  }
}

json summary_json(const SimTrace& trace, const ScenarioFile& file) {
  const Metrics& m = trace.metrics;
  char display[32];
  std::snprintf(display, sizeof display, "%.3f m", m.e_avg);
  json metrics = {{"e_avg", m.e_avg},
                  {"e_avg_display", display},
                  {"e_max", m.e_max},
                  {"steps_completed", m.steps_completed},
                  {"fell", m.fell},
                  {"fall_time", m.fell ? json(m.fall_time) : json(nullptr)},
                  {"dcm_prediction_error", m.dcm_prediction_error},
                  {"infeasible_footholds", m.infeasible_footholds},
                  {"step_durations", m.step_durations}};
  json solver = {{"solves", m.solves},
                 {"nonconverged", m.nonconverged_solves},
                 {"mean_us", m.solve_mean_us},
                 {"max_us", m.solve_max_us},
                 {"mean_iterations", m.mean_iterations},
                 {"max_residual", m.max_residual}};
  json warnings = trace.warnings;
  return {{"metrics", metrics},
          {"solver", solver},
          {"transitions", trace.transitions.size()},
          {"warnings", warnings},
          {"config", to_json(file)}};
}

}  // namespace psgait
