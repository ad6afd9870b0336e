#include <gtest/gtest.h>

#include <algorithm>
#include <sstream>

#include "psgait/scenario_io.hpp"

using namespace psgait;
using nlohmann::json;

TEST(ScenarioJson, RoundTripMakesDefaultsExplicit) {
  const json minimal = json::parse(R"({"schema_version": 1, "scenario": {"seed": 4}})");
  const ScenarioFile parsed = scenario_from_json(minimal);
  EXPECT_EQ(parsed.scenario.seed, 4u);
  const json explicit_doc = to_json(parsed);
  EXPECT_TRUE(explicit_doc["planner"].contains("w_u"));
  EXPECT_EQ(explicit_doc["params"]["mass"], 44.9);
  const ScenarioFile again = scenario_from_json(explicit_doc);
  EXPECT_EQ(to_json(again), explicit_doc);
}

TEST(ScenarioJson, PresetsRoundTrip) {
  for (const auto& name : preset_names()) {
    const ScenarioFile f = preset(name);
    EXPECT_EQ(to_json(scenario_from_json(to_json(f))), to_json(f)) << name;
  }
}

TEST(ScenarioJson, UnknownKeysRejected) {
  EXPECT_THROW(scenario_from_json(json::parse(R"({"scenario": {"sead": 4}})")), ConfigError);
  EXPECT_THROW(scenario_from_json(json::parse(R"({"simm": {}})")), ConfigError);
  EXPECT_THROW(scenario_from_json(json::parse(R"({"scenario": {"pushes": [{"t": 1, "forc": [1,0,0]}]}})")),
               ConfigError);
}

TEST(ScenarioJson, TypeAndValueErrors) {
  EXPECT_THROW(scenario_from_json(json::parse(R"({"scenario": {"seed": "x"}})")), ConfigError);
  EXPECT_THROW(scenario_from_json(json::parse(R"({"scenario": {"p_init": [1, 2]}})")), ConfigError);
  EXPECT_THROW(scenario_from_json(json::parse(R"({"scenario": {"alpha": 2.0}})")), ConfigError);
  EXPECT_THROW(scenario_from_json(json::parse(R"({"schema_version": 7})")), ConfigError);
  EXPECT_THROW(scenario_from_json(json::parse(R"({"params": {"cam_convention": "odd"}})")), ConfigError);
  EXPECT_THROW(scenario_from_json(json::parse(R"({"scenario": {"elevation": {"pattern": "zig"}}})")),
               ConfigError);
  EXPECT_THROW(load_scenario("/nonexistent/scenario.json"), ConfigError);
}

TEST(ScenarioJson, ScenarioSettingsReachPlannerAndParams) {
  const ScenarioFile f = scenario_from_json(
      json::parse(R"({"scenario": {"alpha": 0.25, "pslip_enabled": false, "step_width": 0.18}})"));
  EXPECT_EQ(f.params.alpha, 0.25);
  EXPECT_FALSE(f.planner.pslip_enabled);
  EXPECT_EQ(f.planner.step_width, 0.18);
}

TEST(Overrides, DottedKeys) {
  json doc = to_json(preset("a"));
  apply_override(doc, "sim.max_steps=12");
  apply_override(doc, "scenario.elevation.pattern=random");
  apply_override(doc, "scenario.p_init=[0.25, 0, 0]");
  const ScenarioFile f = scenario_from_json(doc);
  EXPECT_EQ(f.sim.max_steps, 12);
  EXPECT_EQ(f.scenario.elevation_pattern, ElevationPattern::Random);
  EXPECT_EQ(f.scenario.p_init.x(), 0.25);
  EXPECT_THROW(apply_override(doc, "sim.max_stepz=3"), ConfigError);
  EXPECT_THROW(apply_override(doc, "novalue"), ConfigError);
}

TEST(Pushes, ParseSpec) {
  const Push p = parse_push("t=6,fx=-50,dur=0.3");
  EXPECT_EQ(p.t_start, 6.0);
  EXPECT_EQ(p.force, Eigen::Vector3d(-50, 0, 0));
  EXPECT_EQ(p.duration, 0.3);
  EXPECT_EQ(parse_push("t=1,fy=20").force.y(), 20.0);
  EXPECT_THROW(parse_push("fx=10"), ConfigError);
  EXPECT_THROW(parse_push("t=1,fq=3"), ConfigError);
  EXPECT_THROW(parse_push("t=1x"), ConfigError);
  EXPECT_THROW(parse_push("t=1,dur=0"), ConfigError);
}

TEST(Presets, TableValues) {
  const ScenarioFile a = preset("a");
  EXPECT_EQ(a.scenario.p_init, Eigen::Vector3d(0.2, 0, 0));
  EXPECT_EQ(a.scenario.elevation_pattern, ElevationPattern::Periodic);
  EXPECT_EQ(a.scenario.elevation_amplitude, 0.17);
  const ScenarioFile b = preset("b");
  EXPECT_EQ(b.scenario.yaw_step, 0.2);
  EXPECT_EQ(b.scenario.disturbance[0], Eigen::Vector2d(-0.025, 0.025));
  EXPECT_EQ(b.scenario.disturbance[2], Eigen::Vector2d(-0.05, 0.05));
  const ScenarioFile c = preset("c");
  ASSERT_EQ(c.scenario.pushes.size(), 2u);
  EXPECT_EQ(c.scenario.pushes[0].t_start, 6.0);
  EXPECT_EQ(c.scenario.pushes[0].force.x(), -50.0);
  EXPECT_EQ(c.scenario.pushes[1].t_start, 10.0);
  EXPECT_EQ(c.scenario.pushes[1].force.x(), 60.0);
  EXPECT_EQ(c.scenario.pushes[1].duration, 0.3);
  EXPECT_THROW(preset("z"), ConfigError);
  EXPECT_NE(describe_presets().find("-50 N"), std::string::npos);
}

TEST(Output, NineSignificantDigits) {
  EXPECT_EQ(format_number(0.1), "0.1");
  EXPECT_EQ(format_number(1.0 / 3.0), "0.333333333");
  EXPECT_EQ(format_number(123456.7891234), "123456.789");
}

TEST(Output, TraceColumnsAndSummary) {
  ScenarioFile f = preset("c");
  f.sim.max_steps = 3;
  const SimTrace tr = run_closed_loop(f.scenario, f.sim, f.params, f.planner);
  std::ostringstream os;
  write_trace_csv(os, tr);
  const std::string csv = os.str();
  EXPECT_EQ(csv.substr(0, csv.find('\n')),
            "t,x,y,z,vx,vy,vz,lcom_x,lcom_y,xi_x,xi_y,contact_x,contact_y,contact_z,side,step_index,"
            "active_kx,active_ky");
  std::ostringstream ev;
  write_events_csv(ev, tr);
  const std::string events = ev.str();
  EXPECT_EQ(std::count(events.begin(), events.end(), '\n'), 4);
  const json s = summary_json(tr, f);
  EXPECT_EQ(s["metrics"]["steps_completed"], 3);
  EXPECT_EQ(s["metrics"]["fell"], false);
  EXPECT_TRUE(s["metrics"]["fall_time"].is_null());
  EXPECT_EQ(s["config"]["scenario"]["alpha"], 0.5);
  EXPECT_EQ(s["metrics"]["e_avg_display"], "0.000 m");
}
