// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any failure.

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <functional>
#include <limits>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "psgait/core_model.hpp"
#include "psgait/dcm.hpp"
#include "psgait/planner.hpp"
#include "psgait/scenario_io.hpp"
#include "psgait/sim.hpp"

using namespace psgait;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Outcome {
  bool pass;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

SimTrace run_file(const ScenarioFile& f) {
  return run_closed_loop(f.scenario, f.sim, f.params, f.planner);
}

Outcome reset_conservation() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(2024);
  double worst_y = 0.0, worst_x = 0.0, worst_slope = 0.0;
  for (int i = 0; i < 10000; ++i) {
    const auto rc = oracle::random_reset_case(rng);
    const ComState r = reset_map(rc.state, rc.pre, rc.post, rc.contact);
    worst_y = std::max(worst_y, oracle::rel_err(oracle::momentum_y(r, rc.contact),
                                                oracle::momentum_y(rc.state, rc.contact)));
    worst_x = std::max(worst_x, oracle::rel_err(oracle::momentum_x(r, rc.contact),
                                                oracle::momentum_x(rc.state, rc.contact)));
    worst_slope = std::max(worst_slope,
                           std::abs(r.vz - rc.post.kx() * r.vx - rc.post.ky() * r.vy));
  }
  const double secs = seconds_since(t0);
  return {worst_y <= 1e-10 && worst_x <= 1e-10 && worst_slope <= 1e-9 && secs < 1.0,
          fmt("10^4 cases: L_y rel %.2e, L_x rel %.2e, slope %.2e, %.3f s", worst_y, worst_x,
              worst_slope, secs)};
}

Outcome flow_vs_rk4() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  double worst = 0.0;
  for (int i = 0; i < 100; ++i) {
    PendulumParams p;
    p.alpha = 0.5 * (U(rng) + 1.0);
    ContactPoint c;
    c.position = {U(rng), U(rng), 0.2 * U(rng)};
    const SlopeGradient k(0.4 * U(rng), 0.4 * U(rng));
    ComState s;
    s.x = c.position.x() + 0.1 * U(rng);
    s.y = c.position.y() + 0.1 * U(rng);
    s.z = c.position.z() + 0.78;
    s.vx = 0.5 * U(rng);
    s.vy = 0.3 * U(rng);
    s.vz = k.kx() * s.vx + k.ky() * s.vy;
    s.lcom_x = 2.0 * U(rng);
    s.lcom_y = 2.0 * U(rng);
    const FlowForcing forcing{5.0, Eigen::Vector2d(U(rng), U(rng))};
    const ComState a = com_flow(s, c, k, p, 0.5, forcing);
    const ComState b = oracle::rk4_flow(s, c, k, p, 0.5, 1e-5, 5.0, forcing.accel);
    worst = std::max({worst, std::abs(a.x - b.x), std::abs(a.y - b.y), std::abs(a.z - b.z)});
  }
  const double secs = seconds_since(t0);
  return {worst <= 1e-6 && secs < 10.0,
          fmt("100 cases over 0.5 s: max position error %.2e m, %.2f s", worst, secs)};
}

Outcome decay_lemma() {
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  const PendulumParams p;
  const double w = p.omega();
  double worst = 0.0;
  for (int i = 0; i < 100; ++i) {
    const double x_dev = 0.1 * U(rng) - 0.05;
    const double px = 0.4 * U(rng);
    const double T = 0.3 + 0.5 * U(rng);
    const double xi0 = -px / 2 + px / (2 * std::tanh(w * T / 2));
    const double ref = oracle::boundary_value_end(-px / 2 + x_dev, xi0, w, T);
    worst = std::max(worst, std::abs(deviation_decay(x_dev, px, T, p) - ref));
  }
  return {worst <= 1e-9, fmt("100 triples: max |closed form - boundary solve| %.2e m", worst)};
}

Outcome orbit_fixed_point() {
  std::mt19937_64 rng(41);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  const PendulumParams p;
  const double w = p.omega();
  double worst = 0.0;
  for (int i = 0; i < 50; ++i) {
    const double px = 0.4 * U(rng), py = 0.1 * U(rng) - 0.05;
    const double W = (U(rng) < 0.5 ? -1.0 : 1.0) * (0.1 + 0.2 * U(rng));
    const double T = 0.3 + 0.5 * U(rng);
    const Eigen::Vector2d b = nominal_offset(px, py, W, T, w);
    const Eigen::Vector2d b_next = nominal_offset(px, py, -W, T, w);
    ContactPoint c;
    const DcmState end = step_to_step(DcmState::from(b), c, T, Eigen::Vector2d::Zero(), p);
    const Eigen::Vector2d s_next(px, py + W);
    // Recursion form: b_next = tau b - (S_next - S).
    const Eigen::Vector2d rec = std::exp(w * T) * b - s_next;
    worst = std::max({worst, (end.vec() - s_next - b_next).norm(), (rec - b_next).norm()});
  }
  return {worst <= 1e-9, fmt("50 random gaits: max offset drift %.2e m", worst)};
}

// Coarse-to-fine grid over (tau, ux, uy) for a one-step problem.
std::array<double, 3> grid_minimum(const MpcProblem& pr) {
  double lo[3] = {pr.tau_min[0], pr.u_nom[0].x() - 0.3, pr.u_nom[0].y() - 0.3};
  double hi[3] = {pr.tau_max[0], pr.u_nom[0].x() + 0.3, pr.u_nom[0].y() + 0.3};
  std::array<double, 3> best{};
  const int m = 40;
  for (int level = 0; level < 12; ++level) {
    double best_cost = std::numeric_limits<double>::infinity();
    for (int a = 0; a <= m; ++a)
      for (int b = 0; b <= m; ++b)
        for (int c = 0; c <= m; ++c) {
          const double t = lo[0] + (hi[0] - lo[0]) * a / m;
          const Eigen::Vector2d u(lo[1] + (hi[1] - lo[1]) * b / m, lo[2] + (hi[2] - lo[2]) * c / m);
          const double cost = mpc_cost(pr, {t}, {u});
          if (cost < best_cost) {
            best_cost = cost;
            best = {t, u.x(), u.y()};
          }
        }
    for (int d = 0; d < 3; ++d) {
      const double half = (hi[d] - lo[d]) / 8.0;
      lo[d] = best[d] - half;
      hi[d] = best[d] + half;
    }
    lo[0] = std::max(lo[0], pr.tau_min[0]);
    hi[0] = std::min(hi[0], pr.tau_max[0]);
  }
  return best;
}

Outcome planner_fixed_point() {
  const ScenarioFile f = preset("c");
  const StoneLayout layout = generate_scenario(f.scenario);
  const PendulumParams& p = f.params;
  const std::size_t k = 4;
  const auto& foot = layout.desired_footholds[k];
  const ContactPoint contact{foot.position, foot.side};
  const NominalOrbit o = nominal_orbit(0.2, 0.0, signed_width(foot.side, 0.2), 0.5, p);
  ComState rev;
  rev.y = o.y_m;
  rev.z = 0.78;
  rev.vx = -o.xdot_m;
  rev.vy = -o.ydot_m;
  ComState s = com_flow(rev, {}, {}, p, 0.25);
  s.vx = -s.vx;
  s.vy = -s.vy;
  s.x += foot.position.x();
  s.y += foot.position.y();

  const MpcProblem pr = build_problem(s, contact, layout, {k, 0.0, false}, p, f.planner);
  const MpcSolution sol = solve(pr);
  double worst = (pr.b0 - o.b_nom()).norm();
  for (int i = 0; i < pr.n_steps; ++i) {
    worst = std::max({worst, std::abs(sol.tau[i] - pr.tau_nom[i]) / pr.tau_nom[i],
                      (sol.u[i] - pr.u_nom[i]).norm()});
  }
  const bool t_ok = std::abs(sol.t_step[0] - 0.5) <= 1e-6;

  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  double grid_err = 0.0;
  for (int trial = 0; trial < 3; ++trial) {
    MpcProblem one = pr;
    one.n_steps = 1;
    for (auto* v : {&one.tau_nom, &one.tau_min, &one.tau_max, &one.w_tau, &one.w_b, &one.w_u}) v->resize(1);
    for (auto* v : {&one.b_nom, &one.u_nom, &one.dv_mid}) v->resize(1);
    one.b0 += Eigen::Vector2d(0.04 * U(rng), 0.03 * U(rng));
    one.dv_mid[0] = {0.02 * U(rng), 0.02 * U(rng)};
    const MpcSolution s1 = solve(one);
    const auto g = grid_minimum(one);
    grid_err = std::max({grid_err, std::abs(s1.tau[0] - g[0]), std::abs(s1.u[0].x() - g[1]),
                         std::abs(s1.u[0].y() - g[2])});
  }
  return {worst <= 1e-6 && t_ok && grid_err <= 1e-4,
          fmt("nominal: max deviation %.2e, T_1 = %.9f s; N=1 vs grid: %.2e", worst, sol.t_step[0],
              grid_err)};
}

Outcome flat_walk() {
  const auto t0 = Clock::now();
  ScenarioFile f = preset("c");
  f.scenario.pushes.clear();
  f.sim.max_steps = 50;
  const SimTrace tr = run_file(f);
  const double secs = seconds_since(t0);
  const Metrics& m = tr.metrics;
  return {!m.fell && m.steps_completed == 50 && m.e_avg < 0.005 && secs < 30.0,
          fmt("steps %d, fell %s, e_avg %.2e m, %.2f s", m.steps_completed, m.fell ? "yes" : "no",
              m.e_avg, secs)};
}

Outcome scenario_a() {
  ScenarioFile on = preset("a");
  on.scenario.pslip_enabled = true;
  on.planner.pslip_enabled = true;
  ScenarioFile off = on;
  off.scenario.pslip_enabled = false;
  off.planner.pslip_enabled = false;
  const Metrics a = run_file(on).metrics;
  const Metrics b = run_file(off).metrics;
  const bool on_ok = !a.fell && a.steps_completed >= 40;
  const bool off_worse = b.fell || b.e_avg > a.e_avg;
  return {on_ok && off_worse,
          fmt("on: %d steps, fell %s, e_avg %.4f m; off: %d steps, fell %s, e_avg %.4f m",
              a.steps_completed, a.fell ? "yes" : "no", a.e_avg, b.steps_completed,
              b.fell ? "yes" : "no", b.e_avg)};
}

Outcome push_recovery() {
  const ScenarioFile f = preset("c");
  const SimTrace tr = run_file(f);
  std::ostringstream detail;
  bool ok = !tr.metrics.fell;
  const auto& pushes = f.scenario.pushes;
  for (std::size_t pi = 0; pi < pushes.size(); ++pi) {
    const Push& push = pushes[pi];
    const double dv = push.force.norm() * push.duration / f.params.mass;
    const double next_push = pi + 1 < pushes.size() ? pushes[pi + 1].t_start : 1e9;
    int recovered_at = -1;
    int counted = 0;
    bool stays = true;
    for (const auto& e : tr.events) {
      if (e.touchdown_time <= push.t_start) continue;
      if (e.touchdown_time >= next_push) break;
      const double rel = e.offset_error / e.offset_nom.norm();
      ++counted;
      if (recovered_at < 0 && counted <= 4 && rel <= 0.05) recovered_at = counted;
      if (recovered_at > 0 && rel > 0.05) stays = false;
    }
    const bool this_ok = recovered_at > 0 && stays;
    ok = ok && this_ok;
    detail << fmt("push %+.0f N at %.1f s (dv %.3f m/s): ", push.force.x(), push.t_start, dv);
    if (recovered_at > 0) {
      detail << "within 5% after step " << recovered_at << (stays ? "" : " but drifted out");
    } else {
      detail << "not recovered in 4 steps";
    }
    detail << "; ";
  }
  detail << "fell " << (tr.metrics.fell ? "yes" : "no");
  return {ok, detail.str()};
}

Outcome alpha_sweep() {
  std::vector<Metrics> m;
  for (double a : {0.0, 0.5, 1.0}) {
    ScenarioFile f = preset("cam");
    f.scenario.alpha = a;
    f.params.alpha = a;
    m.push_back(run_file(f).metrics);
  }
  const bool pred_ok = m[1].dcm_prediction_error <= m[0].dcm_prediction_error &&
                       m[1].dcm_prediction_error <= m[2].dcm_prediction_error;
  const bool eavg_ok = m[1].e_avg <= m[0].e_avg && m[1].e_avg <= m[2].e_avg;
  const bool none_fell = !m[0].fell && !m[1].fell && !m[2].fell;
  return {pred_ok && eavg_ok && none_fell,
          fmt("prediction error %.4f / %.4f / %.4f m, e_avg %.4f / %.4f / %.4f m (alpha 0 / 0.5 / 1)",
              m[0].dcm_prediction_error, m[1].dcm_prediction_error, m[2].dcm_prediction_error,
              m[0].e_avg, m[1].e_avg, m[2].e_avg)};
}

Outcome solver_time() {
  std::vector<double> times;
  int nonconverged = 0;
  std::uint64_t seed = 1;
  const std::vector<std::string> names = {"a", "b", "c", "cam", "zdist"};
  for (std::size_t i = 0; times.size() < 10000; ++i) {
    ScenarioFile f = preset(names[i % names.size()]);
    f.scenario.seed = seed++;
    const SimTrace tr = run_file(f);
    for (const auto& s : tr.solves) {
      times.push_back(s.wall_us);
      if (!s.converged) ++nonconverged;
    }
  }
  double sum = 0.0;
  for (double t : times) sum += t;
  const double mean_ms = sum / times.size() / 1000.0;
  std::sort(times.begin(), times.end());
  const double p99_ms = times[times.size() * 99 / 100] / 1000.0;
  return {mean_ms <= 10.0, fmt("%zu closed-loop N=2 solves: mean %.4f ms, p99 %.4f ms, %d not converged",
                               times.size(), mean_ms, p99_ms, nonconverged)};
}

Outcome determinism() {
  std::ostringstream detail;
  bool ok = true;
  for (const auto& name : preset_names()) {
    ScenarioFile f = preset(name);
    f.scenario.seed = 12345;
    std::ostringstream a, b;
    write_trace_csv(a, run_file(f));
    write_trace_csv(b, run_file(f));
    const bool same = a.str() == b.str();
    ok = ok && same;
    detail << name << (same ? " identical" : " DIFFERENT") << " (" << a.str().size() << " B); ";
  }
  return {ok, detail.str()};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"reset-map conservation", reset_conservation},
      {"flow vs RK4 oracle", flow_vs_rk4},
      {"deviation decay lemma", decay_lemma},
      {"nominal orbit fixed point", orbit_fixed_point},
      {"planner fixed point and N=1 grid check", planner_fixed_point},
      {"closed-loop flat walk", flat_walk},
      {"periodic elevation with and without slope compensation", scenario_a},
      {"push recovery", push_recovery},
      {"alpha sweep with CAM injections", alpha_sweep},
      {"solver time", solver_time},
      {"determinism", determinism},
  };
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& ex) {
      o = {false, std::string("exception: ") + ex.what()};
    }
    if (!o.pass) ++failures;
    std::printf("[%s] %2zu %s: %s\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first.c_str(),
                o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failures,
              criteria.size());
  return failures == 0 ? 0 : 1;
}
