#include "psgait/sim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <sstream>

#include "psgait/core_model.hpp"

namespace psgait {

int SimConfig::ticks_per_replan() const {
  return static_cast<int>(std::lround(1.0 / (dt * replan_hz)));
}

void SimConfig::validate() const {
  if (!(dt > 0.0)) throw std::invalid_argument("sim dt must be > 0");
  if (!(replan_hz > 0.0)) throw std::invalid_argument("replan_hz must be > 0");
  const double ratio = 1.0 / (dt * replan_hz);
  if (ratio < 1.0 - 1e-9 || std::abs(ratio - std::round(ratio)) > 1e-6)
    throw std::invalid_argument("replan period must be a whole number of ticks");
  if (cam_decay_lambda < 0.0) throw std::invalid_argument("cam_decay_lambda must be >= 0");
  if (max_steps < 1) throw std::invalid_argument("max_steps must be >= 1");
  if (!(fall_threshold > 0.0)) throw std::invalid_argument("fall_threshold must be > 0");
}

ComState integrate_tick(const ComState& state, const ContactPoint& contact,
                        const SlopeGradient& active, const PendulumParams& params,
                        const Eigen::Vector3d& external_force, double dt, double cam_decay) {
  FlowForcing forcing;
  forcing.cam_decay = cam_decay;
  forcing.accel = external_force.head<2>() / params.mass;
  return com_flow(state, contact, active, params, dt, forcing);
}

std::optional<double> detect_transition(const FlowFn& flow, double span,
                                        const SlopeGradient& post, double z_tilde,
                                        const ContactPoint& contact) {
  double h_lo = guard_function(flow(0.0), post, z_tilde, contact);
  const double h_hi = guard_function(flow(span), post, z_tilde, contact);
  const bool crosses = (h_lo < 0.0 && h_hi >= 0.0) || (h_lo > 0.0 && h_hi <= 0.0);
  if (!crosses) return std::nullopt;

  double lo = 0.0;
  double hi = span;
  while (hi - lo > 1e-9) {
    const double mid = 0.5 * (lo + hi);
    const double h_mid = guard_function(flow(mid), post, z_tilde, contact);
    if ((h_mid < 0.0) == (h_lo < 0.0) && h_mid != 0.0) {
      lo = mid;
      h_lo = h_mid;
    } else {
      hi = mid;
    }
  }
  return hi;
}

TouchdownResult touchdown(const ComState& state, const Eigen::Vector3d& commanded, Side new_side,
                          const StoneLayout& layout,
                          const std::vector<VirtualSlopeSegment>& segments, std::size_t stone,
                          const PendulumParams& params) {
  TouchdownResult out;
  out.contact.position = commanded;
  if (stone < layout.size()) {
    out.contact.position.z() = layout.stones[stone].center.z();
    out.feasible = stone_contains(layout.stones[stone], commanded.head<2>());
  } else {
    out.feasible = false;
  }
  out.contact.side = new_side;
  std::tie(out.pre, out.post) =
      gradient_pair(segments, std::min(stone, segments.empty() ? 0 : segments.size()));
  out.state = state;
  const Eigen::Vector3d& S = out.contact.position;
  out.state.z = S.z() + params.z_tilde_nom + out.pre.kx() * (state.x - S.x()) +
                out.pre.ky() * (state.y - S.y());
  return out;
}

ComState inject_cam(const ComState& state, const Eigen::Vector2d& impulse) {
  ComState s = state;
  s.lcom_x += impulse.x();
  s.lcom_y += impulse.y();
  return s;
}

Metrics compute_metrics(const SimTrace& trace) {
  if (trace.events.empty()) throw EmptyTrace("trace contains no step events");
  Metrics m;
  double sum = 0.0;
  double pred = 0.0;
  for (const auto& e : trace.events) {
    sum += e.deviation;
    pred += e.dcm_prediction_error;
    m.e_max = std::max(m.e_max, e.deviation);
    m.step_durations.push_back(e.actual_duration);
    if (!e.feasible) ++m.infeasible_footholds;
  }
  const auto n = static_cast<double>(trace.events.size());
  m.e_avg = sum / n;
  m.dcm_prediction_error = pred / n;
  m.steps_completed = static_cast<int>(trace.events.size());
  m.fell = trace.metrics.fell;
  m.fall_time = trace.metrics.fall_time;

  m.solves = static_cast<int>(trace.solves.size());
  double us = 0.0;
  double iters = 0.0;
  for (const auto& s : trace.solves) {
    us += s.wall_us;
    iters += s.iterations;
    m.solve_max_us = std::max(m.solve_max_us, s.wall_us);
    m.max_residual = std::max(m.max_residual, s.residual);
    if (!s.converged) ++m.nonconverged_solves;
  }
  if (m.solves > 0) {
    m.solve_mean_us = us / m.solves;
    m.mean_iterations = iters / m.solves;
  }
  return m;
}

namespace {

struct PulseTime {
  double t;
  Eigen::Vector2d impulse;
};

class ClosedLoop {
 public:
  ClosedLoop(const ScenarioConfig& scenario, const SimConfig& sim, const PendulumParams& params,
             const PlannerConfig& planner)
      : scenario_(scenario), sim_(sim), params_(params), planner_(planner) {
    scenario_.validate();
    sim_.validate();
    params_.alpha = scenario.alpha;
    params_.validate();
    planner_.pslip_enabled = scenario.pslip_enabled;
    planner_.step_width = scenario.step_width;
    planner_.validate();
    trace_.layout = generate_scenario(scenario_);
    trace_.pushes = scenario_.pushes;
    segments_ = build_segments(trace_.layout, planner_.step_width);
    expand_pulses();
  }

  SimTrace run() {
    initialize();
    const int per_replan = sim_.ticks_per_replan();
    const double horizon_time = (sim_.max_steps + 2) * planner_.t_max * 2.0;
    for (long k = 0; !done_; ++k) {
      const double t0 = static_cast<double>(k) * sim_.dt;
      const double t1 = static_cast<double>(k + 1) * sim_.dt;
      if (k > 0 && k % per_replan == 0 && !committed_) plan(t0);
      const double reached = advance(t0, t1);
      record_sample(reached);
      if (done_) break;
      check_fall(t1);
      if (t1 > horizon_time) {
        trace_.warnings.push_back("simulation time cap reached");
        done_ = true;
      }
    }
    if (!trace_.events.empty()) {
      const bool fell = trace_.metrics.fell;
      const double fall_time = trace_.metrics.fall_time;
      trace_.metrics = compute_metrics(trace_);
      trace_.metrics.fell = fell;
      trace_.metrics.fall_time = fall_time;
    }
    return std::move(trace_);
  }

 private:
  ScenarioConfig scenario_;
  SimConfig sim_;
  PendulumParams params_;
  PlannerConfig planner_;
  SimTrace trace_;
  std::vector<VirtualSlopeSegment> segments_;
  std::vector<PulseTime> pulses_;
  std::size_t next_pulse_ = 0;

  ComState state_;
  ContactPoint contact_;
  StanceContext stance_;
  SlopeGradient active_;
  SlopeGradient post_;
  double step_start_ = 0.0;
  double touchdown_time_ = 0.0;
  double planned_duration_ = 0.0;
  bool first_plan_of_step_ = true;
  std::set<std::string> warned_this_step_;
  Eigen::Vector3d commanded_ = Eigen::Vector3d::Zero();
  bool committed_ = false;
  bool done_ = false;
  DcmState xi_pred_;

  void expand_pulses() {
    for (const auto& p : scenario_.cam_pulses) {
      for (int r = 0; r < p.count; ++r) {
        const double sign = (p.alternate && r % 2 == 1) ? -1.0 : 1.0;
        pulses_.push_back({p.t_start + r * p.period, sign * p.impulse});
      }
    }
    std::stable_sort(pulses_.begin(), pulses_.end(),
                     [](const PulseTime& a, const PulseTime& b) { return a.t < b.t; });
  }

  DcmState estimate() const { return dcm_from_state(state_, params_, contact_.position.z()); }

  Eigen::Vector3d adjusted(std::size_t index) const {
    const Foothold f = extended_foothold(trace_.layout, index, planner_.step_width);
    return adjusted_foothold(f.position, f.side, planner_.step_width);
  }

  Eigen::Vector2d nominal_offset_for(std::size_t stone) const {
    const Foothold f = extended_foothold(trace_.layout, stone, planner_.step_width);
    const Eigen::Vector3d p = adjusted(stone + 1) - adjusted(stone);
    return nominal_offset(p.x(), p.y(), signed_width(f.side, planner_.step_width), planner_.t_nom,
                          params_.omega());
  }

  void initialize() {
    const auto& first = trace_.layout.desired_footholds.front();
    contact_ = {first.position, first.side};
    std::tie(active_, post_) = gradient_pair(segments_, 0);
    active_ = post_;  // the run starts at mid-stance, past the transition

    const Eigen::Vector3d p = adjusted(1) - adjusted(0);
    const NominalOrbit orbit = nominal_orbit(
        p.x(), p.y(), signed_width(first.side, planner_.step_width), planner_.t_nom, params_);
    state_ = ComState{};
    state_.x = contact_.position.x();
    state_.y = contact_.position.y() + orbit.y_m;
    state_.z = contact_.position.z() + params_.z_tilde_nom + active_.ky() * orbit.y_m;
    state_.vx = orbit.xdot_m;
    state_.vy = orbit.ydot_m;
    state_.vz = active_.kx() * state_.vx + active_.ky() * state_.vy;

    stance_ = {0, planner_.t_nom / 2.0, true};
    step_start_ = -planner_.t_nom / 2.0;
    xi_pred_ = estimate();
    apply_pulses(0.0);
    record_sample(0.0);
    plan(0.0);
  }

  void plan(double t) {
    stance_.t_elapsed = t - step_start_;
    const MpcProblem problem =
        build_problem(state_, contact_, trace_.layout, stance_, params_, planner_);
    const MpcSolution sol = solve(problem);
    trace_.solves.push_back(sol.stats);
    for (const auto& w : sol.warnings) {
      // One entry per distinct message within a stance; replans repeat them.
      if (!warned_this_step_.insert(w.substr(0, w.find(" length "))).second) continue;
      if (trace_.warnings.size() < 200) {
        std::ostringstream os;
        os << "t=" << t << ": " << w;
        trace_.warnings.push_back(os.str());
      }
    }
    const StepCommand cmd = extract_command(sol, trace_.layout, stance_.stone + 1, params_);
    commanded_ = cmd.position;
    if (stance_.stone + 1 >= trace_.layout.size()) commanded_.z() = contact_.position.z();
    touchdown_time_ = t + cmd.duration;
    if (first_plan_of_step_) {
      planned_duration_ = touchdown_time_ - step_start_;
      first_plan_of_step_ = false;
    }
    const double commit_window = std::max(planner_.min_remaining, 1.0 / sim_.replan_hz);
    committed_ = cmd.duration <= commit_window + 1e-12;
  }

  Eigen::Vector3d force_at(double t_mid) const {
    Eigen::Vector3d f = Eigen::Vector3d::Zero();
    for (const auto& p : scenario_.pushes) {
      if (t_mid >= p.t_start && t_mid < p.t_start + p.duration) f += p.force;
    }
    return f;
  }

  double next_break(double t, double t_end) const {
    double tb = t_end;
    if (touchdown_time_ > t && touchdown_time_ < tb) tb = touchdown_time_;
    for (const auto& p : scenario_.pushes) {
      for (const double edge : {p.t_start, p.t_start + p.duration}) {
        if (edge > t && edge < tb) tb = edge;
      }
    }
    if (next_pulse_ < pulses_.size() && pulses_[next_pulse_].t > t && pulses_[next_pulse_].t < tb)
      tb = pulses_[next_pulse_].t;
    return tb;
  }

  // Returns the time reached, t_end unless the run terminated inside the tick.
  double advance(double t, double t_end) {
    while (t < t_end && !done_) {
      if (touchdown_time_ <= t) {
        do_touchdown(t);
        continue;
      }
      const double tb = next_break(t, t_end);
      const double span = tb - t;
      const Eigen::Vector3d force = force_at(0.5 * (t + tb));
      const ComState start = state_;
      const ContactPoint contact = contact_;
      const SlopeGradient active = active_;
      const auto flow = [&](double s) {
        return integrate_tick(start, contact, active, params_, force, s, sim_.cam_decay_lambda);
      };

      if (!stance_.transition_done && !(active_ == post_)) {
        if (const auto tc = detect_transition(flow, span, post_, params_.z_tilde_nom, contact_)) {
          state_ = flow(*tc);
          xi_pred_ = dcm_evolve(xi_pred_, contact_, params_, *tc);
          apply_transition(t + *tc, false);
          t += *tc;
          continue;
        }
      }
      state_ = flow(span);
      xi_pred_ = dcm_evolve(xi_pred_, contact_, params_, span);
      t = tb;
      if (t == touchdown_time_) do_touchdown(t);
      apply_pulses(t);
    }
    return t;
  }

  void apply_transition(double t, bool forced) {
    // The guard lies on both planes, so put the height exactly on the new one first
    // (the bisection bracket leaves ~1e-9 m); the reset then conserves momentum exactly.
    const Eigen::Vector3d& S = contact_.position;
    state_.z = S.z() + params_.z_tilde_nom + post_.kx() * (state_.x - S.x()) +
               post_.ky() * (state_.y - S.y());
    TransitionRecord rec;
    rec.t = t;
    rec.pre = state_;
    rec.contact = contact_;
    rec.pre_gradient = active_;
    rec.post_gradient = post_;
    rec.forced = forced;
    const Eigen::Vector2d v_pre = galip_velocity(state_, params_, contact_.position.z());
    state_ = reset_map(state_, active_, post_, contact_);
    const Eigen::Vector2d v_post = galip_velocity(state_, params_, contact_.position.z());
    xi_pred_ = dcm_reset(xi_pred_, v_pre, v_post, params_);
    rec.post = state_;
    trace_.transitions.push_back(rec);
    active_ = post_;
    stance_.transition_done = true;
  }

  void apply_pulses(double t) {
    while (next_pulse_ < pulses_.size() && pulses_[next_pulse_].t <= t) {
      const DcmState before = estimate();
      state_ = inject_cam(state_, pulses_[next_pulse_].impulse);
      // The injection is a known input, not a prediction error.
      const DcmState after = estimate();
      xi_pred_ = DcmState::from(xi_pred_.vec() + after.vec() - before.vec());
      ++next_pulse_;
    }
  }

  void do_touchdown(double t) {
    if (!stance_.transition_done && !(active_ == post_)) apply_transition(t, true);

    const std::size_t target = stance_.stone + 1;
    const double prediction_error = (estimate().vec() - xi_pred_.vec()).norm();
    const Foothold desired = extended_foothold(trace_.layout, target, planner_.step_width);
    const TouchdownResult td = touchdown(state_, commanded_, opposite(contact_.side),
                                         trace_.layout, segments_, target, params_);

    StepEvent ev;
    ev.index = static_cast<int>(trace_.events.size()) + 1;
    ev.stone = target;
    ev.touchdown_time = t;
    ev.planned_duration = planned_duration_;
    ev.actual_duration = t - step_start_;
    ev.commanded_position = td.contact.position;
    ev.desired_position = desired.position;
    ev.deviation = (td.contact.position.head<2>() - desired.position.head<2>()).norm();
    ev.feasible = td.feasible;
    ev.dcm_prediction_error = prediction_error;

    state_ = td.state;
    contact_ = td.contact;
    active_ = td.pre;
    post_ = td.post;
    stance_ = {target, 0.0, active_ == post_};
    step_start_ = t;
    first_plan_of_step_ = true;
    warned_this_step_.clear();
    committed_ = false;

    const DcmState xi = estimate();
    xi_pred_ = xi;
    ev.offset = xi.vec() - contact_.xy();
    ev.offset_nom = nominal_offset_for(target);
    ev.offset_error = (ev.offset - ev.offset_nom).norm();
    trace_.events.push_back(ev);

    const bool last_stone = target + 1 >= trace_.layout.size();
    if (static_cast<int>(trace_.events.size()) >= sim_.max_steps || last_stone) {
      done_ = true;
      return;
    }
    plan(t);
  }

  void check_fall(double t) {
    const double offset = (estimate().vec() - contact_.xy()).norm();
    if (!(offset <= sim_.fall_threshold) || !state_.is_finite()) {
      trace_.metrics.fell = true;
      trace_.metrics.fall_time = t;
      done_ = true;
    }
  }

  void record_sample(double t) {
    SimSample s;
    s.t = t;
    s.state = state_;
    s.dcm = estimate();
    s.contact = contact_;
    s.step_index = static_cast<int>(trace_.events.size());
    s.active = active_;
    trace_.samples.push_back(s);
  }
};

}  // namespace

SimTrace run_closed_loop(const ScenarioConfig& scenario, const SimConfig& sim,
                         const PendulumParams& params, const PlannerConfig& planner) {
  ClosedLoop loop(scenario, sim, params, planner);
  return loop.run();
}

}  // namespace psgait
