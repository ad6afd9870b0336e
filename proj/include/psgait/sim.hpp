#pragma once

#include <functional>
#include <optional>
#include <vector>

#include "psgait/dcm.hpp"
#include "psgait/planner.hpp"
#include "psgait/terrain.hpp"
#include "psgait/types.hpp"

namespace psgait {

class EmptyTrace : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct SimConfig {
  double dt = 0.001;
  double replan_hz = 100.0;
  double cam_decay_lambda = 5.0;
  int max_steps = 50;
  double fall_threshold = 1.0;

  int ticks_per_replan() const;
  void validate() const;
};

struct StepEvent {
  int index = 0;
  std::size_t stone = 0;
  double touchdown_time = 0.0;
  double planned_duration = 0.0;  // full duration planned at the start of the step
  double actual_duration = 0.0;
  Eigen::Vector3d commanded_position = Eigen::Vector3d::Zero();
  Eigen::Vector3d desired_position = Eigen::Vector3d::Zero();
  double deviation = 0.0;  // horizontal distance commanded -> desired
  bool feasible = true;    // commanded position lies on the target stone
  Eigen::Vector2d offset = Eigen::Vector2d::Zero();      // DCM offset after touchdown
  Eigen::Vector2d offset_nom = Eigen::Vector2d::Zero();  // nominal offset for the new stance
  double offset_error = 0.0;
  double dcm_prediction_error = 0.0;  // end-of-step DCM vs the model prediction
};

struct SimSample {
  double t = 0.0;
  ComState state;
  DcmState dcm;
  ContactPoint contact;
  int step_index = 0;
  SlopeGradient active;
};

/// State on both sides of a slope transition, kept for consistency checks.
struct TransitionRecord {
  double t = 0.0;
  ComState pre;
  ComState post;
  ContactPoint contact;
  SlopeGradient pre_gradient;
  SlopeGradient post_gradient;
  bool forced = false;  // applied at touchdown because the guard was never reached
};

struct Metrics {
  double e_avg = 0.0;
  double e_max = 0.0;
  int steps_completed = 0;
  bool fell = false;
  double fall_time = -1.0;
  std::vector<double> step_durations;
  double dcm_prediction_error = 0.0;  // mean over steps
  int infeasible_footholds = 0;
  int solves = 0;
  int nonconverged_solves = 0;
  double solve_mean_us = 0.0;
  double solve_max_us = 0.0;
  double mean_iterations = 0.0;
  double max_residual = 0.0;
};

struct SimTrace {
  StoneLayout layout;
  std::vector<SimSample> samples;
  std::vector<StepEvent> events;
  std::vector<TransitionRecord> transitions;
  std::vector<Push> pushes;
  std::vector<SolverStats> solves;
  std::vector<std::string> warnings;
  Metrics metrics;
};

/// Advance one control tick with a constant external force (N).
ComState integrate_tick(const ComState& state, const ContactPoint& contact,
                        const SlopeGradient& active, const PendulumParams& params,
                        const Eigen::Vector3d& external_force, double dt, double cam_decay = 0.0);

using FlowFn = std::function<ComState(double)>;

/// Crossing time in [0, span] of the guard of `post`, if the guard function
/// changes sign between flow(0) and flow(span). Refined by bisection to 1e-8 s.
std::optional<double> detect_transition(const FlowFn& flow, double span,
                                        const SlopeGradient& post, double z_tilde,
                                        const ContactPoint& contact);

struct TouchdownResult {
  ContactPoint contact;
  SlopeGradient pre;
  SlopeGradient post;
  ComState state;  // CoM height re-expressed above the new contact
  bool feasible = true;
};

/// Support exchange onto `stone` at `commanded` (z snapped to the stone top).
/// CoM horizontal state, vertical velocity and CAM are carried over unchanged.
TouchdownResult touchdown(const ComState& state, const Eigen::Vector3d& commanded, Side new_side,
                          const StoneLayout& layout,
                          const std::vector<VirtualSlopeSegment>& segments, std::size_t stone,
                          const PendulumParams& params);

ComState inject_cam(const ComState& state, const Eigen::Vector2d& impulse);

/// Throws EmptyTrace when no step was taken.
Metrics compute_metrics(const SimTrace& trace);

SimTrace run_closed_loop(const ScenarioConfig& scenario, const SimConfig& sim,
                         const PendulumParams& params, const PlannerConfig& planner);

}  // namespace psgait
