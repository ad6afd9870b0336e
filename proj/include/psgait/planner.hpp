#pragma once

// Receding-horizon planner over step durations and step positions.
//
// Decision variables per step i = 1..N:
//   tau_i = exp(omega T_i)      temporal variable
//   u_i   = S_i - S_0           step displacement from the current contact
//   b_i   = xi_i - S_i          DCM offset at the start of step i
// linked by the step-to-step recursion
//   b_i = tau_i b_{i-1} - (u_i - u_{i-1}) + dv_i / omega * exp(omega T_nom / 2),
// with u_0 = 0 and b_0 the measured offset. b is eliminated by that recursion
// and the remaining bounded least-squares problem in (tau, u) is solved with
// a damped Gauss-Newton iteration.

#include <string>
#include <vector>

#include "psgait/terrain.hpp"
#include "psgait/types.hpp"

namespace psgait {

struct MpcWeights {
  double w_tau = 0.1;
  double w_b = 3.0;
  double w_u = 10.0;
};

struct PlannerConfig {
  int horizon = 2;
  double t_nom = 0.5;
  double t_min = 0.3;
  double t_max = 0.8;
  MpcWeights weights;
  double step_width = 0.2;
  bool pslip_enabled = true;
  double leg_reach = 0.5;
  /// Floor on the remaining duration of the step in progress, s.
  double min_remaining = 0.05;
  int max_iterations = 50;
  double step_tolerance = 1e-10;

  void validate() const;
};

/// Where the robot is within the current stance.
struct StanceContext {
  std::size_t stone = 0;         // layout index of the support stone
  double t_elapsed = 0.0;        // time since touchdown, s
  bool transition_done = false;  // mid-stance slope transition already happened
};

struct MpcProblem {
  int n_steps = 0;
  double omega = 0.0;
  Eigen::Vector2d b0 = Eigen::Vector2d::Zero();
  Eigen::Vector3d s0 = Eigen::Vector3d::Zero();
  std::vector<double> tau_nom, tau_min, tau_max;
  std::vector<Eigen::Vector2d> b_nom, u_nom, dv_mid;
  std::vector<double> w_tau, w_b, w_u;
  /// exp(omega T_nom / 2): the midpoint jump grows over the second half step.
  double jump_gain = 1.0;
  double leg_reach = 0.5;
  int max_iterations = 50;
  double step_tolerance = 1e-10;

  void validate() const;
};

struct SolverStats {
  int iterations = 0;
  double residual = 0.0;  // max per-step constraint residual
  double cost = 0.0;
  double wall_us = 0.0;
  bool converged = false;
};

struct MpcSolution {
  std::vector<double> tau;
  std::vector<Eigen::Vector2d> b;
  std::vector<Eigen::Vector2d> u;
  std::vector<double> t_step;
  Eigen::Vector3d next_step_position = Eigen::Vector3d::Zero();
  double next_step_duration = 0.0;
  SolverStats stats;
  std::vector<std::string> warnings;
};

struct StepCommand {
  Eigen::Vector3d position = Eigen::Vector3d::Zero();
  double duration = 0.0;
};

/// Desired foothold `index`, continuing the last step pattern past the end of the layout.
Foothold extended_foothold(const StoneLayout& layout, std::size_t index, double width);

/// Midpoint G-ALIP velocity jump of the nominal step described by `p_vec`
/// (adjusted-foothold displacement) when the slope changes from `pre` to `post`.
Eigen::Vector2d predicted_velocity_jump(const Eigen::Vector3d& p_vec, double t_nom,
                                        const SlopeGradient& pre, const SlopeGradient& post,
                                        const PendulumParams& params, double w_signed);

MpcProblem build_problem(const ComState& state, const ContactPoint& contact,
                         const StoneLayout& layout, const StanceContext& stance,
                         const PendulumParams& params, const PlannerConfig& config);

/// b_i for given (tau, u) by forward recursion.
std::vector<Eigen::Vector2d> propagate_offsets(const MpcProblem& problem,
                                               const std::vector<double>& tau,
                                               const std::vector<Eigen::Vector2d>& u);

double mpc_cost(const MpcProblem& problem, const std::vector<double>& tau,
                const std::vector<Eigen::Vector2d>& u);

/// Never throws on non-convergence: stats.converged is false and the best iterate is returned.
MpcSolution solve(const MpcProblem& problem);

/// First-step command: position S_0 + u_1 with z from the target stone, duration ln(tau_1)/omega.
StepCommand extract_command(const MpcSolution& solution, const StoneLayout& layout,
                            std::size_t target_stone, const PendulumParams& params);

}  // namespace psgait
