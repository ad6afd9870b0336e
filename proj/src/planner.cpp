#include "psgait/planner.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <sstream>

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include "psgait/core_model.hpp"
#include "psgait/dcm.hpp"

namespace psgait {

void PlannerConfig::validate() const {
  if (horizon < 1) throw std::invalid_argument("planner horizon must be >= 1");
  if (!(t_min > 0.0 && t_min <= t_nom && t_nom <= t_max))
    throw std::invalid_argument("step durations must satisfy 0 < t_min <= t_nom <= t_max");
  if (weights.w_tau < 0.0 || weights.w_b < 0.0 || weights.w_u < 0.0)
    throw std::invalid_argument("planner weights must be >= 0");
  if (!(min_remaining > 0.0)) throw std::invalid_argument("min_remaining must be > 0");
  if (max_iterations < 1) throw std::invalid_argument("max_iterations must be >= 1");
}

void MpcProblem::validate() const {
  const auto n = static_cast<std::size_t>(n_steps);
  if (n_steps < 1) throw std::invalid_argument("MPC horizon must be >= 1");
  if (tau_nom.size() != n || tau_min.size() != n || tau_max.size() != n || b_nom.size() != n ||
      u_nom.size() != n || dv_mid.size() != n || w_tau.size() != n || w_b.size() != n ||
      w_u.size() != n)
    throw std::invalid_argument("MPC problem arrays must have n_steps entries");
  for (std::size_t i = 0; i < n; ++i) {
    if (!(tau_min[i] > 1.0 && tau_min[i] <= tau_max[i]))
      throw std::invalid_argument("tau bounds must satisfy 1 < tau_min <= tau_max");
    if (w_tau[i] < 0.0 || w_b[i] < 0.0 || w_u[i] < 0.0)
      throw std::invalid_argument("MPC weights must be >= 0");
  }
}

Foothold extended_foothold(const StoneLayout& layout, std::size_t index, double width) {
  const auto& feet = layout.desired_footholds;
  if (index < feet.size()) return feet[index];
  const std::size_t last = feet.size() - 1;
  const Eigen::Vector3d a_last =
      adjusted_foothold(feet[last].position, feet[last].side, width);
  Eigen::Vector3d stride = Eigen::Vector3d::Zero();
  if (last > 0) {
    stride = a_last - adjusted_foothold(feet[last - 1].position, feet[last - 1].side, width);
  }
  const auto extra = static_cast<double>(index - last);
  const Side side = ((index - last) % 2 == 0) ? feet[last].side : opposite(feet[last].side);
  const Eigen::Vector3d adjusted = a_last + extra * stride;
  return {adjusted - Eigen::Vector3d(0.0, signed_width(side, width) / 2.0, 0.0), side};
}

namespace {

Eigen::Vector3d adjusted_at(const StoneLayout& layout, std::size_t index, double width) {
  const Foothold f = extended_foothold(layout, index, width);
  return adjusted_foothold(f.position, f.side, width);
}

SlopeGradient segment_gradient(const StoneLayout& layout, std::size_t index, double width) {
  // Past the layout the last real segment is repeated.
  const std::size_t last_segment = layout.size() >= 2 ? layout.size() - 2 : 0;
  const std::size_t k = std::min(index, last_segment);
  return virtual_slope(adjusted_at(layout, k, width), adjusted_at(layout, k + 1, width)).gradient;
}

}  // namespace

Eigen::Vector2d predicted_velocity_jump(const Eigen::Vector3d& p_vec, double t_nom,
                                        const SlopeGradient& pre, const SlopeGradient& post,
                                        const PendulumParams& params, double w_signed) {
  if (pre == post) return Eigen::Vector2d::Zero();
  const NominalOrbit orbit = nominal_orbit(p_vec.x(), p_vec.y(), w_signed, t_nom, params);
  ComState mid;
  mid.x = 0.0;
  mid.y = orbit.y_m;
  mid.z = params.z_tilde_nom + pre.ky() * orbit.y_m;
  mid.vx = orbit.xdot_m;
  mid.vy = orbit.ydot_m;
  mid.vz = pre.kx() * mid.vx + pre.ky() * mid.vy;
  const ContactPoint origin{};
  const ComState after = reset_map(mid, pre, post, origin);
  return galip_velocity(after, params) - galip_velocity(mid, params);
}

MpcProblem build_problem(const ComState& state, const ContactPoint& contact,
                         const StoneLayout& layout, const StanceContext& stance,
                         const PendulumParams& params, const PlannerConfig& config) {
  config.validate();
  if (layout.size() < 1) throw std::invalid_argument("layout has no stones");
  const double w = params.omega();
  const double width = config.step_width;
  const auto n = static_cast<std::size_t>(config.horizon);

  MpcProblem p;
  p.n_steps = config.horizon;
  p.omega = w;
  p.s0 = contact.position;
  p.b0 = dcm_from_state(state, params, contact.position.z()).vec() - contact.xy();
  p.jump_gain = std::exp(w * config.t_nom / 2.0);
  p.leg_reach = config.leg_reach;
  p.max_iterations = config.max_iterations;
  p.step_tolerance = config.step_tolerance;

  for (std::size_t i = 1; i <= n; ++i) {
    const std::size_t target = stance.stone + i;
    const std::size_t from = target - 1;
    const Foothold des = extended_foothold(layout, target, width);
    p.u_nom.push_back(des.position.head<2>() - contact.xy());

    const Eigen::Vector3d p_next = adjusted_at(layout, target + 1, width) - adjusted_at(layout, target, width);
    p.b_nom.push_back(
        nominal_offset(p_next.x(), p_next.y(), signed_width(des.side, width), config.t_nom, w));

    Eigen::Vector2d dv = Eigen::Vector2d::Zero();
    const bool already_jumped = (i == 1 && stance.transition_done);
    if (config.pslip_enabled && !already_jumped) {
      const SlopeGradient pre = segment_gradient(layout, from == 0 ? 0 : from - 1, width);
      const SlopeGradient post = segment_gradient(layout, from, width);
      const Eigen::Vector3d p_step = adjusted_at(layout, target, width) - adjusted_at(layout, from, width);
      const Side from_side = extended_foothold(layout, from, width).side;
      dv = predicted_velocity_jump(p_step, config.t_nom, pre, post, params,
                                   signed_width(from_side, width));
    }
    p.dv_mid.push_back(dv);

    if (i == 1) {
      const double t = stance.t_elapsed;
      const double floor = config.min_remaining;
      p.tau_nom.push_back(std::exp(w * std::max(config.t_nom - t, floor)));
      p.tau_min.push_back(std::exp(w * std::max(config.t_min - t, floor)));
      p.tau_max.push_back(std::exp(w * std::max(config.t_max - t, floor)));
    } else {
      p.tau_nom.push_back(std::exp(w * config.t_nom));
      p.tau_min.push_back(std::exp(w * config.t_min));
      p.tau_max.push_back(std::exp(w * config.t_max));
    }
    p.w_tau.push_back(config.weights.w_tau);
    p.w_b.push_back(config.weights.w_b);
    p.w_u.push_back(config.weights.w_u);
  }
  return p;
}

std::vector<Eigen::Vector2d> propagate_offsets(const MpcProblem& problem,
                                               const std::vector<double>& tau,
                                               const std::vector<Eigen::Vector2d>& u) {
  std::vector<Eigen::Vector2d> b(problem.n_steps);
  Eigen::Vector2d b_prev = problem.b0;
  Eigen::Vector2d u_prev = Eigen::Vector2d::Zero();
  const double gain = problem.jump_gain / problem.omega;
  for (int i = 0; i < problem.n_steps; ++i) {
    b[i] = tau[i] * b_prev - (u[i] - u_prev) + problem.dv_mid[i] * gain;
    b_prev = b[i];
    u_prev = u[i];
  }
  return b;
}

double mpc_cost(const MpcProblem& problem, const std::vector<double>& tau,
                const std::vector<Eigen::Vector2d>& u) {
  const auto b = propagate_offsets(problem, tau, u);
  double cost = 0.0;
  for (int i = 0; i < problem.n_steps; ++i) {
    const double dt = tau[i] - problem.tau_nom[i];
    cost += problem.w_tau[i] * dt * dt + problem.w_b[i] * (b[i] - problem.b_nom[i]).squaredNorm() +
            problem.w_u[i] * (u[i] - problem.u_nom[i]).squaredNorm();
  }
  return cost;
}

namespace {

// Variable layout: [tau_1..tau_N, u_1x, u_1y, ..., u_Nx, u_Ny].
// Residual layout: [tau terms (N), u terms (2N), b terms (2N)], each scaled by sqrt(w).
struct LeastSquares {
  const MpcProblem& p;
  int n;

  explicit LeastSquares(const MpcProblem& problem) : p(problem), n(problem.n_steps) {}

  int num_vars() const { return 3 * n; }
  int num_residuals() const { return 5 * n; }

  void unpack(const Eigen::VectorXd& v, std::vector<double>& tau,
              std::vector<Eigen::Vector2d>& u) const {
    tau.resize(n);
    u.resize(n);
    for (int i = 0; i < n; ++i) {
      tau[i] = v[i];
      u[i] = v.segment<2>(n + 2 * i);
    }
  }

  void evaluate(const Eigen::VectorXd& v, Eigen::VectorXd& r, Eigen::MatrixXd* jac) const {
    r.resize(num_residuals());
    if (jac) jac->setZero(num_residuals(), num_vars());
    const double gain = p.jump_gain / p.omega;

    Eigen::Vector2d b_prev = p.b0;
    Eigen::Matrix<double, 2, Eigen::Dynamic> db_prev =
        Eigen::Matrix<double, 2, Eigen::Dynamic>::Zero(2, num_vars());
    for (int i = 0; i < n; ++i) {
      const double tau = v[i];
      const Eigen::Vector2d u = v.segment<2>(n + 2 * i);
      const Eigen::Vector2d u_prev =
          i == 0 ? Eigen::Vector2d::Zero() : Eigen::Vector2d(v.segment<2>(n + 2 * (i - 1)));
      const Eigen::Vector2d b = tau * b_prev - (u - u_prev) + p.dv_mid[i] * gain;

      const double st = std::sqrt(p.w_tau[i]);
      const double su = std::sqrt(p.w_u[i]);
      const double sb = std::sqrt(p.w_b[i]);
      r[i] = st * (tau - p.tau_nom[i]);
      r.segment<2>(n + 2 * i) = su * (u - p.u_nom[i]);
      r.segment<2>(3 * n + 2 * i) = sb * (b - p.b_nom[i]);

      if (jac) {
        Eigen::Matrix<double, 2, Eigen::Dynamic> db = tau * db_prev;
        db.col(i) += b_prev;
        db.block<2, 2>(0, n + 2 * i) -= Eigen::Matrix2d::Identity();
        if (i > 0) db.block<2, 2>(0, n + 2 * (i - 1)) += Eigen::Matrix2d::Identity();
        (*jac)(i, i) = st;
        jac->block<2, 2>(n + 2 * i, n + 2 * i) = su * Eigen::Matrix2d::Identity();
        jac->block(3 * n + 2 * i, 0, 2, num_vars()) = sb * db;
        db_prev = db;
      }
      b_prev = b;
    }
  }
};

}  // namespace

MpcSolution solve(const MpcProblem& problem) {
  const auto start = std::chrono::steady_clock::now();
  problem.validate();
  const int n = problem.n_steps;
  LeastSquares ls(problem);

  Eigen::VectorXd v(ls.num_vars());
  for (int i = 0; i < n; ++i) {
    v[i] = std::clamp(problem.tau_nom[i], problem.tau_min[i], problem.tau_max[i]);
    v.segment<2>(n + 2 * i) = problem.u_nom[i];
  }
  auto project = [&](Eigen::VectorXd& x) {
    for (int i = 0; i < n; ++i) x[i] = std::clamp(x[i], problem.tau_min[i], problem.tau_max[i]);
  };

  Eigen::VectorXd r;
  Eigen::MatrixXd jac;
  ls.evaluate(v, r, &jac);
  double cost = r.squaredNorm();
  double damping = 1e-9;
  bool converged = false;
  int iterations = 0;

  while (iterations < problem.max_iterations) {
    ++iterations;
    const Eigen::VectorXd grad = jac.transpose() * r;
    const Eigen::MatrixXd hess = jac.transpose() * jac;

    // Taus sitting on a bound with the gradient pushing outward are held fixed.
    std::vector<int> free_vars;
    for (int k = 0; k < ls.num_vars(); ++k) {
      if (k < n) {
        const bool at_lo = v[k] <= problem.tau_min[k] && grad[k] > 0.0;
        const bool at_hi = v[k] >= problem.tau_max[k] && grad[k] < 0.0;
        if (at_lo || at_hi) continue;
      }
      free_vars.push_back(k);
    }
    const auto nf = static_cast<int>(free_vars.size());
    if (nf == 0) {
      converged = true;
      break;
    }
    Eigen::MatrixXd h_free(nf, nf);
    Eigen::VectorXd g_free(nf);
    for (int a = 0; a < nf; ++a) {
      g_free[a] = grad[free_vars[a]];
      for (int c = 0; c < nf; ++c) h_free(a, c) = hess(free_vars[a], free_vars[c]);
    }
    h_free.diagonal().array() += damping * (1.0 + h_free.diagonal().array());
    const Eigen::VectorXd delta_free = h_free.ldlt().solve(-g_free);

    Eigen::VectorXd candidate = v;
    for (int a = 0; a < nf; ++a) candidate[free_vars[a]] += delta_free[a];
    project(candidate);
    const double step_norm = (candidate - v).norm();

    Eigen::VectorXd r_new;
    ls.evaluate(candidate, r_new, nullptr);
    const double cost_new = r_new.squaredNorm();
    if (cost_new <= cost) {
      v = candidate;
      r = r_new;
      cost = cost_new;
      ls.evaluate(v, r, &jac);
      damping = std::max(damping * 0.1, 1e-12);
      if (step_norm < problem.step_tolerance) {
        converged = true;
        break;
      }
    } else {
      if (step_norm < problem.step_tolerance) {
        converged = true;
        break;
      }
      damping *= 10.0;
    }
  }

  MpcSolution sol;
  ls.unpack(v, sol.tau, sol.u);
  sol.b = propagate_offsets(problem, sol.tau, sol.u);
  sol.t_step.resize(n);
  for (int i = 0; i < n; ++i) sol.t_step[i] = std::log(sol.tau[i]) / problem.omega;
  sol.next_step_position = problem.s0 + Eigen::Vector3d(sol.u[0].x(), sol.u[0].y(), 0.0);
  sol.next_step_duration = sol.t_step[0];

  double residual = 0.0;
  Eigen::Vector2d b_prev = problem.b0;
  Eigen::Vector2d u_prev = Eigen::Vector2d::Zero();
  for (int i = 0; i < n; ++i) {
    const Eigen::Vector2d lhs = sol.tau[i] * b_prev - sol.b[i];
    const Eigen::Vector2d rhs =
        (sol.u[i] - u_prev) - problem.dv_mid[i] / problem.omega * problem.jump_gain;
    residual = std::max(residual, (lhs - rhs).norm());
    if ((sol.u[i] - u_prev).norm() > problem.leg_reach) {
      std::ostringstream os;
      os << "step " << i + 1 << " length " << (sol.u[i] - u_prev).norm() << " m exceeds leg reach "
         << problem.leg_reach << " m";
      sol.warnings.push_back(os.str());
    }
    b_prev = sol.b[i];
    u_prev = sol.u[i];
  }
  if (!converged) sol.warnings.push_back("MPC did not converge");

  sol.stats.iterations = iterations;
  sol.stats.residual = residual;
  sol.stats.cost = mpc_cost(problem, sol.tau, sol.u);
  sol.stats.converged = converged;
  sol.stats.wall_us =
      std::chrono::duration<double, std::micro>(std::chrono::steady_clock::now() - start).count();
  return sol;
}

StepCommand extract_command(const MpcSolution& solution, const StoneLayout& layout,
                            std::size_t target_stone, const PendulumParams& params) {
  StepCommand cmd;
  cmd.position = solution.next_step_position;
  if (target_stone < layout.size()) cmd.position.z() = layout.stones[target_stone].center.z();
  cmd.duration = std::log(solution.tau.front()) / params.omega();
  return cmd;
}

}  // namespace psgait
