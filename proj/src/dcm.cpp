#include "psgait/dcm.hpp"

#include "psgait/core_model.hpp"

namespace psgait {

DcmState dcm_from_state(const ComState& state, const PendulumParams& params, double support_z) {
  const Eigen::Vector2d v = galip_velocity(state, params, support_z);
  const double w = params.omega();
  return {state.x + v.x() / w, state.y + v.y() / w};
}

DcmState dcm_evolve(const DcmState& xi0, const ContactPoint& contact, const PendulumParams& params,
                    double t) {
  if (t == 0.0) return xi0;
  const double growth = std::exp(params.omega() * t);
  const Eigen::Vector2d S = contact.xy();
  return DcmState::from((xi0.vec() - S) * growth + S);
}

DcmState dcm_reset(const DcmState& xi_pre, const Eigen::Vector2d& v_tilde_pre,
                   const Eigen::Vector2d& v_tilde_post, const PendulumParams& params) {
  return DcmState::from(xi_pre.vec() + (v_tilde_post - v_tilde_pre) / params.omega());
}

Eigen::Vector2d nominal_offset(double px, double py, double w_signed, double t_step,
                               double omega) {
  const double tau = std::exp(omega * t_step);
  return {px / (tau - 1.0), w_signed / (tau + 1.0) + py / (tau - 1.0)};
}

NominalOrbit nominal_orbit(double px, double py, double w_signed, double t_step,
                           const PendulumParams& params) {
  const double w = params.omega();
  const double half = w * t_step / 2.0;
  NominalOrbit orbit;
  orbit.px = px;
  orbit.py = py;
  orbit.w_signed = w_signed;
  orbit.t_step = t_step;
  orbit.xdot_m = w * px / (2.0 * std::sinh(half));
  orbit.y_m = w_signed / (2.0 * std::cosh(half));
  orbit.ydot_m = w * py / (2.0 * std::sinh(half));
  const Eigen::Vector2d b = nominal_offset(px, py, w_signed, t_step, w);
  orbit.b_nom_x = b.x();
  orbit.b_nom_y = b.y();
  return orbit;
}

DcmState step_to_step(const DcmState& xi_start, const ContactPoint& contact, double t_step,
                      const Eigen::Vector2d& dv_mid, const PendulumParams& params) {
  const double w = params.omega();
  const Eigen::Vector2d S = contact.xy();
  const Eigen::Vector2d xi =
      (xi_start.vec() - S) * std::exp(w * t_step) + dv_mid / w * std::exp(w * t_step / 2.0) + S;
  return DcmState::from(xi);
}

double deviation_decay(double x_dev, double px, double t_step, const PendulumParams& params) {
  return px / 2.0 + std::exp(-params.omega() * t_step) * x_dev;
}

}  // namespace psgait
