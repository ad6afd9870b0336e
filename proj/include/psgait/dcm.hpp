#pragma once

#include "psgait/types.hpp"

namespace psgait {

struct DcmState {
  double xi_x = 0.0;
  double xi_y = 0.0;

  Eigen::Vector2d vec() const { return {xi_x, xi_y}; }
  static DcmState from(const Eigen::Vector2d& v) { return {v.x(), v.y()}; }
};

/// Midpoint state and DCM offset of the periodic gait for one step, all
/// relative to the support contact. The step spans [-T/2, T/2] around the
/// midpoint, where x_m = 0.
struct NominalOrbit {
  double px = 0.0;
  double py = 0.0;
  double w_signed = 0.0;
  double t_step = 0.0;
  double xdot_m = 0.0;
  double y_m = 0.0;
  double ydot_m = 0.0;
  double b_nom_x = 0.0;
  double b_nom_y = 0.0;

  Eigen::Vector2d b_nom() const { return {b_nom_x, b_nom_y}; }
};

/// xi = p + v_tilde / omega with the G-ALIP velocity.
DcmState dcm_from_state(const ComState& state, const PendulumParams& params,
                        double support_z = 0.0);

/// xi(t) = (xi0 - S) e^{omega t} + S.
DcmState dcm_evolve(const DcmState& xi0, const ContactPoint& contact, const PendulumParams& params,
                    double t);

/// DCM jump produced by a G-ALIP velocity jump: xi+ = xi- + (v+ - v-) / omega.
DcmState dcm_reset(const DcmState& xi_pre, const Eigen::Vector2d& v_tilde_pre,
                   const Eigen::Vector2d& v_tilde_post, const PendulumParams& params);

/// DCM offset at the start of a periodic step relative to its contact.
Eigen::Vector2d nominal_offset(double px, double py, double w_signed, double t_step, double omega);

NominalOrbit nominal_orbit(double px, double py, double w_signed, double t_step,
                           const PendulumParams& params);

/// One step of the DCM with the midpoint velocity jump `dv_mid` applied at T/2.
DcmState step_to_step(const DcmState& xi_start, const ContactPoint& contact, double t_step,
                      const Eigen::Vector2d& dv_mid, const PendulumParams& params);

/// End-of-step CoM position (relative to contact) after starting the step
/// `x_dev` away from -P_x/2 with the nominal DCM: P_x/2 + e^{-omega T} x_dev.
double deviation_decay(double x_dev, double px, double t_step, const PendulumParams& params);

}  // namespace psgait
