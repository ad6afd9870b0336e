#pragma once

// Piecewise-slope pendulum flow, slope-transition reset map and the
// generalized angular-momentum velocity abstraction.
//
// All equations are evaluated in coordinates relative to the active contact
// point; states themselves stay in the world frame.

#include "psgait/types.hpp"

namespace psgait {

inline constexpr double kGuardTolerance = 1e-6;
inline constexpr double kSingularTolerance = 1e-6;
inline constexpr double kPreSlopeTolerance = 1e-6;

/// CAM expressed as an equivalent CoM velocity, L/(m h), per horizontal axis.
Eigen::Vector2d cam_velocity(const ComState& state, const PendulumParams& params, double height);

/// G-ALIP velocity: v + alpha * L_com / (m h), with h the CoM height above `support_z`.
Eigen::Vector2d galip_velocity(const ComState& state, const PendulumParams& params,
                               double support_z = 0.0);

/// Inputs that act on the pendulum besides gravity.
struct FlowForcing {
  /// Rate at which posture control drains CAM into linear momentum, 1/s.
  double cam_decay = 0.0;
  /// External horizontal acceleration F/m, held constant over the interval.
  Eigen::Vector2d accel = Eigen::Vector2d::Zero();
};

/// Closed-form flow of the pendulum about `contact` on the plane `active`.
///
/// Horizontal: e'' = w^2 e + accel + decay * L(t)/(m z_nom), e = p - S.
/// CAM: L(t) = L0 exp(-decay t). Vertical: the CoM stays on the plane through
/// its initial height with gradient `active`, so vz = k . v.
ComState com_flow(const ComState& state0, const ContactPoint& contact,
                  const SlopeGradient& active, const PendulumParams& params, double t,
                  const FlowForcing& forcing = {});

/// Vertical velocity jump when the CoM moves from plane `pre` to plane `post`.
/// Throws SingularTransition when 1 - k+ . p/z is within 1e-6 of zero.
double delta_z_dot(const ComState& pre_state, const SlopeGradient& pre, const SlopeGradient& post,
                   const ContactPoint& contact);

/// Velocity reset conserving angular momentum about the contact point.
/// Positions and CAM are unchanged. Returns the input unchanged when pre == post.
ComState reset_map(const ComState& pre_state, const SlopeGradient& pre, const SlopeGradient& post,
                   const ContactPoint& contact);

/// Signed distance of the CoM height from the post-transition plane through
/// the contact raised by `z_tilde`. Zero on the guard set.
double guard_function(const ComState& state, const SlopeGradient& post, double z_tilde,
                      const ContactPoint& contact);

bool guard_check(const ComState& state, const SlopeGradient& post, double z_tilde,
                 const ContactPoint& contact, double tolerance = kGuardTolerance);

}  // namespace psgait
