#include "psgait/core_model.hpp"

#include <sstream>

namespace psgait {

const char* to_string(Side side) { return side == Side::Left ? "L" : "R"; }

SlopeGradient::SlopeGradient(double kx, double ky) : kx_(kx), ky_(ky) {
  if (!(std::abs(kx) < 1.0) || !(std::abs(ky) < 1.0)) {
    std::ostringstream os;
    os << "slope gradient out of range (|k| < 1 required): kx=" << kx << " ky=" << ky;
    throw std::invalid_argument(os.str());
  }
}

bool ComState::is_finite() const {
  return std::isfinite(x) && std::isfinite(y) && std::isfinite(z) && std::isfinite(vx) &&
         std::isfinite(vy) && std::isfinite(vz) && std::isfinite(lcom_x) &&
         std::isfinite(lcom_y);
}

void PendulumParams::validate() const {
  if (!(mass > 0.0) || !std::isfinite(mass)) throw std::invalid_argument("mass must be > 0");
  if (!(z_tilde_nom > 0.0) || !std::isfinite(z_tilde_nom))
    throw std::invalid_argument("nominal pendulum height must be > 0");
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw std::invalid_argument("alpha must lie in [0, 1]");
}

Eigen::Vector2d cam_velocity(const ComState& state, const PendulumParams& params, double height) {
  const double mh = params.mass * height;
  return {state.lcom_y / mh, params.cam_sign_y() * state.lcom_x / mh};
}

Eigen::Vector2d galip_velocity(const ComState& state, const PendulumParams& params,
                               double support_z) {
  return state.velocity_xy() + params.alpha * cam_velocity(state, params, state.z - support_z);
}

namespace {

struct AxisSolution {
  double pos;
  double vel;
};

// e'' = w^2 e + a + c exp(-lambda t), e(0) = e0, e'(0) = v0.
AxisSolution solve_axis(double e0, double v0, double w, double a, double c, double lambda,
                        double t) {
  const double ch = std::cosh(w * t);
  const double sh = std::sinh(w * t);
  // Particular solution for the constant term.
  double ep0 = -a / (w * w);
  double ept = ep0;
  double vp0 = 0.0;
  double vpt = 0.0;
  if (c != 0.0) {
    const double denom = lambda * lambda - w * w;
    const double decay = std::exp(-lambda * t);
    if (std::abs(denom) > 1e-9) {
      ep0 += c / denom;
      ept += c * decay / denom;
      vp0 += -lambda * c / denom;
      vpt += -lambda * c * decay / denom;
    } else {
      // Resonant case lambda == w: e_p = -c t exp(-w t) / (2 w).
      ept += -c * t * decay / (2.0 * w);
      vp0 += -c / (2.0 * w);
      vpt += -c * decay * (1.0 - w * t) / (2.0 * w);
    }
  }
  const double A = e0 - ep0;
  const double B = v0 - vp0;
  return {A * ch + B * sh / w + ept, A * w * sh + B * ch + vpt};
}

}  // namespace

ComState com_flow(const ComState& s0, const ContactPoint& contact, const SlopeGradient& active,
                  const PendulumParams& params, double t, const FlowForcing& forcing) {
  if (t == 0.0) return s0;
  const double w = params.omega();
  const double lambda = forcing.cam_decay;
  const Eigen::Vector2d cam_v = cam_velocity(s0, params, params.z_tilde_nom);
  const AxisSolution ax = solve_axis(s0.x - contact.position.x(), s0.vx, w, forcing.accel.x(),
                                     lambda * cam_v.x(), lambda, t);
  const AxisSolution ay = solve_axis(s0.y - contact.position.y(), s0.vy, w, forcing.accel.y(),
                                     lambda * cam_v.y(), lambda, t);
  ComState s = s0;
  s.x = contact.position.x() + ax.pos;
  s.y = contact.position.y() + ay.pos;
  s.vx = ax.vel;
  s.vy = ay.vel;
  s.z = s0.z + active.kx() * (s.x - s0.x) + active.ky() * (s.y - s0.y);
  s.vz = active.kx() * s.vx + active.ky() * s.vy;
  if (lambda != 0.0) {
    const double decay = std::exp(-lambda * t);
    s.lcom_x = s0.lcom_x * decay;
    s.lcom_y = s0.lcom_y * decay;
  }
  return s;
}

double delta_z_dot(const ComState& pre_state, const SlopeGradient& pre, const SlopeGradient& post,
                   const ContactPoint& contact) {
  const double rx = pre_state.x - contact.position.x();
  const double ry = pre_state.y - contact.position.y();
  const double rz = pre_state.z - contact.position.z();
  const double denom = 1.0 - post.kx() * rx / rz - post.ky() * ry / rz;
  if (!(std::abs(denom) > kSingularTolerance)) {
    std::ostringstream os;
    os << "singular slope transition: 1 - k+ . p/z = " << denom;
    throw SingularTransition(os.str());
  }
  return ((post.kx() - pre.kx()) * pre_state.vx + (post.ky() - pre.ky()) * pre_state.vy) / denom;
}

ComState reset_map(const ComState& pre_state, const SlopeGradient& pre, const SlopeGradient& post,
                   const ContactPoint& contact) {
  const double slope_err = pre_state.vz - (pre.kx() * pre_state.vx + pre.ky() * pre_state.vy);
  if (!(std::abs(slope_err) <= kPreSlopeTolerance)) {
    std::ostringstream os;
    os << "pre-transition state is off its slope: vz - k- . v = " << slope_err;
    throw PreSlopeViolation(os.str());
  }
  if (pre == post) return pre_state;

  const double dzd = delta_z_dot(pre_state, pre, post, contact);
  const double rz = pre_state.z - contact.position.z();
  ComState s = pre_state;
  s.vx = (pre_state.x - contact.position.x()) / rz * dzd + pre_state.vx;
  s.vy = (pre_state.y - contact.position.y()) / rz * dzd + pre_state.vy;
  s.vz = pre_state.vz + dzd;
  return s;
}

double guard_function(const ComState& state, const SlopeGradient& post, double z_tilde,
                      const ContactPoint& contact) {
  const Eigen::Vector3d& S = contact.position;
  return state.z - (post.kx() * (state.x - S.x()) + post.ky() * (state.y - S.y()) + S.z() +
                    z_tilde);
}

bool guard_check(const ComState& state, const SlopeGradient& post, double z_tilde,
                 const ContactPoint& contact, double tolerance) {
  return std::abs(guard_function(state, post, z_tilde, contact)) <= tolerance;
}

}  // namespace psgait
