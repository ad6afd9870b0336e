#pragma once

#include <cmath>
#include <stdexcept>
#include <string>

#include <Eigen/Core>

namespace psgait {

inline constexpr double kGravity = 9.81;

enum class Side { Left, Right };

inline Side opposite(Side side) { return side == Side::Left ? Side::Right : Side::Left; }

/// Signed lateral foot distance W_{l/r}: -W when the support leg is the left leg, +W otherwise.
inline double signed_width(Side support, double width) {
  return support == Side::Left ? -width : width;
}

const char* to_string(Side side);

class SingularTransition : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class PreSlopeViolation : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Gradient coefficients of a (virtual) support plane z = kx*x + ky*y + c.
class SlopeGradient {
 public:
  SlopeGradient() = default;
  /// Throws std::invalid_argument unless |kx| < 1 and |ky| < 1.
  SlopeGradient(double kx, double ky);

  double kx() const { return kx_; }
  double ky() const { return ky_; }
  Eigen::Vector2d vec() const { return {kx_, ky_}; }

  bool operator==(const SlopeGradient&) const = default;

 private:
  double kx_ = 0.0;
  double ky_ = 0.0;
};

/// Centroidal state in the world frame.
struct ComState {
  double x = 0.0, y = 0.0, z = 0.0;
  double vx = 0.0, vy = 0.0, vz = 0.0;
  double lcom_x = 0.0, lcom_y = 0.0;  // centroidal angular momentum, kg m^2/s

  Eigen::Vector2d position_xy() const { return {x, y}; }
  Eigen::Vector2d velocity_xy() const { return {vx, vy}; }
  bool is_finite() const;

  bool operator==(const ComState&) const = default;
};

/// Sign used for the y-channel CAM-to-velocity conversion. `Standard` follows the
/// cross-product convention (v_y gains -L_x), `Mirrored` uses +L_x.
enum class CamConvention { Standard, Mirrored };

struct PendulumParams {
  double mass = 44.9;
  double z_tilde_nom = 0.78;
  double alpha = 0.5;
  CamConvention cam_convention = CamConvention::Standard;

  double omega() const { return std::sqrt(kGravity / z_tilde_nom); }
  double cam_sign_y() const { return cam_convention == CamConvention::Standard ? -1.0 : 1.0; }
  /// Throws std::invalid_argument on non-physical values.
  void validate() const;
};

struct ContactPoint {
  Eigen::Vector3d position = Eigen::Vector3d::Zero();
  Side side = Side::Left;

  Eigen::Vector2d xy() const { return position.head<2>(); }
};

}  // namespace psgait
