#pragma once

#include <array>
#include <cstdint>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "psgait/types.hpp"

namespace psgait {

struct SteppingStone {
  Eigen::Vector3d center = Eigen::Vector3d::Zero();
  double yaw = 0.0;
  Eigen::Vector2d half_extents{0.10, 0.07};
};

struct Foothold {
  Eigen::Vector3d position = Eigen::Vector3d::Zero();
  Side side = Side::Left;
};

/// Stones plus one desired foothold (the stone center) per stone, sides alternating.
struct StoneLayout {
  std::vector<SteppingStone> stones;
  std::vector<Foothold> desired_footholds;

  std::size_t size() const { return stones.size(); }
  /// Throws std::invalid_argument when the footholds do not match the stones.
  void validate() const;
};

struct VirtualSlopeSegment {
  Eigen::Vector3d s_adj_from = Eigen::Vector3d::Zero();
  Eigen::Vector3d s_adj_to = Eigen::Vector3d::Zero();
  Eigen::Vector3d p_vec = Eigen::Vector3d::Zero();
  SlopeGradient gradient;
};

/// Constant external force applied over [t_start, t_start + duration).
struct Push {
  double t_start = 0.0;
  Eigen::Vector3d force = Eigen::Vector3d::Zero();
  double duration = 0.3;
};

/// CAM impulse added at t_start and then every `period` seconds, `count` times.
struct CamPulse {
  double t_start = 0.0;
  Eigen::Vector2d impulse = Eigen::Vector2d::Zero();  // (lx, ly), kg m^2/s
  double period = 0.0;
  int count = 1;
  bool alternate = false;  // flip the sign on every repetition
};

enum class ElevationPattern { None, Periodic, Random };

const char* to_string(ElevationPattern pattern);
ElevationPattern elevation_pattern_from_string(const std::string& name);

struct ScenarioConfig {
  std::string name = "custom";
  Eigen::Vector3d p_init{0.20, 0.0, 0.0};
  double yaw_step = 0.0;
  /// Per-axis uniform ranges [lo, hi] of the stone disturbance, m.
  std::array<Eigen::Vector2d, 3> disturbance{Eigen::Vector2d::Zero(), Eigen::Vector2d::Zero(),
                                             Eigen::Vector2d::Zero()};
  ElevationPattern elevation_pattern = ElevationPattern::None;
  double elevation_amplitude = 0.0;
  int n_stones = 60;
  std::uint64_t seed = 1;
  double alpha = 0.5;
  std::vector<Push> pushes;
  std::vector<CamPulse> cam_pulses;
  bool pslip_enabled = true;
  double step_width = 0.2;
  Eigen::Vector2d stone_half_extents{0.10, 0.07};
  Side first_support = Side::Left;

  void validate() const;
};

/// Foothold moved by W_{l/r}/2 laterally so adjacent adjusted footholds lie on the gait centerline.
Eigen::Vector3d adjusted_foothold(const Eigen::Vector3d& s_des, Side support, double width);

/// Plane between two adjusted footholds: k = P_h P_z / (P_h^2 + P_z^2) per axis, 0 when degenerate.
VirtualSlopeSegment virtual_slope(const Eigen::Vector3d& s_adj_from,
                                  const Eigen::Vector3d& s_adj_to);

/// One segment per consecutive pair of desired footholds.
std::vector<VirtualSlopeSegment> build_segments(const StoneLayout& layout, double width);

/// Gradients before and after the mid-stance transition while standing on
/// stone `stance`. Stone 0 reuses the first segment for its pre gradient, and
/// the final stone repeats its pre gradient. Throws std::out_of_range when
/// `stance` exceeds the number of segments.
std::pair<SlopeGradient, SlopeGradient> gradient_pair(
    const std::vector<VirtualSlopeSegment>& segments, std::size_t stance);

StoneLayout generate_scenario(const ScenarioConfig& config);

/// Inclusive point-in-rectangle test in the stone's yawed frame.
bool stone_contains(const SteppingStone& stone, const Eigen::Vector2d& point_xy);

/// Uniform draws for scenario generation. Uses the raw mt19937_64 stream
/// (fully specified by the standard) so layouts match across standard libraries.
class UniformSource {
 public:
  explicit UniformSource(std::uint64_t seed) : engine_(seed) {}
  double operator()(double lo, double hi);

 private:
  std::mt19937_64 engine_;
};

}  // namespace psgait
