#include "psgait/terrain.hpp"

#include <cmath>
#include <sstream>

namespace psgait {

const char* to_string(ElevationPattern pattern) {
  switch (pattern) {
    case ElevationPattern::None:
      return "none";
    case ElevationPattern::Periodic:
      return "periodic";
    case ElevationPattern::Random:
      return "random";
  }
  return "none";
}

ElevationPattern elevation_pattern_from_string(const std::string& name) {
  if (name == "none") return ElevationPattern::None;
  if (name == "periodic") return ElevationPattern::Periodic;
  if (name == "random") return ElevationPattern::Random;
  throw std::invalid_argument("unknown elevation pattern '" + name + "'");
}

void StoneLayout::validate() const {
  if (stones.size() != desired_footholds.size())
    throw std::invalid_argument("layout needs exactly one desired foothold per stone");
  for (std::size_t i = 1; i < desired_footholds.size(); ++i) {
    if (desired_footholds[i].side == desired_footholds[i - 1].side)
      throw std::invalid_argument("foothold sides must alternate");
  }
  for (const auto& stone : stones) {
    if (!(stone.half_extents.x() > 0.0 && stone.half_extents.y() > 0.0))
      throw std::invalid_argument("stone half extents must be positive");
  }
}

void ScenarioConfig::validate() const {
  if (n_stones < 2) throw std::invalid_argument("scenario needs at least two stones");
  for (int axis = 0; axis < 3; ++axis) {
    if (!(disturbance[axis].x() <= disturbance[axis].y()))
      throw std::invalid_argument("disturbance range must satisfy lo <= hi");
  }
  if (elevation_amplitude < 0.0) throw std::invalid_argument("elevation amplitude must be >= 0");
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw std::invalid_argument("alpha must lie in [0, 1]");
  if (!(step_width >= 0.0)) throw std::invalid_argument("step width must be >= 0");
  if (!(stone_half_extents.x() > 0.0 && stone_half_extents.y() > 0.0))
    throw std::invalid_argument("stone half extents must be positive");
  for (const auto& push : pushes) {
    if (!(push.duration > 0.0)) throw std::invalid_argument("push duration must be > 0");
  }
  for (const auto& pulse : cam_pulses) {
    if (pulse.count < 1) throw std::invalid_argument("cam pulse count must be >= 1");
    if (pulse.count > 1 && !(pulse.period > 0.0))
      throw std::invalid_argument("repeated cam pulses need a positive period");
  }
}

Eigen::Vector3d adjusted_foothold(const Eigen::Vector3d& s_des, Side support, double width) {
  return s_des + Eigen::Vector3d(0.0, signed_width(support, width) / 2.0, 0.0);
}

namespace {
double plane_gradient(double horizontal, double vertical) {
  const double denom = horizontal * horizontal + vertical * vertical;
  return denom == 0.0 ? 0.0 : horizontal * vertical / denom;
}
}  // namespace

VirtualSlopeSegment virtual_slope(const Eigen::Vector3d& s_adj_from,
                                  const Eigen::Vector3d& s_adj_to) {
  VirtualSlopeSegment seg;
  seg.s_adj_from = s_adj_from;
  seg.s_adj_to = s_adj_to;
  seg.p_vec = s_adj_to - s_adj_from;
  seg.gradient = SlopeGradient(plane_gradient(seg.p_vec.x(), seg.p_vec.z()),
                               plane_gradient(seg.p_vec.y(), seg.p_vec.z()));
  return seg;
}

std::vector<VirtualSlopeSegment> build_segments(const StoneLayout& layout, double width) {
  std::vector<VirtualSlopeSegment> segments;
  const auto& feet = layout.desired_footholds;
  if (feet.size() < 2) return segments;
  segments.reserve(feet.size() - 1);
  for (std::size_t i = 0; i + 1 < feet.size(); ++i) {
    segments.push_back(
        virtual_slope(adjusted_foothold(feet[i].position, feet[i].side, width),
                      adjusted_foothold(feet[i + 1].position, feet[i + 1].side, width)));
  }
  return segments;
}

std::pair<SlopeGradient, SlopeGradient> gradient_pair(
    const std::vector<VirtualSlopeSegment>& segments, std::size_t stance) {
  if (segments.empty()) return {SlopeGradient{}, SlopeGradient{}};
  if (stance > segments.size()) {
    std::ostringstream os;
    os << "stance index " << stance << " beyond " << segments.size() << " segments";
    throw std::out_of_range(os.str());
  }
  const SlopeGradient pre = segments[stance == 0 ? 0 : stance - 1].gradient;
  const SlopeGradient post = stance < segments.size() ? segments[stance].gradient : pre;
  return {pre, post};
}

double UniformSource::operator()(double lo, double hi) {
  // 53 high bits -> [0, 1).
  const double unit = static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  return lo + (hi - lo) * unit;
}

StoneLayout generate_scenario(const ScenarioConfig& config) {
  config.validate();
  UniformSource draw(config.seed);
  StoneLayout layout;
  layout.stones.reserve(config.n_stones);
  layout.desired_footholds.reserve(config.n_stones);

  Side side = config.first_support;
  for (int i = 0; i < config.n_stones; ++i) {
    Eigen::Vector3d center = static_cast<double>(i) * config.p_init;
    // Left stones sit W/2 to the left of the walking line, right stones W/2 to the right.
    center.y() -= signed_width(side, config.step_width) / 2.0;

    // Every stone consumes the same draws so layouts stay aligned across configs.
    Eigen::Vector3d dist;
    for (int axis = 0; axis < 3; ++axis)
      dist[axis] = draw(config.disturbance[axis].x(), config.disturbance[axis].y());
    const double elevation_draw = draw(-config.elevation_amplitude, config.elevation_amplitude);
    if (i > 0) center += dist;

    switch (config.elevation_pattern) {
      case ElevationPattern::None:
        break;
      case ElevationPattern::Periodic:
        center.z() += (i % 2 == 0) ? config.elevation_amplitude : -config.elevation_amplitude;
        break;
      case ElevationPattern::Random:
        if (i > 0) center.z() += elevation_draw;
        break;
    }

    SteppingStone stone;
    stone.center = center;
    stone.yaw = (i % 2 == 0) ? config.yaw_step : -config.yaw_step;
    stone.half_extents = config.stone_half_extents;
    layout.stones.push_back(stone);
    layout.desired_footholds.push_back({center, side});
    side = opposite(side);
  }
  return layout;
}

bool stone_contains(const SteppingStone& stone, const Eigen::Vector2d& point_xy) {
  const Eigen::Vector2d d = point_xy - stone.center.head<2>();
  const double c = std::cos(stone.yaw);
  const double s = std::sin(stone.yaw);
  const double local_x = c * d.x() + s * d.y();
  const double local_y = -s * d.x() + c * d.y();
  // Inclusive edges; the slack absorbs round-off from center subtraction.
  constexpr double kEdgeSlack = 1e-12;
  return std::abs(local_x) <= stone.half_extents.x() + kEdgeSlack &&
         std::abs(local_y) <= stone.half_extents.y() + kEdgeSlack;
}

}  // namespace psgait
