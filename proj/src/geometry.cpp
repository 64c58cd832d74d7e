#include "avsec/geometry.hpp"

#include <algorithm>
#include <cmath>

namespace avsec {

double wrap_two_pi(double a) {
  double r = std::fmod(a, kTwoPi);
  if (r < 0.0) r += kTwoPi;
  if (r >= kTwoPi) r = 0.0;  // fmod can round up to 2*pi for tiny negatives
  return r;
}

double wrap_pi(double a) {
  double r = std::fmod(a + kPi, kTwoPi);
  if (r <= 0.0) r += kTwoPi;
  return r - kPi;
}

double Vec3::norm() const { return std::sqrt(x * x + y * y + z * z); }

SensorModel SensorModel::uniform(int channels, double min_elev_deg, double max_elev_deg,
                                 int azimuth_steps, double rotation_rate, double max_range,
                                 double mount_height) {
  if (channels < 1 || azimuth_steps < 1) throw std::invalid_argument("sensor grid must be nonempty");
  SensorModel s;
  s.channels = channels;
  s.azimuth_steps = azimuth_steps;
  s.rotation_rate = rotation_rate;
  s.max_range = max_range;
  s.mount_height = mount_height;
  s.elevation_angles.resize(channels);
  if (channels == 1) {
    s.elevation_angles[0] = deg2rad(min_elev_deg);
  } else {
    const double step = (max_elev_deg - min_elev_deg) / (channels - 1);
    for (int j = 0; j < channels; ++j) s.elevation_angles[j] = deg2rad(min_elev_deg + step * j);
  }
  return s;
}

int expected_azimuth_count(double rotation_rate, double firing_interval) {
  if (rotation_rate <= 0.0 || firing_interval <= 0.0)
    throw std::invalid_argument("rates must be positive");
  return static_cast<int>(std::lround(1.0 / (rotation_rate * firing_interval)));
}

std::vector<std::array<double, 2>> expected_angle_grid(const SensorModel& s) {
  std::vector<std::array<double, 2>> grid;
  grid.reserve(static_cast<size_t>(s.points_per_sweep()));
  for (int i = 0; i < s.azimuth_steps; ++i) {
    const double az = s.grid_azimuth(i);
    for (int j = 0; j < s.channels; ++j) grid.push_back({az, s.elevation_angles[j]});
  }
  return grid;
}

Vec3 spherical_to_cartesian(double range, double azimuth, double elevation) {
  const double ce = std::cos(elevation);
  return {range * ce * std::cos(azimuth), range * ce * std::sin(azimuth),
          range * std::sin(elevation)};
}

void cartesian_to_spherical(const Vec3& v, double& range, double& azimuth, double& elevation) {
  range = v.norm();
  if (range == 0.0) throw std::domain_error("zero vector has no direction");
  elevation = std::asin(std::clamp(v.z / range, -1.0, 1.0));
  azimuth = (v.x == 0.0 && v.y == 0.0) ? 0.0 : wrap_two_pi(std::atan2(v.y, v.x));
}

int nearest_azimuth_step(const SensorModel& s, double azimuth) {
  const double step = s.azimuth_step();
  int i = static_cast<int>(std::lround(wrap_two_pi(azimuth) / step));
  return i % s.azimuth_steps;
}

int nearest_channel(const SensorModel& s, double elevation) {
  const auto& e = s.elevation_angles;
  auto it = std::lower_bound(e.begin(), e.end(), elevation);
  if (it == e.begin()) return 0;
  if (it == e.end()) return static_cast<int>(e.size()) - 1;
  const int hi = static_cast<int>(it - e.begin());
  return (elevation - e[hi - 1] <= e[hi] - elevation) ? hi - 1 : hi;
}

}  // namespace avsec
