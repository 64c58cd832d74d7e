#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <vector>

namespace avsec {

constexpr double kPi = 3.14159265358979323846;
constexpr double kTwoPi = 2.0 * kPi;

inline double deg2rad(double deg) { return deg * (kPi / 180.0); }
inline double rad2deg(double rad) { return rad * (180.0 / kPi); }

/// Wrap angle to [0, 2*pi).
double wrap_two_pi(double a);

/// Wrap angle to (-pi, pi].
double wrap_pi(double a);

struct Vec3 {
  double x = 0.0, y = 0.0, z = 0.0;

  Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
  Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
  Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }
  double dot(const Vec3& o) const { return x * o.x + y * o.y + z * o.z; }
  double norm() const;
};

/// 2D pose on the ground plane; yaw in (-pi, pi], radians.
struct Pose {
  double x = 0.0;
  double y = 0.0;
  double yaw = 0.0;
};

/// One lidar return in sensor-spherical coordinates.
///   range rho in meters, azimuth theta in [0, 2*pi), elevation phi in
///   [-pi/2, pi/2], time t in seconds, intensity in [0, 1].
struct SphericalPoint {
  double range = 0.0;
  double azimuth = 0.0;
  double elevation = 0.0;
  double t = 0.0;
  double intensity = 0.0;
};

enum class ReturnMode : uint8_t { kSingle, kLast, kDual };

/// Spinning-lidar geometry: fixed elevation channels, uniform azimuth grid.
struct SensorModel {
  int channels = 32;
  std::vector<double> elevation_angles;  // strictly increasing, radians
  int azimuth_steps = 1800;              // returns per channel per rotation
  double rotation_rate = 10.0;           // Hz
  double max_range = 130.0;              // meters
  double mount_height = 1.7;             // sensor origin above ground, meters
  double mount_yaw = 0.0;
  ReturnMode mode = ReturnMode::kSingle;

  double azimuth_step() const { return kTwoPi / azimuth_steps; }
  /// Canonical grid azimuth for step i, bit-stable against the centidegree
  /// wire encoding when azimuth_steps divides 36000.
  double grid_azimuth(int i) const { return deg2rad(360.0 * i / azimuth_steps); }
  /// Time between successive azimuth firings, seconds.
  double firing_interval() const { return 1.0 / (rotation_rate * azimuth_steps); }
  double sweep_period() const { return 1.0 / rotation_rate; }
  int points_per_sweep() const { return channels * azimuth_steps; }

  /// Evenly spaced channels over [min_deg, max_deg].
  static SensorModel uniform(int channels, double min_elev_deg, double max_elev_deg,
                             int azimuth_steps, double rotation_rate, double max_range,
                             double mount_height);
};

/// Number of azimuth steps implied by a firing interval at a rotation rate.
int expected_azimuth_count(double rotation_rate, double firing_interval);

/// Full (azimuth, elevation) grid, sorted by azimuth step then channel.
std::vector<std::array<double, 2>> expected_angle_grid(const SensorModel& s);

Vec3 spherical_to_cartesian(double range, double azimuth, double elevation);

/// Inverse of spherical_to_cartesian. Throws std::domain_error on the zero
/// vector; at the poles azimuth is reported as 0.
void cartesian_to_spherical(const Vec3& v, double& range, double& azimuth, double& elevation);

/// Nearest azimuth step for an angle, modulo wraparound.
int nearest_azimuth_step(const SensorModel& s, double azimuth);

/// Nearest elevation channel index.
int nearest_channel(const SensorModel& s, double elevation);

}  // namespace avsec
