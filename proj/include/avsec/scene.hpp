#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "avsec/datagram.hpp"
#include "avsec/geometry.hpp"

namespace avsec {

/// Box on the ground plane: center at the geometric center, z up, yaw about z.
struct OrientedBox {
  Vec3 center;
  double length = 0.0;  // extent along the yaw axis
  double width = 0.0;
  double height = 0.0;
  double yaw = 0.0;

  bool contains(const Vec3& p) const;
  std::vector<Vec3> corners() const;  // 8 corners
};

enum class ObjectClass { kCar, kPedestrian };

/// Constant (speed, yaw_rate) motion for `duration` seconds. The final
/// segment of a trajectory extends indefinitely.
struct TrajectorySegment {
  double duration = 0.0;
  double speed = 0.0;     // along heading, m/s
  double yaw_rate = 0.0;  // rad/s
};

struct SceneObject {
  int id = 0;
  ObjectClass cls = ObjectClass::kCar;
  double length = 4.0, width = 2.0, height = 1.5;
  Pose start;
  std::vector<TrajectorySegment> segments;

  Pose pose_at(double t) const;
  /// World-frame velocity; piecewise constant per segment.
  Vec3 velocity_at(double t) const;
};

/// Pinhole camera, axes aligned with the ego frame (x forward, y left, z up).
struct CameraModel {
  double focal_px = 1000.0;
  int image_width = 1600;
  int image_height = 900;
  double horizontal_fov = 1.3495;  // radians, = 2*atan(width/2 / focal)
  Vec3 mount{0.0, 0.0, 1.6};

  bool in_fov(const Vec3& p_ego) const;
};

struct Scene {
  std::string name;
  uint64_t seed = 1;
  int frames = 100;
  double frame_rate = 10.0;  // Hz
  double range_noise_sigma = 0.02;
  SensorModel sensor;
  CameraModel camera;
  SceneObject ego;  // dims used by the safety layer; id must be 0
  std::vector<SceneObject> objects;

  double frame_time(int frame) const { return frame / frame_rate; }
};

/// Per-object ground truth in the ego frame (origin on the ground under the
/// sensor, x forward). Velocity is relative to the ego.
struct GroundTruthObject {
  int id = 0;
  ObjectClass cls = ObjectClass::kCar;
  OrientedBox box;
  Vec3 velocity;
  int lidar_points = 0;
};

struct RenderResult {
  Sweep sweep;
  std::vector<GroundTruthObject> truth;  // objects within sensor max_range
};

/// Raycast render of one frame: ray-box slab tests against every object plus
/// the ground plane, nearest hit wins, seeded Gaussian range noise.
/// Intensity 0.8 for object hits, 0.3 for ground.
RenderResult render_sweep(const Scene& scene, int frame);

/// Ground-truth boxes only (no raycast); lidar_points stays 0.
std::vector<GroundTruthObject> ground_truth(const Scene& scene, int frame);

struct CameraTruthBox {
  int id = 0;
  double u_min = 0, v_min = 0, u_max = 0, v_max = 0;
  bool truncated = false;
};

/// Noise-free projected 2D boxes for objects in front of the camera,
/// clipped to the image. No occlusion culling.
std::vector<CameraTruthBox> render_camera_truth(const Scene& scene, int frame);

/// Ray-box intersection, slab method. Returns the entry distance along the
/// unit direction d from origin o, if the box is hit at positive range.
std::optional<double> ray_box_distance(const Vec3& o, const Vec3& d, const OrientedBox& box);

/// Fixed deterministic 20-scene suite used by tests and the harness.
std::vector<Scene> builtin_scene_suite();

/// JSON scene description, lossless round-trip. Throws on malformed input.
std::string scene_to_json(const Scene& scene);
Scene scene_from_json(const std::string& text);
void save_scene(const std::string& path, const Scene& scene);
Scene load_scene(const std::string& path);

}  // namespace avsec
