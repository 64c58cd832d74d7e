#pragma once

#include <Eigen/Dense>
#include <optional>
#include <vector>

#include "avsec/geometry.hpp"
#include "avsec/rng.hpp"
#include "avsec/datagram.hpp"
#include "avsec/scene.hpp"

namespace avsec {

enum class DetectionSource { kLidar, kCamera2d, kCamera3d };

struct PixelBox {
  double u_min = 0.0;
  double v_min = 0.0;
  double u_max = 0.0;
  double v_max = 0.0;

  double center_u() const { return 0.5 * (u_min + u_max); }
  double center_v() const { return 0.5 * (v_min + v_max); }
};

// One detection from any of the three detector substitutes. Lidar and
// camera-3d detections carry `box` (ego frame); camera-2d detections carry
// `box2d` only. Camera-3d detections also carry an anisotropic position
// covariance whose major axis follows the line of sight.
struct BoxDetection {
  DetectionSource source = DetectionSource::kLidar;
  OrientedBox box;
  std::optional<PixelBox> box2d;
  double score = 1.0;
  bool has_position_cov = false;
  Eigen::Matrix3d position_cov = Eigen::Matrix3d::Identity();
};

struct LidarDetectorConfig {
  // BEV grid-hash clustering: occupied cells of size cluster_eps are joined
  // over the 8-neighborhood, so chains can reach at most 2*sqrt(2)*eps.
  double cluster_eps = 1.0;
  int min_points = 8;
  double ground_margin = 0.15;
  double score_norm = 50.0;
  // Box completion priors: a cluster whose principal extent is vehicle-like
  // is grown away from the sensor to these extents (near surface stays put).
  double prior_length = 4.0;
  double prior_width = 1.8;
  double side_view_extent = 3.0;   // principal extent that reads as a side view
  double face_view_extent = 1.2;   // principal extent that reads as an end view
  double max_growable_extent = 6.0;
  double min_dim = 0.4;
  double min_height = 0.8;
};

struct Camera2dNoiseConfig {
  double sigma_px = 4.0;
  double p_fn = 0.05;
  double lambda_fp = 0.1;
};

struct Camera3dNoiseConfig {
  double depth_sigma_scale = 0.05;  // sigma_depth = scale * range
  double lateral_sigma = 0.1;
  double vertical_sigma = 0.05;
  double dim_sigma = 0.05;
  double yaw_sigma = 0.05;
  double p_fn = 0.05;
  double lambda_fp = 0.1;
  double fp_range_min = 5.0;
  double fp_range_max = 60.0;
};

// Clusters the sweep after ground removal and fits oriented boxes.
// Deterministic given the sweep. sensor_height_est is the detector's belief
// about the sensor's height over ground (victim uses the mount constant, the
// attacker uses its own monitor estimate).
std::vector<BoxDetection> detect_lidar(const Sweep& sweep, double sensor_height_est,
                                       const LidarDetectorConfig& cfg);

// Jittered ground-truth 2D boxes plus seeded FN/FP mechanics.
std::vector<BoxDetection> detect_camera_2d(const std::vector<CameraTruthBox>& truth,
                                           const CameraModel& camera,
                                           const Camera2dNoiseConfig& cfg, Rng& rng);

// Ground-truth 3D boxes with range-proportional depth noise, lateral noise,
// and seeded FN/FP mechanics; only objects inside the camera fov are seen.
std::vector<BoxDetection> detect_camera_mono3d(const std::vector<GroundTruthObject>& truth,
                                               const CameraModel& camera,
                                               const Camera3dNoiseConfig& cfg, Rng& rng);

// Pinhole projection of an ego-frame point; nullopt behind the image plane.
std::optional<std::array<double, 2>> project_point(const CameraModel& camera, const Vec3& p);

// Axis-aligned pixel rectangle covering the projected box corners, clipped to
// the image; nullopt when fully behind the camera or off-image.
std::optional<PixelBox> project_box(const CameraModel& camera, const OrientedBox& box);

double pixel_box_iou(const PixelBox& a, const PixelBox& b);

}  // namespace avsec
