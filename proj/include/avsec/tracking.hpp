#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <vector>

#include "avsec/perception.hpp"
#include "avsec/scene.hpp"

namespace avsec {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class AvKind { kAv1 = 1, kAv2 = 2, kAv3 = 3, kAv4 = 4 };

enum class TrackStatus { kTentative, kConfirmed };
enum class TrackPipeline { kLidar, kCamera3d, kFused };

// State layout: [px py pz vx vy vz l w h yaw].
using StateVec = Eigen::Matrix<double, 10, 1>;
using StateCov = Eigen::Matrix<double, 10, 10>;

struct Track {
  int id = 0;
  StateVec x = StateVec::Zero();
  StateCov P = StateCov::Identity();
  TrackStatus status = TrackStatus::kTentative;
  TrackPipeline pipeline = TrackPipeline::kLidar;
  int hits_lidar = 0;
  int hits_camera = 0;
  int age = 0;
  int frames_since_update = 0;
  std::vector<char> asymmetry_window;  // camera-matched flags, newest last
  bool suppressed = false;

  Vec3 position() const { return {x(0), x(1), x(2)}; }
  Vec3 velocity() const { return {x(3), x(4), x(5)}; }
  OrientedBox box() const { return {{x(0), x(1), x(2)}, x(6), x(7), x(8), x(9)}; }
};

struct FusionConfig {
  double association_gate = 2.0;      // meters, BEV
  double association_gate_px = 50.0;  // pixels, projected-center distance
  int confirm_hits = 3;
  int delete_misses = 5;
  double ci_weight = 0.5;
  int asymmetry_window_len = 10;
  double asymmetry_min_camera_ratio = 0.3;
  // Process noise per frame (standard deviations).
  double q_pos = 0.1;
  double q_vel = 0.5;
  double q_box = 0.01;
  // Measurement noise (standard deviations).
  double r_lidar_pos = 0.3;
  double r_lidar_dim = 0.2;
  double r_lidar_yaw = 0.15;
  double r_cam3d_pos = 1.0;  // fallback when a detection carries no covariance
  double r_cam3d_dim = 0.3;
  double r_cam3d_yaw = 0.3;
  double sigma_px = 4.0;
  // Fresh-track covariance (standard deviations).
  double p0_pos = 1.0;
  double p0_vel = 5.0;
  double p0_dim = 0.5;
  double p0_yaw = 0.5;
};

// Constant-velocity prediction; box states persist.
void kf_predict(Track& track, double dt, const FusionConfig& cfg);

// Full-box measurement z = [pos3 dims3 yaw] with covariance R (7x7).
// Yaw innovation wraps to (-pi, pi] and then to the nearest axis branch
// (an oriented box is invariant under half-turn). Throws ConfigError on
// non-positive-definite R.
void kf_update_box(Track& track, const OrientedBox& z, const Eigen::Matrix<double, 7, 7>& R);

// Projected-center pseudo-measurement for 2D camera detections. No-op when
// the track is behind the image plane.
void kf_update_pixel(Track& track, double u, double v, const CameraModel& camera,
                     double sigma_px);

// Covariance intersection in information form; w outside [0,1] -> ConfigError.
void ci_fuse(const Eigen::VectorXd& x1, const Eigen::MatrixXd& P1, const Eigen::VectorXd& x2,
             const Eigen::MatrixXd& P2, double w, Eigen::VectorXd& x_out,
             Eigen::MatrixXd& P_out);

// One constant-velocity multi-object tracker over 3D box detections; the
// primary-hit counter is chosen by `pipeline`.
class Tracker {
 public:
  Tracker(const FusionConfig& cfg, double dt, TrackPipeline pipeline);

  void step(const std::vector<BoxDetection>& detections);

  std::vector<Track>& tracks() { return tracks_; }
  const std::vector<Track>& tracks() const { return tracks_; }

 private:
  FusionConfig cfg_;
  double dt_;
  TrackPipeline pipeline_;
  std::vector<Track> tracks_;
  int next_id_ = 1;
};

// Track-to-track fusion for AV.4. Matched confirmed pairs fuse by covariance
// intersection; unmatched confirmed tracks inside the shared camera fov are
// suppressed (returned with suppressed=true, excluded from the output), ones
// outside it pass through.
struct FusedOutput {
  std::vector<Track> output;
  std::vector<Track> suppressed;
};
FusedOutput fuse_t2t(const std::vector<Track>& lidar_tracks,
                     const std::vector<Track>& camera_tracks, const CameraModel& camera,
                     const FusionConfig& cfg);

// One victim architecture stepped per frame. Detection inputs the instance
// does not use (camera feeds for AV.1, 2d feed for AV.4, ...) are ignored.
class VictimAv {
 public:
  VictimAv(AvKind kind, const FusionConfig& cfg, const CameraModel& camera, double dt);

  std::vector<Track> step(const std::vector<BoxDetection>& lidar_dets,
                          const std::vector<BoxDetection>& camera2d_dets,
                          const std::vector<BoxDetection>& camera3d_dets);

  AvKind kind() const { return kind_; }
  // AV.4 tracks recognized as false this frame (logged, not output).
  const std::vector<Track>& last_suppressed() const { return last_suppressed_; }

 private:
  AvKind kind_;
  FusionConfig cfg_;
  CameraModel camera_;
  double dt_;
  Tracker lidar_tracker_;
  Tracker camera_tracker_;
  std::vector<Track> last_suppressed_;
};

const char* av_name(AvKind kind);

}  // namespace avsec
