#pragma once

#include <Eigen/Dense>
#include <deque>
#include <optional>
#include <string>
#include <vector>

#include "avsec/datagram.hpp"
#include "avsec/geometry.hpp"
#include "avsec/perception.hpp"
#include "avsec/scene.hpp"

namespace avsec {

enum class AttackKind { kNone, kX1, kX3, kX4, kX6, kX7 };

const char* attack_name(AttackKind kind);
std::optional<AttackKind> attack_from_name(const std::string& name);

struct AttackerConfig {
  // schedule (x1, x7)
  double stable_duration = 2.5;   // seconds holding the entry pose
  double attack_duration = 4.5;   // seconds of jerk-limited approach
  double rho_start = 15.0;        // meters (x1 entry range)
  double rho_end = 1.0;           // meters
  double theta_start = 0.0;       // radians, sensor frame
  double theta_end = 0.0;
  // replay (x3, x4)
  int buffer_capacity = 40;       // sweeps
  int trigger_frame = 40;
  int smoothing_repeats = 5;      // per-endpoint repeats for x4
  // target selection
  int min_track_age = 4;
  double bearing_gate = deg2rad(15.0);
  double range_gate_min = 5.0;
  double range_gate_max = 40.0;
  double lateral_vel_min = -1.0;
  double lateral_vel_max = 1.0;
  double forward_vel_min = -2.0;
  double forward_vel_max = 5.0;
  // execution
  double trace_density = 0.05;    // radians between synthetic trace rays
  double trace_length = 4.0;      // phantom car dims, meters
  double trace_width = 2.0;
  double trace_height = 1.5;
  double box_inflation = 1.2;     // mask box scale for x6/x7
  int min_trace_for_fit = 16;     // below this, nearest-trace-point inpainting
  int tps_max_points = 200;       // trace decimation cap for the spline fit
  double tps_ridge = 1e-8;
  int knn_neighbors = 5;          // background inpainting context size
  double min_fake_range = 0.3;    // meters, inpainted range floor
  // monitors
  int height_channels = 4;        // lowest channels feeding the height median
  int height_max_samples = 200000;
  double bev_gate = 2.5;          // meters, attacker tracker association gate
  int bev_confirm_hits = 2;
  int bev_delete_misses = 3;
  double bev_q_pos = 0.1;
  double bev_q_vel = 0.5;
  double bev_r_pos = 0.3;
  double bev_p0_pos = 1.0;
  double bev_p0_vel = 3.0;
  LidarDetectorConfig detector;
};

enum class AttackPhase { kWaiting, kStable, kAttacking, kExhausted };

const char* phase_name(AttackPhase phase);

// Jerk-limited range schedule: constant jerk integrated per frame so the
// endpoint lands exactly after `steps` recursions.
struct JerkState {
  double jerk = 0.0;
  double accel = 0.0;
  double vel = 0.0;
  double range = 0.0;
};

JerkState jerk_init(double rho_start, double rho_end, double duration);
void jerk_advance(JerkState& state, double dt);

// Attacker-side constant-velocity BEV track over its own lidar detections.
struct BevTrack {
  int id = 0;
  Eigen::Vector4d x = Eigen::Vector4d::Zero();  // px, py, vx, vy
  Eigen::Matrix4d P = Eigen::Matrix4d::Zero();
  int hits = 0;
  int misses = 0;
  int age = 0;
  bool confirmed = false;
  OrientedBox last_box;  // dims, z, yaw from the latest matched detection
};

struct MonitorState {
  std::vector<double> height_samples;
  double height_estimate = 0.0;
  bool has_height = false;
  std::vector<BevTrack> tracks;
  int next_track_id = 1;
};

// Accumulates rho*sin(|phi|) over the lowest channels and keeps the median.
void monitor_height(MonitorState& state, const Sweep& sweep, const SensorModel& sensor,
                    const AttackerConfig& cfg);

// One predict/associate/update cycle of the attacker's own object tracker.
void monitor_objects(MonitorState& state, const Sweep& sweep, double dt,
                     const AttackerConfig& cfg);

// Hard gates (age, bearing, range, relative BEV velocity) then a soft score;
// returns the id of the best confirmed candidate.
std::optional<int> select_target(const MonitorState& state, const AttackerConfig& cfg);

// Grid cells with no return after a 3x3 dilation of the occupancy; pairs are
// (azimuth step, channel).
std::vector<std::pair<int, int>> find_missing_angles(const Sweep& sweep, const SensorModel& sensor);

// Synthetic single-reflection trace of a box surface: rays on a uniform
// angular lattice over the box's angular bounding box, slab-intersected.
std::vector<SphericalPoint> raycast_box_trace(const OrientedBox& box_sensor, double density);

// Indices of sweep points inside the convex hull of the trace's angular
// footprint, wraparound handled about the trace centroid.
std::vector<int> point_mask_from_trace(const Sweep& sweep,
                                       const std::vector<SphericalPoint>& trace);

// Indices of sweep points inside an ego-frame box; sensor_height lifts sweep
// points from the sensor frame to the ego frame.
std::vector<int> point_mask_from_object(const Sweep& sweep, const OrientedBox& box_ego,
                                        double sensor_height);

// Overwrite masked ranges with a thin-plate spline fit of the trace ranges
// over (azimuth, elevation); small traces fall back to nearest-trace-point.
// Fake ranges are clamped to [min_fake_range, ground ray].
void inpaint_as_object(Sweep& sweep, const std::vector<int>& mask,
                       const std::vector<SphericalPoint>& trace, double sensor_height,
                       const AttackerConfig& cfg);

// Overwrite masked ranges with the mean of the k nearest non-masked returns
// in angle space; empty context falls back to the ground ray or max range.
void inpaint_as_background(Sweep& sweep, const std::vector<int>& mask,
                           const SensorModel& sensor, double sensor_height,
                           const AttackerConfig& cfg);

struct AttackerLogRow {
  int frame = 0;
  AttackPhase phase = AttackPhase::kWaiting;
  int target_id = -1;
  double r_k = 0.0;        // scheduled range (x1/x7), 0 otherwise
  int masked_points = 0;
  std::string directive;   // none | establish | move | remove | replay:<k>
};

// Streaming man-in-the-middle attacker. Sees only sweeps and arrival times;
// x1/x6/x7 modify ranges of existing points in place (angles, counts and
// timestamps preserved), x3/x4 substitute buffered sweeps with rewritten
// timestamps.
class Attacker {
 public:
  Attacker(AttackKind kind, const AttackerConfig& cfg, const SensorModel& sensor,
           double frame_rate);

  // Processes the next clean sweep (arrival time t0 = sweep start, seconds)
  // and returns what the victim receives.
  Sweep step(const Sweep& clean, double t0);

  const std::vector<AttackerLogRow>& log() const { return log_; }
  const MonitorState& monitor() const { return monitor_; }
  AttackPhase phase() const { return phase_; }

 private:
  struct BufferedSweep {
    Sweep sweep;
    double t0 = 0.0;
  };

  Sweep step_x1(const Sweep& clean, AttackerLogRow& row);
  Sweep step_replay(const Sweep& clean, double t0, AttackerLogRow& row);
  Sweep step_x6(const Sweep& clean, AttackerLogRow& row);
  Sweep step_x7(const Sweep& clean, AttackerLogRow& row);
  bool refresh_target(const Sweep& clean, AttackerLogRow& row);
  void advance_schedule();

  AttackKind kind_;
  AttackerConfig cfg_;
  SensorModel sensor_;
  double dt_;
  int stable_frames_;
  int attack_frames_;
  int frame_ = 0;
  AttackPhase phase_ = AttackPhase::kWaiting;
  int frames_in_phase_ = 0;
  JerkState jerk_;
  double rho_origin_ = 0.0;
  MonitorState monitor_;
  std::optional<int> target_id_;
  Eigen::Vector4d target_state_ = Eigen::Vector4d::Zero();
  OrientedBox target_box_;
  std::deque<BufferedSweep> ring_;
  std::optional<BufferedSweep> trigger_sweep_;
  std::vector<AttackerLogRow> log_;
};

std::string attacker_log_csv(const std::vector<AttackerLogRow>& rows);

}  // namespace avsec
