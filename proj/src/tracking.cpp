#include "avsec/tracking.hpp"

#include <algorithm>
#include <cmath>

#include "avsec/assignment.hpp"

namespace avsec {

namespace {

// Oriented boxes are invariant under half-turn; snap the innovation to the
// nearest axis branch after the usual (-pi, pi] wrap.
double wrap_yaw_innovation(double d) {
  d = wrap_pi(d);
  if (d > kPi / 2.0) d -= kPi;
  if (d < -kPi / 2.0) d += kPi;
  return d;
}

void symmetrize(StateCov& P) { P = ((P + P.transpose()) * 0.5).eval(); }

Track spawn_track(const BoxDetection& det, const FusionConfig& cfg, TrackPipeline pipeline,
                  int id) {
  Track t;
  t.id = id;
  t.pipeline = pipeline;
  t.x.setZero();
  t.x(0) = det.box.center.x;
  t.x(1) = det.box.center.y;
  t.x(2) = det.box.center.z;
  t.x(6) = det.box.length;
  t.x(7) = det.box.width;
  t.x(8) = det.box.height;
  t.x(9) = det.box.yaw;
  t.P.setZero();
  for (int i = 0; i < 3; ++i) t.P(i, i) = cfg.p0_pos * cfg.p0_pos;
  for (int i = 3; i < 6; ++i) t.P(i, i) = cfg.p0_vel * cfg.p0_vel;
  for (int i = 6; i < 9; ++i) t.P(i, i) = cfg.p0_dim * cfg.p0_dim;
  t.P(9, 9) = cfg.p0_yaw * cfg.p0_yaw;
  if (det.has_position_cov) t.P.topLeftCorner<3, 3>() = det.position_cov;
  if (pipeline == TrackPipeline::kCamera3d) {
    t.hits_camera = 1;
  } else {
    t.hits_lidar = 1;
  }
  return t;
}

Eigen::Matrix<double, 7, 7> measurement_cov(const BoxDetection& det, const FusionConfig& cfg) {
  Eigen::Matrix<double, 7, 7> R = Eigen::Matrix<double, 7, 7>::Zero();
  if (det.source == DetectionSource::kLidar) {
    for (int i = 0; i < 3; ++i) R(i, i) = cfg.r_lidar_pos * cfg.r_lidar_pos;
    for (int i = 3; i < 6; ++i) R(i, i) = cfg.r_lidar_dim * cfg.r_lidar_dim;
    R(6, 6) = cfg.r_lidar_yaw * cfg.r_lidar_yaw;
  } else {
    if (det.has_position_cov) {
      R.topLeftCorner<3, 3>() = det.position_cov;
    } else {
      for (int i = 0; i < 3; ++i) R(i, i) = cfg.r_cam3d_pos * cfg.r_cam3d_pos;
    }
    for (int i = 3; i < 6; ++i) R(i, i) = cfg.r_cam3d_dim * cfg.r_cam3d_dim;
    R(6, 6) = cfg.r_cam3d_yaw * cfg.r_cam3d_yaw;
  }
  return R;
}

}  // namespace

void kf_predict(Track& track, double dt, const FusionConfig& cfg) {
  StateCov F = StateCov::Identity();
  F(0, 3) = dt;
  F(1, 4) = dt;
  F(2, 5) = dt;
  track.x = F * track.x;
  StateCov Q = StateCov::Zero();
  for (int i = 0; i < 3; ++i) Q(i, i) = cfg.q_pos * cfg.q_pos;
  for (int i = 3; i < 6; ++i) Q(i, i) = cfg.q_vel * cfg.q_vel;
  for (int i = 6; i < 10; ++i) Q(i, i) = cfg.q_box * cfg.q_box;
  track.P = F * track.P * F.transpose() + Q;
  symmetrize(track.P);
}

void kf_update_box(Track& track, const OrientedBox& z, const Eigen::Matrix<double, 7, 7>& R) {
  Eigen::LLT<Eigen::Matrix<double, 7, 7>> r_chol(R);
  if (r_chol.info() != Eigen::Success) throw ConfigError("measurement covariance not PD");

  Eigen::Matrix<double, 7, 10> H = Eigen::Matrix<double, 7, 10>::Zero();
  H(0, 0) = H(1, 1) = H(2, 2) = 1.0;
  H(3, 6) = H(4, 7) = H(5, 8) = H(6, 9) = 1.0;

  Eigen::Matrix<double, 7, 1> y;
  y << z.center.x - track.x(0), z.center.y - track.x(1), z.center.z - track.x(2),
      z.length - track.x(6), z.width - track.x(7), z.height - track.x(8),
      wrap_yaw_innovation(z.yaw - track.x(9));

  const Eigen::Matrix<double, 7, 7> S = H * track.P * H.transpose() + R;
  const Eigen::Matrix<double, 10, 7> K = track.P * H.transpose() * S.ldlt().solve(
      Eigen::Matrix<double, 7, 7>::Identity());
  track.x += K * y;
  track.x(9) = wrap_pi(track.x(9));
  track.P = (StateCov::Identity() - K * H) * track.P;
  symmetrize(track.P);
}

void kf_update_pixel(Track& track, double u, double v, const CameraModel& camera,
                     double sigma_px) {
  const double qx = track.x(0) - camera.mount.x;
  const double qy = track.x(1) - camera.mount.y;
  const double qz = track.x(2) - camera.mount.z;
  if (qx <= 0.1) return;
  const double cx = camera.image_width / 2.0;
  const double cy = camera.image_height / 2.0;
  const double f = camera.focal_px;

  const double pu = cx - f * qy / qx;
  const double pv = cy - f * qz / qx;

  Eigen::Matrix<double, 2, 10> H = Eigen::Matrix<double, 2, 10>::Zero();
  H(0, 0) = f * qy / (qx * qx);
  H(0, 1) = -f / qx;
  H(1, 0) = f * qz / (qx * qx);
  H(1, 2) = -f / qx;

  Eigen::Vector2d y(u - pu, v - pv);
  Eigen::Matrix2d R = Eigen::Matrix2d::Identity() * sigma_px * sigma_px;
  const Eigen::Matrix2d S = H * track.P * H.transpose() + R;
  const Eigen::Matrix<double, 10, 2> K =
      track.P * H.transpose() * S.ldlt().solve(Eigen::Matrix2d::Identity());
  track.x += K * y;
  track.x(9) = wrap_pi(track.x(9));
  track.P = (StateCov::Identity() - K * H) * track.P;
  symmetrize(track.P);
}

void ci_fuse(const Eigen::VectorXd& x1, const Eigen::MatrixXd& P1, const Eigen::VectorXd& x2,
             const Eigen::MatrixXd& P2, double w, Eigen::VectorXd& x_out,
             Eigen::MatrixXd& P_out) {
  if (w < 0.0 || w > 1.0) throw ConfigError("ci weight outside [0,1]");
  const Eigen::MatrixXd I1 = P1.inverse();
  const Eigen::MatrixXd I2 = P2.inverse();
  const Eigen::MatrixXd info = w * I1 + (1.0 - w) * I2;
  P_out = info.inverse();
  x_out = P_out * (w * I1 * x1 + (1.0 - w) * I2 * x2);
}

Tracker::Tracker(const FusionConfig& cfg, double dt, TrackPipeline pipeline)
    : cfg_(cfg), dt_(dt), pipeline_(pipeline) {}

void Tracker::step(const std::vector<BoxDetection>& detections) {
  for (Track& t : tracks_) {
    kf_predict(t, dt_, cfg_);
    ++t.age;
  }

  std::vector<std::vector<double>> cost(tracks_.size(),
                                        std::vector<double>(detections.size(), 0.0));
  for (size_t i = 0; i < tracks_.size(); ++i) {
    for (size_t j = 0; j < detections.size(); ++j) {
      cost[i][j] = std::hypot(tracks_[i].x(0) - detections[j].box.center.x,
                              tracks_[i].x(1) - detections[j].box.center.y);
    }
  }
  const Assignment asn = solve_assignment(cost, cfg_.association_gate);

  std::vector<char> det_used(detections.size(), 0);
  std::vector<char> track_updated(tracks_.size(), 0);
  for (const auto& [ti, dj] : asn.pairs) {
    const BoxDetection& det = detections[dj];
    kf_update_box(tracks_[ti], det.box, measurement_cov(det, cfg_));
    if (pipeline_ == TrackPipeline::kCamera3d) {
      ++tracks_[ti].hits_camera;
    } else {
      ++tracks_[ti].hits_lidar;
    }
    tracks_[ti].frames_since_update = 0;
    track_updated[ti] = 1;
    det_used[dj] = 1;
  }
  for (size_t i = 0; i < tracks_.size(); ++i) {
    if (!track_updated[i]) ++tracks_[i].frames_since_update;
  }
  for (size_t j = 0; j < detections.size(); ++j) {
    if (!det_used[j]) tracks_.push_back(spawn_track(detections[j], cfg_, pipeline_, next_id_++));
  }

  for (Track& t : tracks_) {
    if (t.status == TrackStatus::kTentative &&
        t.hits_lidar + t.hits_camera >= cfg_.confirm_hits) {
      t.status = TrackStatus::kConfirmed;
    }
  }
  tracks_.erase(std::remove_if(tracks_.begin(), tracks_.end(),
                               [this](const Track& t) {
                                 return t.frames_since_update >= cfg_.delete_misses;
                               }),
                tracks_.end());
}

FusedOutput fuse_t2t(const std::vector<Track>& lidar_tracks,
                     const std::vector<Track>& camera_tracks, const CameraModel& camera,
                     const FusionConfig& cfg) {
  std::vector<const Track*> lid;
  std::vector<const Track*> cam;
  for (const Track& t : lidar_tracks) {
    if (t.status == TrackStatus::kConfirmed) lid.push_back(&t);
  }
  for (const Track& t : camera_tracks) {
    if (t.status == TrackStatus::kConfirmed) cam.push_back(&t);
  }

  std::vector<std::vector<double>> cost(lid.size(), std::vector<double>(cam.size(), 0.0));
  for (size_t i = 0; i < lid.size(); ++i) {
    for (size_t j = 0; j < cam.size(); ++j) {
      cost[i][j] = std::hypot(lid[i]->x(0) - cam[j]->x(0), lid[i]->x(1) - cam[j]->x(1));
    }
  }
  const Assignment asn = solve_assignment(cost, cfg.association_gate);

  FusedOutput out;
  for (const auto& [i, j] : asn.pairs) {
    Eigen::VectorXd x2 = cam[j]->x;
    x2(9) = lid[i]->x(9) + wrap_yaw_innovation(x2(9) - lid[i]->x(9));
    Eigen::VectorXd xf;
    Eigen::MatrixXd Pf;
    ci_fuse(lid[i]->x, lid[i]->P, x2, cam[j]->P, cfg.ci_weight, xf, Pf);
    Track fused = *lid[i];
    fused.pipeline = TrackPipeline::kFused;
    fused.x = xf;
    fused.x(9) = wrap_pi(fused.x(9));
    fused.P = Pf;
    fused.hits_camera += cam[j]->hits_camera;
    out.output.push_back(fused);
  }
  for (size_t i = 0; i < lid.size(); ++i) {
    if (asn.unmatched_rows.end() ==
        std::find(asn.unmatched_rows.begin(), asn.unmatched_rows.end(), static_cast<int>(i))) {
      continue;
    }
    Track t = *lid[i];
    if (camera.in_fov(t.position())) {
      t.suppressed = true;
      out.suppressed.push_back(t);
    } else {
      out.output.push_back(t);
    }
  }
  // The lidar sweeps 360 degrees, so an unmatched camera-pipeline track always
  // sits inside the other sensor's coverage.
  for (size_t j = 0; j < cam.size(); ++j) {
    if (asn.unmatched_cols.end() ==
        std::find(asn.unmatched_cols.begin(), asn.unmatched_cols.end(), static_cast<int>(j))) {
      continue;
    }
    Track t = *cam[j];
    t.suppressed = true;
    out.suppressed.push_back(t);
  }
  return out;
}

VictimAv::VictimAv(AvKind kind, const FusionConfig& cfg, const CameraModel& camera, double dt)
    : kind_(kind),
      cfg_(cfg),
      camera_(camera),
      dt_(dt),
      lidar_tracker_(cfg, dt, TrackPipeline::kLidar),
      camera_tracker_(cfg, dt, TrackPipeline::kCamera3d) {}

std::vector<Track> VictimAv::step(const std::vector<BoxDetection>& lidar_dets,
                                  const std::vector<BoxDetection>& camera2d_dets,
                                  const std::vector<BoxDetection>& camera3d_dets) {
  last_suppressed_.clear();
  lidar_tracker_.step(lidar_dets);

  if (kind_ == AvKind::kAv2 || kind_ == AvKind::kAv3) {
    std::vector<Track>& tracks = lidar_tracker_.tracks();

    std::vector<std::vector<double>> cost(tracks.size(),
                                          std::vector<double>(camera2d_dets.size(), 0.0));
    const double forbid = cfg_.association_gate_px * 10.0;
    for (size_t i = 0; i < tracks.size(); ++i) {
      const auto uv = project_point(camera_, tracks[i].position());
      for (size_t j = 0; j < camera2d_dets.size(); ++j) {
        if (!uv || !camera2d_dets[j].box2d) {
          cost[i][j] = forbid;
          continue;
        }
        cost[i][j] = std::hypot((*uv)[0] - camera2d_dets[j].box2d->center_u(),
                                (*uv)[1] - camera2d_dets[j].box2d->center_v());
      }
    }
    const Assignment asn = solve_assignment(cost, cfg_.association_gate_px);

    std::vector<char> matched(tracks.size(), 0);
    for (const auto& [ti, dj] : asn.pairs) {
      const PixelBox& b = *camera2d_dets[dj].box2d;
      kf_update_pixel(tracks[ti], b.center_u(), b.center_v(), camera_, cfg_.sigma_px);
      ++tracks[ti].hits_camera;
      tracks[ti].frames_since_update = 0;
      matched[ti] = 1;
    }
    for (Track& t : tracks) {
      if (t.status == TrackStatus::kTentative &&
          t.hits_lidar + t.hits_camera >= cfg_.confirm_hits) {
        t.status = TrackStatus::kConfirmed;
      }
    }

    if (kind_ == AvKind::kAv3) {
      std::vector<int> doomed;
      for (size_t i = 0; i < tracks.size(); ++i) {
        Track& t = tracks[i];
        if (t.status != TrackStatus::kConfirmed) continue;
        if (!camera_.in_fov(t.position())) continue;
        t.asymmetry_window.push_back(matched[i]);
        if (static_cast<int>(t.asymmetry_window.size()) > cfg_.asymmetry_window_len) {
          t.asymmetry_window.erase(t.asymmetry_window.begin());
        }
        if (static_cast<int>(t.asymmetry_window.size()) == cfg_.asymmetry_window_len) {
          int hits = 0;
          for (char c : t.asymmetry_window) hits += c;
          const double ratio =
              static_cast<double>(hits) / static_cast<double>(cfg_.asymmetry_window_len);
          if (ratio < cfg_.asymmetry_min_camera_ratio) doomed.push_back(static_cast<int>(i));
        }
      }
      for (auto it = doomed.rbegin(); it != doomed.rend(); ++it) {
        tracks.erase(tracks.begin() + *it);
      }
    }
  }

  if (kind_ == AvKind::kAv4) {
    camera_tracker_.step(camera3d_dets);
    FusedOutput fused = fuse_t2t(lidar_tracker_.tracks(), camera_tracker_.tracks(), camera_, cfg_);
    last_suppressed_ = std::move(fused.suppressed);
    return fused.output;
  }

  std::vector<Track> out;
  for (const Track& t : lidar_tracker_.tracks()) {
    if (t.status == TrackStatus::kConfirmed) out.push_back(t);
  }
  return out;
}

const char* av_name(AvKind kind) {
  switch (kind) {
    case AvKind::kAv1: return "av1";
    case AvKind::kAv2: return "av2";
    case AvKind::kAv3: return "av3";
    case AvKind::kAv4: return "av4";
  }
  return "av?";
}

}  // namespace avsec
