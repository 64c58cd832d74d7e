#include "avsec/attacker.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "avsec/assignment.hpp"

namespace avsec {

const char* attack_name(AttackKind kind) {
  switch (kind) {
    case AttackKind::kNone: return "baseline";
    case AttackKind::kX1: return "x1";
    case AttackKind::kX3: return "x3";
    case AttackKind::kX4: return "x4";
    case AttackKind::kX6: return "x6";
    case AttackKind::kX7: return "x7";
  }
  return "baseline";
}

std::optional<AttackKind> attack_from_name(const std::string& name) {
  if (name == "baseline" || name == "none") return AttackKind::kNone;
  if (name == "x1") return AttackKind::kX1;
  if (name == "x3") return AttackKind::kX3;
  if (name == "x4") return AttackKind::kX4;
  if (name == "x6") return AttackKind::kX6;
  if (name == "x7") return AttackKind::kX7;
  return std::nullopt;
}

const char* phase_name(AttackPhase phase) {
  switch (phase) {
    case AttackPhase::kWaiting: return "waiting";
    case AttackPhase::kStable: return "stable";
    case AttackPhase::kAttacking: return "attacking";
    case AttackPhase::kExhausted: return "exhausted";
  }
  return "waiting";
}

JerkState jerk_init(double rho_start, double rho_end, double duration) {
  JerkState s;
  s.jerk = 6.0 * (rho_end - rho_start) / (duration * duration * duration);
  s.range = rho_start;
  return s;
}

void jerk_advance(JerkState& s, double dt) {
  const double a_prev = s.accel;
  const double v_prev = s.vel;
  s.accel = a_prev + s.jerk * dt;
  const double a_mid = 0.5 * (s.accel + a_prev);
  s.vel = v_prev + a_mid * dt + 0.5 * s.jerk * dt * dt;
  const double v_mid = 0.5 * (s.vel + v_prev);
  s.range = s.range + v_mid * dt + 0.5 * a_mid * dt * dt + s.jerk * dt * dt * dt / 6.0;
}

void monitor_height(MonitorState& state, const Sweep& sweep, const SensorModel& sensor,
                    const AttackerConfig& cfg) {
  if (sensor.elevation_angles.empty() || sensor.elevation_angles.front() >= 0.0) return;
  const size_t cap = static_cast<size_t>(cfg.height_max_samples);
  const bool was_full = state.height_samples.size() >= cap;
  if (!was_full) {
    const int low = std::min(cfg.height_channels, sensor.channels);
    for (const SphericalPoint& p : sweep.points) {
      if (p.elevation >= 0.0) continue;
      if (nearest_channel(sensor, p.elevation) >= low) continue;
      state.height_samples.push_back(p.range * std::sin(-p.elevation));
      if (state.height_samples.size() >= cap) break;
    }
  }
  if (state.height_samples.empty() || was_full) return;
  std::vector<double> scratch = state.height_samples;
  const size_t mid = scratch.size() / 2;
  std::nth_element(scratch.begin(), scratch.begin() + mid, scratch.end());
  state.height_estimate = scratch[mid];
  state.has_height = true;
}

void monitor_objects(MonitorState& state, const Sweep& sweep, double dt,
                     const AttackerConfig& cfg) {
  if (!state.has_height) return;
  const std::vector<BoxDetection> dets =
      detect_lidar(sweep, state.height_estimate, cfg.detector);

  Eigen::Matrix4d F = Eigen::Matrix4d::Identity();
  F(0, 2) = dt;
  F(1, 3) = dt;
  Eigen::Matrix4d Q = Eigen::Matrix4d::Zero();
  Q(0, 0) = Q(1, 1) = cfg.bev_q_pos * cfg.bev_q_pos;
  Q(2, 2) = Q(3, 3) = cfg.bev_q_vel * cfg.bev_q_vel;
  for (BevTrack& trk : state.tracks) {
    trk.x = F * trk.x;
    trk.P = F * trk.P * F.transpose() + Q;
    ++trk.age;
  }

  std::vector<std::vector<double>> cost(state.tracks.size(),
                                        std::vector<double>(dets.size(), 0.0));
  for (size_t i = 0; i < state.tracks.size(); ++i) {
    for (size_t j = 0; j < dets.size(); ++j) {
      cost[i][j] = std::hypot(state.tracks[i].x(0) - dets[j].box.center.x,
                              state.tracks[i].x(1) - dets[j].box.center.y);
    }
  }
  const Assignment asn = state.tracks.empty() || dets.empty()
                             ? Assignment{}
                             : solve_assignment(cost, cfg.bev_gate);

  std::vector<char> det_used(dets.size(), 0);
  std::vector<char> trk_hit(state.tracks.size(), 0);
  const double r2 = cfg.bev_r_pos * cfg.bev_r_pos;
  for (const auto& [i, j] : asn.pairs) {
    BevTrack& trk = state.tracks[i];
    Eigen::Matrix<double, 2, 4> H = Eigen::Matrix<double, 2, 4>::Zero();
    H(0, 0) = H(1, 1) = 1.0;
    Eigen::Vector2d z(dets[j].box.center.x, dets[j].box.center.y);
    const Eigen::Vector2d y = z - H * trk.x;
    const Eigen::Matrix2d S = H * trk.P * H.transpose() + r2 * Eigen::Matrix2d::Identity();
    const Eigen::Matrix<double, 4, 2> K = trk.P * H.transpose() * S.inverse();
    trk.x += K * y;
    trk.P = (Eigen::Matrix4d::Identity() - K * H) * trk.P;
    trk.P = 0.5 * (trk.P + trk.P.transpose()).eval();
    ++trk.hits;
    trk.misses = 0;
    trk.last_box = dets[j].box;
    if (trk.hits >= cfg.bev_confirm_hits) trk.confirmed = true;
    det_used[j] = 1;
    trk_hit[i] = 1;
  }
  for (size_t i = 0; i < state.tracks.size(); ++i) {
    if (!trk_hit[i]) ++state.tracks[i].misses;
  }
  state.tracks.erase(std::remove_if(state.tracks.begin(), state.tracks.end(),
                                    [&](const BevTrack& t) {
                                      return t.misses >= cfg.bev_delete_misses;
                                    }),
                     state.tracks.end());
  for (size_t j = 0; j < dets.size(); ++j) {
    if (det_used[j]) continue;
    BevTrack trk;
    trk.id = state.next_track_id++;
    trk.x << dets[j].box.center.x, dets[j].box.center.y, 0.0, 0.0;
    trk.P = Eigen::Matrix4d::Zero();
    trk.P(0, 0) = trk.P(1, 1) = cfg.bev_p0_pos * cfg.bev_p0_pos;
    trk.P(2, 2) = trk.P(3, 3) = cfg.bev_p0_vel * cfg.bev_p0_vel;
    trk.hits = 1;
    trk.age = 1;
    trk.last_box = dets[j].box;
    state.tracks.push_back(std::move(trk));
  }
}

namespace {

double sigmoid(double v) { return 1.0 / (1.0 + std::exp(-v)); }

}  // namespace

std::optional<int> select_target(const MonitorState& state, const AttackerConfig& cfg) {
  struct Candidate {
    int id;
    double bearing_abs;
    double range_off;
    double lat_abs;
  };
  std::vector<Candidate> cands;
  for (const BevTrack& trk : state.tracks) {
    if (!trk.confirmed || trk.age < cfg.min_track_age) continue;
    const double bearing = std::atan2(trk.x(1), trk.x(0));
    const double range = std::hypot(trk.x(0), trk.x(1));
    if (std::abs(bearing) > cfg.bearing_gate) continue;
    if (range < cfg.range_gate_min || range > cfg.range_gate_max) continue;
    if (trk.x(3) < cfg.lateral_vel_min || trk.x(3) > cfg.lateral_vel_max) continue;
    if (trk.x(2) < cfg.forward_vel_min || trk.x(2) > cfg.forward_vel_max) continue;
    const double mid = 0.5 * (cfg.range_gate_min + cfg.range_gate_max);
    cands.push_back({trk.id, std::abs(bearing), std::abs(range - mid), std::abs(trk.x(3))});
  }
  if (cands.empty()) return std::nullopt;

  auto normalized = [&](auto get) {
    double lo = 1e300, hi = -1e300;
    for (const Candidate& c : cands) {
      lo = std::min(lo, get(c));
      hi = std::max(hi, get(c));
    }
    std::vector<double> out(cands.size(), 0.0);
    if (hi - lo > 1e-12) {
      for (size_t i = 0; i < cands.size(); ++i) out[i] = (get(cands[i]) - lo) / (hi - lo);
    }
    return out;
  };
  const std::vector<double> nb = normalized([](const Candidate& c) { return c.bearing_abs; });
  const std::vector<double> nr = normalized([](const Candidate& c) { return c.range_off; });
  const std::vector<double> nl = normalized([](const Candidate& c) { return c.lat_abs; });

  int best = -1;
  double best_score = 1e300;
  for (size_t i = 0; i < cands.size(); ++i) {
    const double score = sigmoid(nb[i]) * sigmoid(nr[i]) * sigmoid(nl[i]);
    if (score < best_score - 1e-15 ||
        (std::abs(score - best_score) <= 1e-15 && (best < 0 || cands[i].id < best))) {
      best_score = score;
      best = cands[i].id;
    }
  }
  if (best < 0) return std::nullopt;
  return best;
}

std::vector<std::pair<int, int>> find_missing_angles(const Sweep& sweep,
                                                     const SensorModel& sensor) {
  const int n = sensor.azimuth_steps;
  const int m = sensor.channels;
  std::vector<uint8_t> occupied(static_cast<size_t>(n) * m, 0);
  for (const SphericalPoint& p : sweep.points) {
    const int i = nearest_azimuth_step(sensor, p.azimuth);
    const int j = nearest_channel(sensor, p.elevation);
    occupied[static_cast<size_t>(i) * m + j] = 1;
  }
  std::vector<uint8_t> dilated(occupied.size(), 0);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < m; ++j) {
      if (!occupied[static_cast<size_t>(i) * m + j]) continue;
      for (int di = -1; di <= 1; ++di) {
        const int ii = (i + di + n) % n;
        for (int dj = -1; dj <= 1; ++dj) {
          const int jj = j + dj;
          if (jj < 0 || jj >= m) continue;
          dilated[static_cast<size_t>(ii) * m + jj] = 1;
        }
      }
    }
  }
  std::vector<std::pair<int, int>> missing;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < m; ++j) {
      if (!dilated[static_cast<size_t>(i) * m + j]) missing.emplace_back(i, j);
    }
  }
  return missing;
}

std::vector<SphericalPoint> raycast_box_trace(const OrientedBox& box_sensor, double density) {
  std::vector<SphericalPoint> trace;
  if (box_sensor.contains(Vec3{0.0, 0.0, 0.0})) return trace;
  const double theta_c = std::atan2(box_sensor.center.y, box_sensor.center.x);
  double az_lo = 1e300, az_hi = -1e300, el_lo = 1e300, el_hi = -1e300;
  for (const Vec3& c : box_sensor.corners()) {
    const double horiz = std::hypot(c.x, c.y);
    if (horiz < 1e-9) return trace;  // corner above or below the sensor
    az_lo = std::min(az_lo, wrap_pi(std::atan2(c.y, c.x) - theta_c));
    az_hi = std::max(az_hi, wrap_pi(std::atan2(c.y, c.x) - theta_c));
    el_lo = std::min(el_lo, std::atan2(c.z, horiz));
    el_hi = std::max(el_hi, std::atan2(c.z, horiz));
  }
  const Vec3 origin{0.0, 0.0, 0.0};
  for (double a = az_lo; a <= az_hi + 1e-12; a += density) {
    const double az = theta_c + a;
    for (double e = el_lo; e <= el_hi + 1e-12; e += density) {
      const Vec3 dir{std::cos(e) * std::cos(az), std::cos(e) * std::sin(az), std::sin(e)};
      const auto hit = ray_box_distance(origin, dir, box_sensor);
      if (!hit) continue;
      SphericalPoint p;
      p.range = *hit;
      p.azimuth = wrap_two_pi(az);
      p.elevation = e;
      trace.push_back(p);
    }
  }
  return trace;
}

namespace {

double circular_mean_azimuth(const std::vector<SphericalPoint>& pts) {
  double sx = 0.0, sy = 0.0;
  for (const SphericalPoint& p : pts) {
    sx += std::cos(p.azimuth);
    sy += std::sin(p.azimuth);
  }
  return std::atan2(sy, sx);
}

double cross2(const std::array<double, 2>& o, const std::array<double, 2>& a,
              const std::array<double, 2>& b) {
  return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0]);
}

// Monotone chain; returns CCW hull including collinear-free vertices.
std::vector<std::array<double, 2>> convex_hull(std::vector<std::array<double, 2>> pts) {
  std::sort(pts.begin(), pts.end());
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  const size_t n = pts.size();
  if (n < 3) return pts;
  std::vector<std::array<double, 2>> hull(2 * n);
  size_t k = 0;
  for (size_t i = 0; i < n; ++i) {
    while (k >= 2 && cross2(hull[k - 2], hull[k - 1], pts[i]) <= 0.0) --k;
    hull[k++] = pts[i];
  }
  const size_t lower = k + 1;
  for (size_t i = n - 1; i-- > 0;) {
    while (k >= lower && cross2(hull[k - 2], hull[k - 1], pts[i]) <= 0.0) --k;
    hull[k++] = pts[i];
  }
  hull.resize(k - 1);
  return hull;
}

bool inside_convex(const std::vector<std::array<double, 2>>& hull,
                   const std::array<double, 2>& p) {
  const size_t n = hull.size();
  if (n < 3) return false;
  for (size_t i = 0; i < n; ++i) {
    if (cross2(hull[i], hull[(i + 1) % n], p) < -1e-12) return false;
  }
  return true;
}

}  // namespace

std::vector<int> point_mask_from_trace(const Sweep& sweep,
                                       const std::vector<SphericalPoint>& trace) {
  std::vector<int> mask;
  if (trace.empty()) return mask;
  const double ref = circular_mean_azimuth(trace);
  std::vector<std::array<double, 2>> tpts;
  tpts.reserve(trace.size());
  double az_lo = 1e300, az_hi = -1e300, el_lo = 1e300, el_hi = -1e300;
  for (const SphericalPoint& p : trace) {
    const double u = wrap_pi(p.azimuth - ref);
    tpts.push_back({u, p.elevation});
    az_lo = std::min(az_lo, u);
    az_hi = std::max(az_hi, u);
    el_lo = std::min(el_lo, p.elevation);
    el_hi = std::max(el_hi, p.elevation);
  }
  const std::vector<std::array<double, 2>> hull = convex_hull(std::move(tpts));
  if (hull.size() < 3) return mask;
  for (size_t idx = 0; idx < sweep.points.size(); ++idx) {
    const SphericalPoint& p = sweep.points[idx];
    const double u = wrap_pi(p.azimuth - ref);
    if (u < az_lo || u > az_hi || p.elevation < el_lo || p.elevation > el_hi) continue;
    if (inside_convex(hull, {u, p.elevation})) mask.push_back(static_cast<int>(idx));
  }
  return mask;
}

std::vector<int> point_mask_from_object(const Sweep& sweep, const OrientedBox& box_ego,
                                        double sensor_height) {
  std::vector<int> mask;
  for (size_t idx = 0; idx < sweep.points.size(); ++idx) {
    const SphericalPoint& p = sweep.points[idx];
    Vec3 v = spherical_to_cartesian(p.range, p.azimuth, p.elevation);
    v.z += sensor_height;
    if (box_ego.contains(v)) mask.push_back(static_cast<int>(idx));
  }
  return mask;
}

namespace {

double clamp_fake_range(double r, double elevation, double sensor_height, double floor) {
  if (elevation < -1e-9) {
    const double ground = sensor_height / std::sin(-elevation);
    r = std::min(r, ground);
  }
  return std::max(r, floor);
}

double tps_kernel(double r2) {
  if (r2 < 1e-24) return 0.0;
  return 0.5 * r2 * std::log(r2);  // r^2 log r
}

}  // namespace

void inpaint_as_object(Sweep& sweep, const std::vector<int>& mask,
                       const std::vector<SphericalPoint>& trace, double sensor_height,
                       const AttackerConfig& cfg) {
  if (mask.empty() || trace.empty()) return;
  const double ref = circular_mean_azimuth(trace);

  std::vector<std::array<double, 3>> samples;  // u, e, rho
  samples.reserve(trace.size());
  const size_t stride = trace.size() > static_cast<size_t>(cfg.tps_max_points)
                            ? (trace.size() + cfg.tps_max_points - 1) / cfg.tps_max_points
                            : 1;
  for (size_t i = 0; i < trace.size(); i += stride) {
    samples.push_back({wrap_pi(trace[i].azimuth - ref), trace[i].elevation, trace[i].range});
  }

  const int n = static_cast<int>(samples.size());
  const bool use_tps = static_cast<int>(trace.size()) >= cfg.min_trace_for_fit && n >= 4;

  Eigen::VectorXd sol;
  if (use_tps) {
    Eigen::MatrixXd L = Eigen::MatrixXd::Zero(n + 3, n + 3);
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n + 3);
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        const double du = samples[i][0] - samples[j][0];
        const double de = samples[i][1] - samples[j][1];
        L(i, j) = tps_kernel(du * du + de * de);
      }
      L(i, i) += cfg.tps_ridge;
      L(i, n) = L(n, i) = 1.0;
      L(i, n + 1) = L(n + 1, i) = samples[i][0];
      L(i, n + 2) = L(n + 2, i) = samples[i][1];
      rhs(i) = samples[i][2];
    }
    sol = L.fullPivLu().solve(rhs);
  }

  for (int idx : mask) {
    SphericalPoint& p = sweep.points[idx];
    const double u = wrap_pi(p.azimuth - ref);
    double r;
    if (use_tps) {
      r = sol(n) + sol(n + 1) * u + sol(n + 2) * p.elevation;
      for (int i = 0; i < n; ++i) {
        const double du = u - samples[i][0];
        const double de = p.elevation - samples[i][1];
        r += sol(i) * tps_kernel(du * du + de * de);
      }
    } else {
      double best = 1e300;
      r = samples[0][2];
      for (const auto& s : samples) {
        const double du = u - s[0];
        const double de = p.elevation - s[1];
        const double d2 = du * du + de * de;
        if (d2 < best) {
          best = d2;
          r = s[2];
        }
      }
    }
    p.range = clamp_fake_range(r, p.elevation, sensor_height, cfg.min_fake_range);
  }
}

void inpaint_as_background(Sweep& sweep, const std::vector<int>& mask,
                           const SensorModel& sensor, double sensor_height,
                           const AttackerConfig& cfg) {
  if (mask.empty()) return;
  const int n = sensor.azimuth_steps;
  const int m = sensor.channels;
  std::vector<char> masked(sweep.points.size(), 0);
  for (int idx : mask) masked[idx] = 1;

  struct CellPoint {
    float azimuth;
    float elevation;
    float range;
    uint8_t filled;
  };
  std::vector<CellPoint> grid(static_cast<size_t>(n) * m, CellPoint{0, 0, 0, 0});
  for (size_t idx = 0; idx < sweep.points.size(); ++idx) {
    if (masked[idx]) continue;
    const SphericalPoint& p = sweep.points[idx];
    const int i = nearest_azimuth_step(sensor, p.azimuth);
    const int j = nearest_channel(sensor, p.elevation);
    CellPoint& cell = grid[static_cast<size_t>(i) * m + j];
    if (!cell.filled) {
      cell = CellPoint{static_cast<float>(p.azimuth), static_cast<float>(p.elevation),
                       static_cast<float>(p.range), 1};
    }
  }

  const int max_ring = std::min(n / 2, 40);
  std::vector<std::pair<double, double>> found;  // (dist2, range)
  for (int idx : mask) {
    SphericalPoint& p = sweep.points[idx];
    const int ci = nearest_azimuth_step(sensor, p.azimuth);
    const int cj = nearest_channel(sensor, p.elevation);
    found.clear();
    int settled_ring = -1;
    for (int ring = 0; ring <= max_ring; ++ring) {
      if (settled_ring >= 0 && ring > settled_ring + 1) break;
      for (int di = -ring; di <= ring; ++di) {
        for (int dj = -ring; dj <= ring; ++dj) {
          if (std::max(std::abs(di), std::abs(dj)) != ring) continue;
          const int ii = (ci + di + n) % n;
          const int jj = cj + dj;
          if (jj < 0 || jj >= m) continue;
          const CellPoint& cell = grid[static_cast<size_t>(ii) * m + jj];
          if (!cell.filled) continue;
          const double du = wrap_pi(p.azimuth - cell.azimuth);
          const double de = p.elevation - cell.elevation;
          found.emplace_back(du * du + de * de, cell.range);
        }
      }
      if (settled_ring < 0 && static_cast<int>(found.size()) >= cfg.knn_neighbors) {
        settled_ring = ring;
      }
    }
    double r;
    if (found.empty()) {
      r = p.elevation < -1e-9 ? sensor_height / std::sin(-p.elevation) : sensor.max_range;
    } else {
      const size_t k = std::min(found.size(), static_cast<size_t>(cfg.knn_neighbors));
      std::partial_sort(found.begin(), found.begin() + k, found.end());
      double sum = 0.0;
      for (size_t i = 0; i < k; ++i) sum += found[i].second;
      r = sum / static_cast<double>(k);
    }
    p.range = clamp_fake_range(r, p.elevation, sensor_height, cfg.min_fake_range);
  }
}

Attacker::Attacker(AttackKind kind, const AttackerConfig& cfg, const SensorModel& sensor,
                   double frame_rate)
    : kind_(kind),
      cfg_(cfg),
      sensor_(sensor),
      dt_(1.0 / frame_rate),
      stable_frames_(static_cast<int>(std::lround(cfg.stable_duration * frame_rate))),
      attack_frames_(static_cast<int>(std::lround(cfg.attack_duration * frame_rate))) {}

void Attacker::advance_schedule() {
  ++frames_in_phase_;
  if (phase_ == AttackPhase::kStable && frames_in_phase_ >= stable_frames_) {
    phase_ = AttackPhase::kAttacking;
    frames_in_phase_ = 0;
    jerk_ = jerk_init(rho_origin_, cfg_.rho_end, cfg_.attack_duration);
  } else if (phase_ == AttackPhase::kAttacking) {
    if (frames_in_phase_ >= attack_frames_) {
      phase_ = AttackPhase::kExhausted;
      frames_in_phase_ = 0;
    } else {
      jerk_advance(jerk_, dt_);
    }
  }
}

Sweep Attacker::step_x1(const Sweep& clean, AttackerLogRow& row) {
  if (!monitor_.has_height) {
    row.directive = "none";
    return clean;
  }
  if (phase_ == AttackPhase::kWaiting) {
    phase_ = AttackPhase::kStable;
    frames_in_phase_ = 0;
    rho_origin_ = cfg_.rho_start;
    jerk_ = jerk_init(cfg_.rho_start, cfg_.rho_end, cfg_.attack_duration);
  } else {
    advance_schedule();
  }
  row.phase = phase_;
  if (phase_ == AttackPhase::kExhausted) {
    row.directive = "none";
    return clean;
  }
  const double r = phase_ == AttackPhase::kStable ? cfg_.rho_start : jerk_.range;
  const double frac =
      phase_ == AttackPhase::kAttacking && attack_frames_ > 0
          ? static_cast<double>(frames_in_phase_) / static_cast<double>(attack_frames_)
          : 0.0;
  const double theta = cfg_.theta_start + (cfg_.theta_end - cfg_.theta_start) * frac;
  row.r_k = r;

  OrientedBox box;
  box.center = Vec3{r * std::cos(theta), r * std::sin(theta),
                    cfg_.trace_height / 2.0 - monitor_.height_estimate};
  box.length = cfg_.trace_length;
  box.width = cfg_.trace_width;
  box.height = cfg_.trace_height;
  box.yaw = theta;

  const std::vector<SphericalPoint> trace = raycast_box_trace(box, cfg_.trace_density);
  if (trace.size() < 3) {
    row.directive = "none";
    return clean;
  }
  const std::vector<int> mask = point_mask_from_trace(clean, trace);
  if (mask.empty()) {
    row.directive = "none";
    return clean;
  }
  Sweep attacked = clean;
  inpaint_as_object(attacked, mask, trace, monitor_.height_estimate, cfg_);
  row.masked_points = static_cast<int>(mask.size());
  if (phase_ == AttackPhase::kStable && frames_in_phase_ == 0) {
    const auto missing = find_missing_angles(clean, sensor_);
    row.directive = "establish missing=" + std::to_string(missing.size());
  } else {
    row.directive = phase_ == AttackPhase::kStable ? "establish" : "move";
  }
  return attacked;
}

Sweep Attacker::step_replay(const Sweep& clean, double t0, AttackerLogRow& row) {
  if (frame_ < cfg_.trigger_frame) {
    ring_.push_back(BufferedSweep{clean, t0});
    if (static_cast<int>(ring_.size()) > cfg_.buffer_capacity) ring_.pop_front();
    row.directive = "none";
    return clean;
  }
  if (ring_.empty()) {
    row.directive = "none";
    return clean;
  }
  phase_ = AttackPhase::kAttacking;
  row.phase = phase_;

  const BufferedSweep* src = nullptr;
  if (kind_ == AttackKind::kX3) {
    const int idx = (frame_ - cfg_.trigger_frame) % static_cast<int>(ring_.size());
    src = &ring_[idx];
  } else {
    if (frame_ == cfg_.trigger_frame) trigger_sweep_ = BufferedSweep{clean, t0};
    const int i = frame_ - cfg_.trigger_frame;
    const int ms = cfg_.smoothing_repeats;
    const int s = static_cast<int>(ring_.size());
    if (i < ms && trigger_sweep_) {
      src = &*trigger_sweep_;
    } else {
      const int period = 2 * s + 2 * (ms - 1);
      const int j = (i - ms) % std::max(period, 1);
      int pos;
      if (j < s) {
        pos = s - 1 - j;
      } else if (j < s + ms - 1) {
        pos = 0;
      } else if (j < 2 * s + ms - 2) {
        pos = j - (s + ms - 1) + 1;
      } else {
        pos = s - 1;
      }
      src = &ring_[pos];
    }
  }

  Sweep out = src->sweep;
  const double delta = t0 - src->t0;
  for (SphericalPoint& p : out.points) p.t += delta;
  out.index = clean.index;
  row.directive = "replay:" + std::to_string(src->sweep.index);
  return out;
}

bool Attacker::refresh_target(const Sweep& clean, AttackerLogRow& row) {
  monitor_objects(monitor_, clean, dt_, cfg_);
  if (!target_id_) {
    const std::optional<int> sel = select_target(monitor_, cfg_);
    if (sel) {
      target_id_ = sel;
      for (const BevTrack& trk : monitor_.tracks) {
        if (trk.id == *sel) {
          target_state_ = trk.x;
          target_box_ = trk.last_box;
          break;
        }
      }
      row.target_id = *sel;
      row.directive = "select";
    } else {
      row.directive = "none";
    }
    return false;  // commence next frame
  }
  row.target_id = *target_id_;
  const BevTrack* live = nullptr;
  for (const BevTrack& trk : monitor_.tracks) {
    if (trk.id == *target_id_) {
      live = &trk;
      break;
    }
  }
  if (live) {
    target_state_ = live->x;
    target_box_ = live->last_box;
  } else {
    target_state_(0) += target_state_(2) * dt_;
    target_state_(1) += target_state_(3) * dt_;
  }
  return true;
}

Sweep Attacker::step_x6(const Sweep& clean, AttackerLogRow& row) {
  if (!monitor_.has_height) {
    row.directive = "none";
    return clean;
  }
  if (!refresh_target(clean, row)) return clean;
  phase_ = AttackPhase::kAttacking;
  row.phase = phase_;

  OrientedBox box = target_box_;
  box.center.x = target_state_(0);
  box.center.y = target_state_(1);
  box.length *= cfg_.box_inflation;
  box.width *= cfg_.box_inflation;
  box.height *= cfg_.box_inflation;
  const std::vector<int> mask = point_mask_from_object(clean, box, monitor_.height_estimate);
  if (mask.empty()) {
    row.directive = "none";
    return clean;
  }
  Sweep attacked = clean;
  inpaint_as_background(attacked, mask, sensor_, monitor_.height_estimate, cfg_);
  row.masked_points = static_cast<int>(mask.size());
  row.directive = "remove";
  return attacked;
}

Sweep Attacker::step_x7(const Sweep& clean, AttackerLogRow& row) {
  if (!monitor_.has_height) {
    row.directive = "none";
    return clean;
  }
  if (!refresh_target(clean, row)) return clean;
  if (phase_ == AttackPhase::kWaiting) {
    // first frame after target selection; schedule starts now
    phase_ = AttackPhase::kStable;
    frames_in_phase_ = 0;
    rho_origin_ = std::hypot(target_state_(0), target_state_(1));
  } else {
    advance_schedule();
  }
  row.phase = phase_;
  if (phase_ == AttackPhase::kExhausted) {
    row.directive = "none";
    return clean;
  }
  const double r = phase_ == AttackPhase::kStable ? rho_origin_ : jerk_.range;
  row.r_k = r;
  const double rho_target = std::hypot(target_state_(0), target_state_(1));
  const double delta = r - rho_target;

  OrientedBox box = target_box_;
  box.center.x = target_state_(0);
  box.center.y = target_state_(1);
  box.length *= cfg_.box_inflation;
  box.width *= cfg_.box_inflation;
  box.height *= cfg_.box_inflation;
  const std::vector<int> mask = point_mask_from_object(clean, box, monitor_.height_estimate);
  if (mask.empty()) {
    row.directive = "none";
    return clean;
  }
  Sweep attacked = clean;
  for (int idx : mask) {
    SphericalPoint& p = attacked.points[idx];
    p.range = clamp_fake_range(p.range + delta, p.elevation, monitor_.height_estimate,
                               cfg_.min_fake_range);
  }
  row.masked_points = static_cast<int>(mask.size());
  row.directive = phase_ == AttackPhase::kStable ? "establish" : "move";
  return attacked;
}

Sweep Attacker::step(const Sweep& clean, double t0) {
  AttackerLogRow row;
  row.frame = frame_;
  row.phase = phase_;

  Sweep out;
  switch (kind_) {
    case AttackKind::kNone:
      row.directive = "none";
      out = clean;
      break;
    case AttackKind::kX1:
      monitor_height(monitor_, clean, sensor_, cfg_);
      out = step_x1(clean, row);
      break;
    case AttackKind::kX3:
    case AttackKind::kX4:
      out = step_replay(clean, t0, row);
      break;
    case AttackKind::kX6:
      monitor_height(monitor_, clean, sensor_, cfg_);
      out = step_x6(clean, row);
      break;
    case AttackKind::kX7:
      monitor_height(monitor_, clean, sensor_, cfg_);
      out = step_x7(clean, row);
      break;
  }
  row.phase = phase_;
  log_.push_back(std::move(row));
  ++frame_;
  return out;
}

std::string attacker_log_csv(const std::vector<AttackerLogRow>& rows) {
  std::ostringstream os;
  os << "frame,phase,target_id,r_k,masked_points,directive\n";
  os.precision(17);
  for (const AttackerLogRow& row : rows) {
    os << row.frame << ',' << phase_name(row.phase) << ',' << row.target_id << ','
       << row.r_k << ',' << row.masked_points << ',' << row.directive << '\n';
  }
  return os.str();
}

}  // namespace avsec
