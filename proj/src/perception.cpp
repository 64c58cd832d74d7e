#include "avsec/perception.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <unordered_map>

namespace avsec {

namespace {

struct ClusterPoint {
  double x;
  double y;
  double z;
};

int64_t cell_key(int64_t cx, int64_t cy) { return (cx << 32) ^ (cy & 0xFFFFFFFFLL); }

struct UnionFind {
  std::vector<int> parent;

  explicit UnionFind(size_t n) : parent(n) {
    for (size_t i = 0; i < n; ++i) parent[i] = static_cast<int>(i);
  }
  int find(int a) {
    while (parent[a] != a) {
      parent[a] = parent[parent[a]];
      a = parent[a];
    }
    return a;
  }
  void unite(int a, int b) {
    a = find(a);
    b = find(b);
    if (a != b) parent[std::max(a, b)] = std::min(a, b);
  }
};

BoxDetection fit_cluster_box(const std::vector<ClusterPoint>& pts, const LidarDetectorConfig& cfg) {
  const size_t n = pts.size();
  double mx = 0.0, my = 0.0;
  for (const ClusterPoint& p : pts) {
    mx += p.x;
    my += p.y;
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);

  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (const ClusterPoint& p : pts) {
    const double dx = p.x - mx;
    const double dy = p.y - my;
    sxx += dx * dx;
    sxy += dx * dy;
    syy += dy * dy;
  }
  double yaw = 0.5 * std::atan2(2.0 * sxy, sxx - syy);
  double c = std::cos(yaw);
  double s = std::sin(yaw);

  double u_lo = std::numeric_limits<double>::infinity(), u_hi = -u_lo;
  double v_lo = u_lo, v_hi = -u_lo;
  double z_lo = u_lo, z_hi = -u_lo;
  for (const ClusterPoint& p : pts) {
    const double pu = c * p.x + s * p.y;
    const double pv = -s * p.x + c * p.y;
    u_lo = std::min(u_lo, pu);
    u_hi = std::max(u_hi, pu);
    v_lo = std::min(v_lo, pv);
    v_hi = std::max(v_hi, pv);
    z_lo = std::min(z_lo, p.z);
    z_hi = std::max(z_hi, p.z);
  }

  // Principal extent along u by construction; enforce in case of near-ties.
  if (u_hi - u_lo < v_hi - v_lo) {
    yaw = wrap_pi(yaw + kPi / 2.0);
    c = std::cos(yaw);
    s = std::sin(yaw);
    double nu_lo = std::numeric_limits<double>::infinity(), nu_hi = -nu_lo;
    double nv_lo = nu_lo, nv_hi = -nu_lo;
    for (const ClusterPoint& p : pts) {
      const double pu = c * p.x + s * p.y;
      const double pv = -s * p.x + c * p.y;
      nu_lo = std::min(nu_lo, pu);
      nu_hi = std::max(nu_hi, pu);
      nv_lo = std::min(nv_lo, pv);
      nv_hi = std::max(nv_hi, pv);
    }
    u_lo = nu_lo;
    u_hi = nu_hi;
    v_lo = nv_lo;
    v_hi = nv_hi;
  }

  const double principal = u_hi - u_lo;
  // Only the near surface of a vehicle is observed; grow the minor axis away
  // from the sensor to prior extents so the box covers the hidden body.
  if (principal <= cfg.max_growable_extent && principal >= cfg.face_view_extent) {
    const double target = principal >= cfg.side_view_extent ? cfg.prior_width : cfg.prior_length;
    if (v_hi - v_lo < target) {
      const double mean_v = -s * mx + c * my;
      if (mean_v >= 0.0) {
        v_hi = v_lo + target;
      } else {
        v_lo = v_hi - target;
      }
    }
  }

  // Clusters touching the ground cut belong to grounded objects; anchor them.
  if (z_lo < 0.5) z_lo = 0.0;

  const double len_u = std::max(u_hi - u_lo, cfg.min_dim);
  const double len_v = std::max(v_hi - v_lo, cfg.min_dim);

  BoxDetection det;
  det.source = DetectionSource::kLidar;
  det.box.height = std::max(z_hi - z_lo, cfg.min_height);
  det.box.center.z = 0.5 * (z_lo + z_hi);
  const double cu = 0.5 * (u_lo + u_hi);
  const double cvv = 0.5 * (v_lo + v_hi);
  det.box.center.x = c * cu - s * cvv;
  det.box.center.y = s * cu + c * cvv;
  if (len_v > len_u) {
    det.box.length = len_v;
    det.box.width = len_u;
    det.box.yaw = wrap_pi(yaw + kPi / 2.0);
  } else {
    det.box.length = len_u;
    det.box.width = len_v;
    det.box.yaw = yaw;
  }
  det.score = std::min(1.0, static_cast<double>(n) / cfg.score_norm);
  return det;
}

}  // namespace

std::vector<BoxDetection> detect_lidar(const Sweep& sweep, double sensor_height_est,
                                       const LidarDetectorConfig& cfg) {
  std::vector<ClusterPoint> pts;
  pts.reserve(sweep.points.size());
  for (const SphericalPoint& sp : sweep.points) {
    if (sp.elevation < 0.0 &&
        std::abs(sp.range * std::sin(std::abs(sp.elevation)) - sensor_height_est) <=
            cfg.ground_margin) {
      continue;
    }
    const Vec3 c = spherical_to_cartesian(sp);
    pts.push_back({c.x, c.y, c.z + sensor_height_est});
  }
  if (pts.empty()) return {};

  std::unordered_map<int64_t, int> cell_ids;
  std::vector<std::pair<int64_t, int64_t>> cell_coords;
  std::vector<int> point_cell(pts.size());
  for (size_t i = 0; i < pts.size(); ++i) {
    const int64_t cx = static_cast<int64_t>(std::floor(pts[i].x / cfg.cluster_eps));
    const int64_t cy = static_cast<int64_t>(std::floor(pts[i].y / cfg.cluster_eps));
    auto [it, inserted] = cell_ids.try_emplace(cell_key(cx, cy), static_cast<int>(cell_coords.size()));
    if (inserted) cell_coords.emplace_back(cx, cy);
    point_cell[i] = it->second;
  }

  UnionFind uf(cell_coords.size());
  for (size_t ci = 0; ci < cell_coords.size(); ++ci) {
    const auto [cx, cy] = cell_coords[ci];
    for (int dx = -1; dx <= 1; ++dx) {
      for (int dy = -1; dy <= 1; ++dy) {
        if (dx == 0 && dy == 0) continue;
        const auto it = cell_ids.find(cell_key(cx + dx, cy + dy));
        if (it != cell_ids.end()) uf.unite(static_cast<int>(ci), it->second);
      }
    }
  }

  std::unordered_map<int, std::vector<ClusterPoint>> clusters;
  for (size_t i = 0; i < pts.size(); ++i) {
    clusters[uf.find(point_cell[i])].push_back(pts[i]);
  }

  std::vector<int> roots;
  roots.reserve(clusters.size());
  for (const auto& [root, members] : clusters) {
    if (static_cast<int>(members.size()) >= cfg.min_points) roots.push_back(root);
  }
  std::sort(roots.begin(), roots.end());

  std::vector<BoxDetection> out;
  out.reserve(roots.size());
  for (int root : roots) out.push_back(fit_cluster_box(clusters[root], cfg));
  return out;
}

std::vector<BoxDetection> detect_camera_2d(const std::vector<CameraTruthBox>& truth,
                                           const CameraModel& camera,
                                           const Camera2dNoiseConfig& cfg, Rng& rng) {
  const double w = camera.image_width;
  const double h = camera.image_height;
  std::vector<BoxDetection> out;
  for (const CameraTruthBox& t : truth) {
    if (rng.chance(cfg.p_fn)) continue;
    PixelBox b;
    b.u_min = t.u_min + rng.normal(0.0, cfg.sigma_px);
    b.u_max = t.u_max + rng.normal(0.0, cfg.sigma_px);
    b.v_min = t.v_min + rng.normal(0.0, cfg.sigma_px);
    b.v_max = t.v_max + rng.normal(0.0, cfg.sigma_px);
    if (b.u_min > b.u_max) std::swap(b.u_min, b.u_max);
    if (b.v_min > b.v_max) std::swap(b.v_min, b.v_max);
    b.u_min = std::clamp(b.u_min, 0.0, w);
    b.u_max = std::clamp(b.u_max, 0.0, w);
    b.v_min = std::clamp(b.v_min, 0.0, h);
    b.v_max = std::clamp(b.v_max, 0.0, h);
    BoxDetection det;
    det.source = DetectionSource::kCamera2d;
    det.box2d = b;
    out.push_back(det);
  }
  const int spurious = rng.poisson(cfg.lambda_fp);
  for (int i = 0; i < spurious; ++i) {
    const double cu = rng.uniform(0.0, w);
    const double cv = rng.uniform(0.0, h);
    const double bw = rng.uniform(30.0, 200.0);
    const double bh = rng.uniform(20.0, 150.0);
    PixelBox b;
    b.u_min = std::clamp(cu - bw / 2.0, 0.0, w);
    b.u_max = std::clamp(cu + bw / 2.0, 0.0, w);
    b.v_min = std::clamp(cv - bh / 2.0, 0.0, h);
    b.v_max = std::clamp(cv + bh / 2.0, 0.0, h);
    BoxDetection det;
    det.source = DetectionSource::kCamera2d;
    det.box2d = b;
    det.score = 0.5;
    out.push_back(det);
  }
  return out;
}

std::vector<BoxDetection> detect_camera_mono3d(const std::vector<GroundTruthObject>& truth,
                                               const CameraModel& camera,
                                               const Camera3dNoiseConfig& cfg, Rng& rng) {
  std::vector<BoxDetection> out;
  for (const GroundTruthObject& t : truth) {
    if (!camera.in_fov(t.box.center)) continue;
    if (rng.chance(cfg.p_fn)) continue;
    const double range = std::hypot(t.box.center.x, t.box.center.y);
    if (range < 1e-6) continue;
    const double dir_x = t.box.center.x / range;
    const double dir_y = t.box.center.y / range;
    const double nd = rng.normal(0.0, cfg.depth_sigma_scale * range);
    const double nl = rng.normal(0.0, cfg.lateral_sigma);
    const double nz = rng.normal(0.0, cfg.vertical_sigma);

    BoxDetection det;
    det.source = DetectionSource::kCamera3d;
    det.box = t.box;
    det.box.center.x += dir_x * nd - dir_y * nl;
    det.box.center.y += dir_y * nd + dir_x * nl;
    det.box.center.z += nz;
    det.box.length = std::max(0.2, det.box.length + rng.normal(0.0, cfg.dim_sigma));
    det.box.width = std::max(0.2, det.box.width + rng.normal(0.0, cfg.dim_sigma));
    det.box.height = std::max(0.2, det.box.height + rng.normal(0.0, cfg.dim_sigma));
    det.box.yaw = wrap_pi(det.box.yaw + rng.normal(0.0, cfg.yaw_sigma));

    const double sd2 = cfg.depth_sigma_scale * range * cfg.depth_sigma_scale * range;
    const double sl2 = cfg.lateral_sigma * cfg.lateral_sigma;
    Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
    cov(0, 0) = sd2 * dir_x * dir_x + sl2 * dir_y * dir_y;
    cov(0, 1) = (sd2 - sl2) * dir_x * dir_y;
    cov(1, 0) = cov(0, 1);
    cov(1, 1) = sd2 * dir_y * dir_y + sl2 * dir_x * dir_x;
    cov(2, 2) = cfg.vertical_sigma * cfg.vertical_sigma;
    det.position_cov = cov;
    det.has_position_cov = true;
    out.push_back(det);
  }
  const int spurious = rng.poisson(cfg.lambda_fp);
  for (int i = 0; i < spurious; ++i) {
    const double bearing = rng.uniform(-0.45 * camera.horizontal_fov, 0.45 * camera.horizontal_fov);
    const double range = rng.uniform(cfg.fp_range_min, cfg.fp_range_max);
    BoxDetection det;
    det.source = DetectionSource::kCamera3d;
    det.box.center = {range * std::cos(bearing), range * std::sin(bearing), 0.75};
    det.box.length = 4.0;
    det.box.width = 1.8;
    det.box.height = 1.5;
    det.box.yaw = rng.uniform(-kPi, kPi);
    const double sd = cfg.depth_sigma_scale * range;
    Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
    const double cb = std::cos(bearing), sb = std::sin(bearing);
    cov(0, 0) = sd * sd * cb * cb + cfg.lateral_sigma * cfg.lateral_sigma * sb * sb;
    cov(0, 1) = (sd * sd - cfg.lateral_sigma * cfg.lateral_sigma) * cb * sb;
    cov(1, 0) = cov(0, 1);
    cov(1, 1) = sd * sd * sb * sb + cfg.lateral_sigma * cfg.lateral_sigma * cb * cb;
    cov(2, 2) = cfg.vertical_sigma * cfg.vertical_sigma;
    det.position_cov = cov;
    det.has_position_cov = true;
    det.score = 0.5;
    out.push_back(det);
  }
  return out;
}

std::optional<std::array<double, 2>> project_point(const CameraModel& camera, const Vec3& p) {
  const Vec3 q = p - camera.mount;
  if (q.x <= 0.1) return std::nullopt;
  return std::array<double, 2>{camera.image_width / 2.0 - camera.focal_px * (q.y / q.x),
                               camera.image_height / 2.0 - camera.focal_px * (q.z / q.x)};
}

std::optional<PixelBox> project_box(const CameraModel& camera, const OrientedBox& box) {
  double u0 = std::numeric_limits<double>::infinity(), v0 = u0;
  double u1 = -u0, v1 = -u0;
  bool any = false;
  for (const Vec3& c : box.corners()) {
    const auto uv = project_point(camera, c);
    if (!uv) continue;
    any = true;
    u0 = std::min(u0, (*uv)[0]);
    u1 = std::max(u1, (*uv)[0]);
    v0 = std::min(v0, (*uv)[1]);
    v1 = std::max(v1, (*uv)[1]);
  }
  if (!any) return std::nullopt;
  PixelBox b;
  b.u_min = std::clamp(u0, 0.0, static_cast<double>(camera.image_width));
  b.u_max = std::clamp(u1, 0.0, static_cast<double>(camera.image_width));
  b.v_min = std::clamp(v0, 0.0, static_cast<double>(camera.image_height));
  b.v_max = std::clamp(v1, 0.0, static_cast<double>(camera.image_height));
  if (b.u_max - b.u_min < 1e-9 || b.v_max - b.v_min < 1e-9) return std::nullopt;
  return b;
}

double pixel_box_iou(const PixelBox& a, const PixelBox& b) {
  const double iw = std::min(a.u_max, b.u_max) - std::max(a.u_min, b.u_min);
  const double ih = std::min(a.v_max, b.v_max) - std::max(a.v_min, b.v_min);
  if (iw <= 0.0 || ih <= 0.0) return 0.0;
  const double inter = iw * ih;
  const double area_a = (a.u_max - a.u_min) * (a.v_max - a.v_min);
  const double area_b = (b.u_max - b.u_min) * (b.v_max - b.v_min);
  return inter / (area_a + area_b - inter);
}

}  // namespace avsec
