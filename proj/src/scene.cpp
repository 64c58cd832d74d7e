#include "avsec/scene.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "avsec/rng.hpp"

namespace avsec {

namespace {

struct Rot2 {
  double c = 1.0, s = 0.0;
  static Rot2 yaw(double a) { return {std::cos(a), std::sin(a)}; }
  Vec3 apply(const Vec3& v) const { return {c * v.x - s * v.y, s * v.x + c * v.y, v.z}; }
  Vec3 inverse(const Vec3& v) const { return {c * v.x + s * v.y, -s * v.x + c * v.y, v.z}; }
};

}  // namespace

bool OrientedBox::contains(const Vec3& p) const {
  const Rot2 r = Rot2::yaw(yaw);
  const Vec3 q = r.inverse(p - center);
  return std::fabs(q.x) <= length / 2.0 && std::fabs(q.y) <= width / 2.0 &&
         std::fabs(q.z) <= height / 2.0;
}

std::vector<Vec3> OrientedBox::corners() const {
  std::vector<Vec3> out;
  out.reserve(8);
  const Rot2 r = Rot2::yaw(yaw);
  for (int sx : {-1, 1})
    for (int sy : {-1, 1})
      for (int sz : {-1, 1})
        out.push_back(center + r.apply({sx * length / 2.0, sy * width / 2.0, sz * height / 2.0}));
  return out;
}

Pose SceneObject::pose_at(double t) const {
  Pose p = start;
  double remaining = t;
  for (size_t i = 0; i < segments.size(); ++i) {
    const TrajectorySegment& seg = segments[i];
    const bool last = i + 1 == segments.size();
    const double tau = last ? remaining : std::min(remaining, seg.duration);
    if (tau > 0.0) {
      if (std::fabs(seg.yaw_rate) < 1e-12) {
        p.x += seg.speed * std::cos(p.yaw) * tau;
        p.y += seg.speed * std::sin(p.yaw) * tau;
      } else {
        const double yaw1 = p.yaw + seg.yaw_rate * tau;
        p.x += seg.speed / seg.yaw_rate * (std::sin(yaw1) - std::sin(p.yaw));
        p.y -= seg.speed / seg.yaw_rate * (std::cos(yaw1) - std::cos(p.yaw));
        p.yaw = wrap_pi(yaw1);
      }
    }
    remaining -= tau;
    if (remaining <= 0.0) break;
  }
  return p;
}

Vec3 SceneObject::velocity_at(double t) const {
  if (segments.empty()) return {0, 0, 0};
  double acc = 0.0;
  size_t i = 0;
  for (; i + 1 < segments.size(); ++i) {
    if (t < acc + segments[i].duration) break;
    acc += segments[i].duration;
  }
  const Pose p = pose_at(t);
  return {segments[i].speed * std::cos(p.yaw), segments[i].speed * std::sin(p.yaw), 0.0};
}

bool CameraModel::in_fov(const Vec3& p_ego) const {
  const double x = p_ego.x - mount.x;
  const double y = p_ego.y - mount.y;
  if (x <= 0.1) return false;
  return std::fabs(std::atan2(y, x)) <= horizontal_fov / 2.0;
}

std::optional<double> ray_box_distance(const Vec3& o, const Vec3& d, const OrientedBox& box) {
  const Rot2 r = Rot2::yaw(box.yaw);
  const Vec3 ob = r.inverse(o - box.center);
  const Vec3 db = r.inverse(d);
  const double half[3] = {box.length / 2.0, box.width / 2.0, box.height / 2.0};
  const double oc[3] = {ob.x, ob.y, ob.z};
  const double dc[3] = {db.x, db.y, db.z};
  double tmin = -std::numeric_limits<double>::infinity();
  double tmax = std::numeric_limits<double>::infinity();
  for (int a = 0; a < 3; ++a) {
    if (dc[a] == 0.0) {
      if (std::fabs(oc[a]) > half[a]) return std::nullopt;
      continue;
    }
    double t0 = (-half[a] - oc[a]) / dc[a];
    double t1 = (half[a] - oc[a]) / dc[a];
    if (t0 > t1) std::swap(t0, t1);
    tmin = std::max(tmin, t0);
    tmax = std::min(tmax, t1);
    if (tmin > tmax) return std::nullopt;
  }
  if (tmin <= 1e-9) return std::nullopt;  // behind or inside
  return tmin;
}

namespace {

struct EgoFrameObject {
  int id;
  ObjectClass cls;
  OrientedBox box;
  Vec3 velocity;
  // BEV angular culling interval
  double center_az = 0.0, half_angle = kPi;
  int hits = 0;
};

std::vector<EgoFrameObject> objects_in_ego_frame(const Scene& scene, double t) {
  const Pose ego = scene.ego.pose_at(t);
  const Vec3 ego_vel = scene.ego.velocity_at(t);
  const Rot2 r = Rot2::yaw(ego.yaw);
  std::vector<EgoFrameObject> out;
  for (const SceneObject& obj : scene.objects) {
    const Pose p = obj.pose_at(t);
    EgoFrameObject e;
    e.id = obj.id;
    e.cls = obj.cls;
    e.box.center = r.inverse(Vec3{p.x - ego.x, p.y - ego.y, 0.0});
    e.box.center.z = obj.height / 2.0;
    e.box.length = obj.length;
    e.box.width = obj.width;
    e.box.height = obj.height;
    e.box.yaw = wrap_pi(p.yaw - ego.yaw);
    e.velocity = r.inverse(obj.velocity_at(t) - ego_vel);
    const double dist = std::hypot(e.box.center.x, e.box.center.y);
    const double rad = std::hypot(obj.length, obj.width) / 2.0;
    if (dist > rad) {
      e.center_az = std::atan2(e.box.center.y, e.box.center.x);
      e.half_angle = std::asin(std::min(1.0, rad / dist));
    }
    out.push_back(e);
  }
  return out;
}

}  // namespace

std::vector<GroundTruthObject> ground_truth(const Scene& scene, int frame) {
  std::vector<GroundTruthObject> out;
  for (const EgoFrameObject& e : objects_in_ego_frame(scene, scene.frame_time(frame))) {
    if (std::hypot(e.box.center.x, e.box.center.y) > scene.sensor.max_range) continue;
    out.push_back({e.id, e.cls, e.box, e.velocity, 0});
  }
  return out;
}

RenderResult render_sweep(const Scene& scene, int frame) {
  const SensorModel& s = scene.sensor;
  const double t0 = scene.frame_time(frame);
  std::vector<EgoFrameObject> objs = objects_in_ego_frame(scene, t0);
  Rng rng = Rng::derive(scene.seed, static_cast<uint64_t>(frame), 0xA11CE);

  std::vector<double> caz(s.azimuth_steps), saz(s.azimuth_steps);
  for (int i = 0; i < s.azimuth_steps; ++i) {
    const double a = s.grid_azimuth(i);
    caz[i] = std::cos(a);
    saz[i] = std::sin(a);
  }
  std::vector<double> cel(s.channels), sel(s.channels);
  for (int j = 0; j < s.channels; ++j) {
    cel[j] = std::cos(s.elevation_angles[j]);
    sel[j] = std::sin(s.elevation_angles[j]);
  }

  const Vec3 origin{0.0, 0.0, s.mount_height};
  Sweep sweep;
  sweep.index = frame;
  sweep.points.reserve(static_cast<size_t>(s.points_per_sweep()) * 3 / 4);

  for (int i = 0; i < s.azimuth_steps; ++i) {
    const double az = s.grid_azimuth(i);
    const double pt_t = t0 + i * s.firing_interval();
    for (int j = 0; j < s.channels; ++j) {
      const Vec3 d{cel[j] * caz[i], cel[j] * saz[i], sel[j]};
      double best = std::numeric_limits<double>::infinity();
      EgoFrameObject* best_obj = nullptr;
      for (EgoFrameObject& e : objs) {
        if (std::fabs(wrap_pi(az - e.center_az)) > e.half_angle + s.azimuth_step()) continue;
        const auto hit = ray_box_distance(origin, d, e.box);
        if (hit && *hit < best) {
          best = *hit;
          best_obj = &e;
        }
      }
      bool is_ground = false;
      if (d.z < 0.0) {
        const double tg = -origin.z / d.z;
        if (tg < best) {
          best = tg;
          is_ground = true;
          best_obj = nullptr;
        }
      }
      if (!std::isfinite(best) || best > s.max_range) continue;
      const double noisy = best + rng.normal() * scene.range_noise_sigma;
      if (noisy <= 0.05 || noisy > s.max_range) continue;
      if (best_obj) ++best_obj->hits;
      SphericalPoint p;
      p.range = noisy;
      p.azimuth = az;
      p.elevation = s.elevation_angles[j];
      p.t = pt_t;
      p.intensity = is_ground ? 0.3 : 0.8;
      sweep.points.push_back(p);
    }
  }

  RenderResult out;
  out.sweep = std::move(sweep);
  for (const EgoFrameObject& e : objs) {
    if (std::hypot(e.box.center.x, e.box.center.y) > s.max_range) continue;
    out.truth.push_back({e.id, e.cls, e.box, e.velocity, e.hits});
  }
  return out;
}

std::vector<CameraTruthBox> render_camera_truth(const Scene& scene, int frame) {
  const CameraModel& cam = scene.camera;
  const double cx = cam.image_width / 2.0;
  const double cy = cam.image_height / 2.0;
  std::vector<CameraTruthBox> out;
  for (const EgoFrameObject& e : objects_in_ego_frame(scene, scene.frame_time(frame))) {
    double u0 = std::numeric_limits<double>::infinity(), v0 = u0;
    double u1 = -u0, v1 = -u0;
    bool any_front = false, any_behind = false;
    for (const Vec3& c : e.box.corners()) {
      const Vec3 p = c - cam.mount;
      if (p.x <= 0.1) {
        any_behind = true;
        continue;
      }
      any_front = true;
      const double u = cx - cam.focal_px * (p.y / p.x);
      const double v = cy - cam.focal_px * (p.z / p.x);
      u0 = std::min(u0, u);
      u1 = std::max(u1, u);
      v0 = std::min(v0, v);
      v1 = std::max(v1, v);
    }
    if (!any_front) continue;
    CameraTruthBox b;
    b.id = e.id;
    b.u_min = std::clamp(u0, 0.0, static_cast<double>(cam.image_width));
    b.u_max = std::clamp(u1, 0.0, static_cast<double>(cam.image_width));
    b.v_min = std::clamp(v0, 0.0, static_cast<double>(cam.image_height));
    b.v_max = std::clamp(v1, 0.0, static_cast<double>(cam.image_height));
    b.truncated = any_behind || b.u_min != u0 || b.u_max != u1 || b.v_min != v0 || b.v_max != v1;
    if (b.u_max - b.u_min < 1.0 || b.v_max - b.v_min < 1.0) continue;
    out.push_back(b);
  }
  return out;
}

namespace {

SceneObject make_car(int id, double x, double y, double yaw,
                     std::vector<TrajectorySegment> segs, double l = 4.2, double w = 1.9,
                     double h = 1.5) {
  SceneObject o;
  o.id = id;
  o.cls = ObjectClass::kCar;
  o.length = l;
  o.width = w;
  o.height = h;
  o.start = {x, y, yaw};
  o.segments = std::move(segs);
  return o;
}

SceneObject make_ped(int id, double x, double y, double yaw, double speed) {
  SceneObject o;
  o.id = id;
  o.cls = ObjectClass::kPedestrian;
  o.length = 0.5;
  o.width = 0.5;
  o.height = 1.8;
  o.start = {x, y, yaw};
  o.segments = {{0.0, speed, 0.0}};
  return o;
}

std::vector<TrajectorySegment> cv(double speed) { return {{0.0, speed, 0.0}}; }

Scene base_scene(const std::string& name, uint64_t seed, double ego_speed = 5.0) {
  Scene sc;
  sc.name = name;
  sc.seed = seed;
  sc.frames = 100;
  sc.frame_rate = 10.0;
  sc.range_noise_sigma = 0.02;
  sc.sensor = SensorModel::uniform(32, -30.67, 10.67, 1800, 10.0, 130.0, 1.7);
  sc.camera = CameraModel{};
  sc.ego.id = 0;
  sc.ego.cls = ObjectClass::kCar;
  sc.ego.length = 4.5;
  sc.ego.width = 1.9;
  sc.ego.height = 1.5;
  sc.ego.start = {0.0, 0.0, 0.0};
  sc.ego.segments = cv(ego_speed);
  return sc;
}

}  // namespace

std::vector<Scene> builtin_scene_suite() {
  std::vector<Scene> out;

  {
    Scene sc = base_scene("lead_steady_center", 101);
    sc.objects = {make_car(1, 25, 0, 0, cv(5))};
    out.push_back(sc);
  }
  {
    Scene sc = base_scene("lead_follow_slow", 102);
    sc.objects = {make_car(1, 30, -2.7, 0, cv(4))};
    out.push_back(sc);
  }
  {
    Scene sc = base_scene("lead_offset_left", 103);
    sc.objects = {make_car(1, 28, 3.0, 0, cv(5))};
    out.push_back(sc);
  }
  {
    Scene sc = base_scene("lead_offset_right", 104);
    sc.objects = {make_car(1, 24, -2.8, 0, cv(4.5))};
    out.push_back(sc);
  }
  {
    Scene sc = base_scene("lead_brake", 105);
    sc.objects = {make_car(1, 32, 2.7, 0, {{3.0, 5.0, 0.0}, {0.0, 2.0, 0.0}})};
    out.push_back(sc);
  }
  {
    Scene sc = base_scene("lead_far_approach", 106);
    sc.objects = {make_car(1, 38, 3.2, 0, cv(3.5))};
    out.push_back(sc);
  }
  {
    Scene sc = base_scene("oncoming_left", 107);
    sc.objects = {make_car(1, 120, 3.5, kPi, cv(8))};
    out.push_back(sc);
  }
  {
    Scene sc = base_scene("oncoming_pair", 108);
    sc.objects = {make_car(1, 115, 3.4, kPi, cv(7)), make_car(2, 125, 3.6, kPi, cv(6))};
    out.push_back(sc);
  }
  {
    Scene sc = base_scene("crossing_near", 109);
    sc.objects = {make_car(1, 55, -20, kPi / 2, cv(4))};
    out.push_back(sc);
  }
  {
    Scene sc = base_scene("crossing_far", 110);
    sc.objects = {make_car(1, 70, 25, -kPi / 2, cv(5))};
    out.push_back(sc);
  }
  {
    Scene sc = base_scene("lane_change_in", 111);
    sc.objects = {make_car(1, 25, 3.5, 0,
                           {{1.5, 5.0, 0.0}, {2.0, 5.0, -0.18}, {2.0, 5.0, 0.18}, {0.0, 5.0, 0.0}})};
    out.push_back(sc);
  }
  {
    Scene sc = base_scene("multi_lead_parked", 112);
    sc.objects = {make_car(1, 26, 2.8, 0, cv(5)), make_car(2, 70, -3.1, 0, cv(0)),
                  make_car(3, 75, 6.5, 0.3, cv(0)), make_car(4, 120, 3.5, kPi, cv(8))};
    out.push_back(sc);
  }
  {
    Scene sc = base_scene("multi_dense", 113);
    sc.objects = {make_car(1, 22, 2.7, 0, cv(5)), make_car(2, 30, 6.2, 0, cv(5)),
                  make_car(3, 48, 2.8, 0, cv(4)), make_car(4, 60, -18, kPi / 2, cv(3))};
    out.push_back(sc);
  }
  {
    Scene sc = base_scene("pedestrian_cross", 114);
    sc.objects = {make_ped(1, 65, 8, -kPi / 2, 1.2), make_car(2, 27, -2.9, 0, cv(5))};
    out.push_back(sc);
  }
  {
    Scene sc = base_scene("two_lane_flow", 115);
    sc.objects = {make_car(1, 29, 2.8, 0, cv(5)), make_car(2, 55, 6.3, 0, cv(6)),
                  make_car(3, 115, -3.4, kPi, cv(7))};
    out.push_back(sc);
  }
  {
    Scene sc = base_scene("lead_stop_go", 116);
    sc.objects = {make_car(1, 30, 0, 0, {{2.0, 5.0, 0.0}, {3.0, 3.5, 0.0}, {0.0, 5.0, 0.0}})};
    out.push_back(sc);
  }
  {
    Scene sc = base_scene("lead_drift", 117);
    sc.objects = {make_car(1, 26, 2.6, 0.02, cv(4.8))};
    out.push_back(sc);
  }
  {
    Scene sc = base_scene("empty_road", 118);
    out.push_back(sc);
  }
  {
    Scene sc = base_scene("crossing_team", 119);
    sc.objects = {make_car(1, 55, -15, kPi / 2, cv(3.5)), make_car(2, 70, 18, -kPi / 2, cv(4)),
                  make_car(3, 72, -6.3, 0, cv(0))};
    out.push_back(sc);
  }
  {
    Scene sc = base_scene("oncoming_close", 120);
    sc.objects = {make_car(1, 118, 3.2, kPi, cv(7)), make_car(2, 52, 12, -kPi / 2, cv(3))};
    out.push_back(sc);
  }
  return out;
}

namespace {

using nlohmann::json;

json segment_to_json(const TrajectorySegment& s) {
  return json{{"duration", s.duration}, {"speed", s.speed}, {"yaw_rate", s.yaw_rate}};
}

TrajectorySegment segment_from_json(const json& j) {
  return {j.at("duration").get<double>(), j.at("speed").get<double>(),
          j.value("yaw_rate", 0.0)};
}

json object_to_json(const SceneObject& o) {
  json segs = json::array();
  for (const auto& s : o.segments) segs.push_back(segment_to_json(s));
  return json{{"id", o.id},
              {"class", o.cls == ObjectClass::kCar ? "car" : "pedestrian"},
              {"length", o.length},
              {"width", o.width},
              {"height", o.height},
              {"start", {{"x", o.start.x}, {"y", o.start.y}, {"yaw", o.start.yaw}}},
              {"segments", segs}};
}

SceneObject object_from_json(const json& j) {
  SceneObject o;
  o.id = j.at("id").get<int>();
  const std::string cls = j.at("class").get<std::string>();
  if (cls == "car") {
    o.cls = ObjectClass::kCar;
  } else if (cls == "pedestrian") {
    o.cls = ObjectClass::kPedestrian;
  } else {
    throw std::runtime_error("unknown object class: " + cls);
  }
  o.length = j.at("length").get<double>();
  o.width = j.at("width").get<double>();
  o.height = j.at("height").get<double>();
  o.start = {j.at("start").at("x").get<double>(), j.at("start").at("y").get<double>(),
             j.at("start").at("yaw").get<double>()};
  for (const auto& s : j.at("segments")) o.segments.push_back(segment_from_json(s));
  return o;
}

}  // namespace

std::string scene_to_json(const Scene& scene) {
  json sensor{{"channels", scene.sensor.channels},
              {"elevation_angles", scene.sensor.elevation_angles},
              {"azimuth_steps", scene.sensor.azimuth_steps},
              {"rotation_rate", scene.sensor.rotation_rate},
              {"max_range", scene.sensor.max_range},
              {"mount_height", scene.sensor.mount_height},
              {"mount_yaw", scene.sensor.mount_yaw},
              {"mode", scene.sensor.mode == ReturnMode::kDual
                           ? "dual"
                           : (scene.sensor.mode == ReturnMode::kLast ? "last" : "single")}};
  json camera{{"focal_px", scene.camera.focal_px},
              {"image_width", scene.camera.image_width},
              {"image_height", scene.camera.image_height},
              {"horizontal_fov", scene.camera.horizontal_fov},
              {"mount", {{"x", scene.camera.mount.x}, {"y", scene.camera.mount.y},
                         {"z", scene.camera.mount.z}}}};
  json objs = json::array();
  for (const auto& o : scene.objects) objs.push_back(object_to_json(o));
  json j{{"name", scene.name},
         {"seed", scene.seed},
         {"frames", scene.frames},
         {"frame_rate", scene.frame_rate},
         {"range_noise_sigma", scene.range_noise_sigma},
         {"sensor", sensor},
         {"camera", camera},
         {"ego", object_to_json(scene.ego)},
         {"objects", objs}};
  return j.dump(2) + "\n";
}

Scene scene_from_json(const std::string& text) {
  json j = json::parse(text);
  Scene sc;
  sc.name = j.at("name").get<std::string>();
  sc.seed = j.at("seed").get<uint64_t>();
  sc.frames = j.at("frames").get<int>();
  sc.frame_rate = j.at("frame_rate").get<double>();
  sc.range_noise_sigma = j.at("range_noise_sigma").get<double>();
  const json& s = j.at("sensor");
  sc.sensor.channels = s.at("channels").get<int>();
  sc.sensor.elevation_angles = s.at("elevation_angles").get<std::vector<double>>();
  sc.sensor.azimuth_steps = s.at("azimuth_steps").get<int>();
  sc.sensor.rotation_rate = s.at("rotation_rate").get<double>();
  sc.sensor.max_range = s.at("max_range").get<double>();
  sc.sensor.mount_height = s.at("mount_height").get<double>();
  sc.sensor.mount_yaw = s.value("mount_yaw", 0.0);
  const std::string mode = s.at("mode").get<std::string>();
  sc.sensor.mode = mode == "dual" ? ReturnMode::kDual
                                  : (mode == "last" ? ReturnMode::kLast : ReturnMode::kSingle);
  if (static_cast<int>(sc.sensor.elevation_angles.size()) != sc.sensor.channels)
    throw std::runtime_error("channel count does not match elevation table");
  const json& c = j.at("camera");
  sc.camera.focal_px = c.at("focal_px").get<double>();
  sc.camera.image_width = c.at("image_width").get<int>();
  sc.camera.image_height = c.at("image_height").get<int>();
  sc.camera.horizontal_fov = c.at("horizontal_fov").get<double>();
  sc.camera.mount = {c.at("mount").at("x").get<double>(), c.at("mount").at("y").get<double>(),
                     c.at("mount").at("z").get<double>()};
  sc.ego = object_from_json(j.at("ego"));
  for (const auto& o : j.at("objects")) sc.objects.push_back(object_from_json(o));
  return sc;
}

void save_scene(const std::string& path, const Scene& scene) {
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw std::runtime_error("cannot open " + path);
  f << scene_to_json(scene);
}

Scene load_scene(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot open " + path);
  std::stringstream ss;
  ss << f.rdbuf();
  return scene_from_json(ss.str());
}

}  // namespace avsec
