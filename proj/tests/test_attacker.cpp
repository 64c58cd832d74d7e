#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <sstream>
#include <string>

#include "avsec/attacker.hpp"
#include "avsec/scene.hpp"

using namespace avsec;

namespace {

Scene lead_scene() { return builtin_scene_suite().front(); }

Sweep grid_sweep(const SensorModel& s, double range) {
  Sweep sweep;
  for (int i = 0; i < s.azimuth_steps; ++i) {
    for (int j = 0; j < s.channels; ++j) {
      SphericalPoint p;
      p.azimuth = s.grid_azimuth(i);
      p.elevation = s.elevation_angles[j];
      p.range = range;
      p.intensity = 0.5;
      sweep.points.push_back(p);
    }
  }
  return sweep;
}

Sweep tagged_sweep(int frame) {
  Sweep sweep;
  sweep.index = frame;
  for (int k = 0; k < 3; ++k) {
    SphericalPoint p;
    p.azimuth = 0.1 + 0.1 * k;
    p.elevation = -0.05;
    p.range = 5.0 + 0.01 * frame;
    p.intensity = 0.5;
    p.t = 0.1 * frame + 0.001 * k;
    sweep.points.push_back(p);
  }
  return sweep;
}

BevTrack make_bev(int id, double px, double py, double vx, double vy) {
  BevTrack t;
  t.id = id;
  t.x << px, py, vx, vy;
  t.age = 6;
  t.hits = 5;
  t.confirmed = true;
  return t;
}

bool same_geometry(const Sweep& a, const Sweep& b) {
  if (a.points.size() != b.points.size()) return false;
  for (size_t i = 0; i < a.points.size(); ++i) {
    if (a.points[i].azimuth != b.points[i].azimuth) return false;
    if (a.points[i].elevation != b.points[i].elevation) return false;
    if (a.points[i].t != b.points[i].t) return false;
  }
  return true;
}

bool same_ranges(const Sweep& a, const Sweep& b) {
  if (a.points.size() != b.points.size()) return false;
  for (size_t i = 0; i < a.points.size(); ++i) {
    if (a.points[i].range != b.points[i].range) return false;
  }
  return true;
}

}  // namespace

TEST_CASE("attack names round trip") {
  for (AttackKind k : {AttackKind::kNone, AttackKind::kX1, AttackKind::kX3, AttackKind::kX4,
                       AttackKind::kX6, AttackKind::kX7}) {
    const auto back = attack_from_name(attack_name(k));
    REQUIRE(back.has_value());
    CHECK(*back == k);
  }
  CHECK(attack_from_name("none") == AttackKind::kNone);
  CHECK(!attack_from_name("x2").has_value());
  CHECK(!attack_from_name("").has_value());
}

TEST_CASE("jerk schedule hits the endpoint smoothly") {
  JerkState s = jerk_init(15.0, 1.0, 4.5);
  CHECK(s.jerk == doctest::Approx(-0.9218106995884774).epsilon(1e-9));
  CHECK(s.range == 15.0);

  double prev = s.range;
  for (int k = 1; k <= 44; ++k) {
    jerk_advance(s, 0.1);
    CHECK(s.range <= prev + 1e-12);  // monotone approach
    CHECK(s.range <= 15.0 + 1e-12);
    CHECK(s.range >= 1.0 - 1e-9);
    prev = s.range;
  }
  CHECK(s.range == doctest::Approx(1.010293552812061).epsilon(1e-9));
  jerk_advance(s, 0.1);  // step 45 lands on the endpoint
  CHECK(s.range == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("height monitor recovers the mount height") {
  const SensorModel sensor = SensorModel::uniform(32, -30.67, 10.67, 1800, 10.0, 130.0, 1.7);
  AttackerConfig cfg;
  MonitorState state;
  CHECK(!state.has_height);

  Sweep one;
  SphericalPoint p;
  p.azimuth = 0.0;
  p.elevation = -kPi / 6.0;
  p.range = 3.4;
  one.points.push_back(p);
  monitor_height(state, one, sensor, cfg);
  REQUIRE(state.has_height);
  CHECK(state.height_estimate == doctest::Approx(1.7).epsilon(1e-12));

  // sensors with no downward channels cannot estimate height
  MonitorState flat;
  monitor_height(flat, one, SensorModel::uniform(8, 1.0, 8.0, 360, 10.0, 130.0, 1.7), cfg);
  CHECK(!flat.has_height);
}

TEST_CASE("height monitor converges on rendered ground") {
  const Scene scene = lead_scene();
  AttackerConfig cfg;
  MonitorState state;
  for (int f = 0; f < 10; ++f) {
    monitor_height(state, render_sweep(scene, f).sweep, scene.sensor, cfg);
  }
  REQUIRE(state.has_height);
  CHECK(std::abs(state.height_estimate - scene.sensor.mount_height) <= 0.05);
}

TEST_CASE("object monitor tracks the lead car truthfully") {
  const Scene scene = lead_scene();
  AttackerConfig cfg;
  MonitorState state;
  for (int f = 0; f < 6; ++f) {
    const RenderResult r = render_sweep(scene, f);
    monitor_height(state, r.sweep, scene.sensor, cfg);
    monitor_objects(state, r.sweep, 0.1, cfg);
  }
  REQUIRE(!state.tracks.empty());
  const auto sel = select_target(state, cfg);
  REQUIRE(sel.has_value());
  const BevTrack* target = nullptr;
  for (const BevTrack& t : state.tracks) {
    if (t.id == *sel) target = &t;
  }
  REQUIRE(target != nullptr);
  CHECK(std::hypot(target->x(0) - 25.0, target->x(1)) <= 2.0);
  CHECK(std::abs(target->x(2)) <= 0.5);  // relative BEV velocity near zero
  CHECK(std::abs(target->x(3)) <= 0.5);
}

TEST_CASE("target selection applies its hard gates") {
  AttackerConfig cfg;
  MonitorState s;

  s.tracks = {make_bev(1, 20.0, 0.0, 0.0, 0.0)};
  CHECK(select_target(s, cfg) == 1);

  s.tracks = {make_bev(1, 20.0 * std::cos(0.7), 20.0 * std::sin(0.7), 0.0, 0.0)};
  CHECK(!select_target(s, cfg).has_value());  // bearing 40 deg

  s.tracks = {make_bev(1, 20.0, 0.0, 0.0, 0.0)};
  s.tracks[0].age = 2;
  CHECK(!select_target(s, cfg).has_value());  // too young

  s.tracks = {make_bev(1, 20.0, 0.0, 0.0, 0.0)};
  s.tracks[0].confirmed = false;
  CHECK(!select_target(s, cfg).has_value());

  s.tracks = {make_bev(1, 45.0, 0.0, 0.0, 0.0)};
  CHECK(!select_target(s, cfg).has_value());  // too far
  s.tracks = {make_bev(1, 4.0, 0.0, 0.0, 0.0)};
  CHECK(!select_target(s, cfg).has_value());  // too close

  s.tracks = {make_bev(1, 20.0, 0.0, 0.0, 1.5)};
  CHECK(!select_target(s, cfg).has_value());  // cutting across
  s.tracks = {make_bev(1, 20.0, 0.0, -3.0, 0.0)};
  CHECK(!select_target(s, cfg).has_value());  // closing too fast
  s.tracks = {make_bev(1, 20.0, 0.0, 6.0, 0.0)};
  CHECK(!select_target(s, cfg).has_value());  // pulling away
}

TEST_CASE("target selection prefers the steadier centered candidate") {
  AttackerConfig cfg;
  MonitorState s;
  // A wins bearing; B wins range centering and lateral calm: two of three
  s.tracks = {make_bev(1, 20.0, 1.0, 0.0, 0.8),
              make_bev(2, 21.5631, 4.37, 0.0, 0.5)};
  CHECK(select_target(s, cfg) == 2);

  // exact tie falls to the lower id
  s.tracks = {make_bev(9, 20.0, 1.0, 0.0, 0.2), make_bev(4, 20.0, 1.0, 0.0, 0.2)};
  CHECK(select_target(s, cfg) == 4);
}

TEST_CASE("missing angle scan ignores isolated holes and finds bands") {
  const SensorModel s = SensorModel::uniform(12, -30.0, 3.0, 24, 1.0, 130.0, 1.7);

  CHECK(find_missing_angles(grid_sweep(s, 10.0), s).empty());

  Sweep band = grid_sweep(s, 10.0);
  band.points.erase(std::remove_if(band.points.begin(), band.points.end(),
                                   [&](const SphericalPoint& p) {
                                     const int j = nearest_channel(s, p.elevation);
                                     return j >= 5 && j <= 7;
                                   }),
                    band.points.end());
  const auto missing = find_missing_angles(band, s);
  REQUIRE(missing.size() == 24);  // dilation eats one channel from each side
  for (int i = 0; i < 24; ++i) {
    CHECK(missing[i].first == i);
    CHECK(missing[i].second == 6);
  }

  Sweep hole = grid_sweep(s, 10.0);
  hole.points.erase(hole.points.begin() + (10 * s.channels + 6));
  CHECK(find_missing_angles(hole, s).empty());
}

TEST_CASE("trace mask covers the phantom footprint and nothing else") {
  OrientedBox box;
  box.center = {10.0, 0.0, 0.0};  // sensor frame
  box.length = 4.0;
  box.width = 2.0;
  box.height = 1.5;
  const auto trace = raycast_box_trace(box, 0.01);
  REQUIRE(static_cast<int>(trace.size()) >= 16);

  double sx = 0.0, sy = 0.0;
  double az_lo = 1e300, az_hi = -1e300, el_lo = 1e300, el_hi = -1e300;
  for (const SphericalPoint& p : trace) {
    sx += std::cos(p.azimuth);
    sy += std::sin(p.azimuth);
  }
  const double ref = std::atan2(sy, sx);
  for (const SphericalPoint& p : trace) {
    const double u = wrap_pi(p.azimuth - ref);
    az_lo = std::min(az_lo, u);
    az_hi = std::max(az_hi, u);
    el_lo = std::min(el_lo, p.elevation);
    el_hi = std::max(el_hi, p.elevation);
  }

  Sweep sweep;
  for (double az = -0.3; az <= 0.3; az += 0.01) {
    for (double el = -0.15; el <= 0.15; el += 0.01) {
      SphericalPoint p;
      p.azimuth = wrap_two_pi(az);
      p.elevation = el;
      p.range = 30.0;
      sweep.points.push_back(p);
    }
  }
  const std::vector<int> mask = point_mask_from_trace(sweep, trace);
  REQUIRE(mask.size() > 50);

  std::vector<char> is_masked(sweep.points.size(), 0);
  int prev = -1;
  for (int idx : mask) {
    REQUIRE(idx > prev);  // sorted, unique
    prev = idx;
    is_masked[idx] = 1;
  }
  for (size_t i = 0; i < sweep.points.size(); ++i) {
    const SphericalPoint& p = sweep.points[i];
    const double u = wrap_pi(p.azimuth - ref);
    const bool outside =
        u < az_lo - 1e-9 || u > az_hi + 1e-9 || p.elevation < el_lo - 1e-9 ||
        p.elevation > el_hi + 1e-9;
    const bool deep_inside = std::abs(u) <= 0.06 && std::abs(p.elevation) <= 0.05;
    if (outside) CHECK(!is_masked[i]);
    if (deep_inside) CHECK(is_masked[i]);
  }
}

TEST_CASE("object mask selects exactly the in-box returns") {
  const double h = 1.7;
  OrientedBox car;
  car.center = {10.0, 0.0, 0.75};  // ego frame
  car.length = 4.0;
  car.width = 2.0;
  car.height = 1.5;

  Sweep sweep;
  auto add = [&](double range, double elev) {
    SphericalPoint p;
    p.azimuth = 0.0;
    p.elevation = elev;
    p.range = range;
    sweep.points.push_back(p);
  };
  const double el = -deg2rad(5.0);
  add(10.0, el);   // inside the box
  add(5.0, el);    // short of it on the same ray
  add(20.0, el);   // beyond it
  add(3.4, -kPi / 6.0);  // ground underneath the approach

  const auto mask = point_mask_from_object(sweep, car, h);
  REQUIRE(mask.size() == 1);
  CHECK(mask[0] == 0);
}

TEST_CASE("object inpainting reproduces a constant range surface") {
  AttackerConfig cfg;
  std::vector<SphericalPoint> trace;
  for (double az = 0.0; az <= 0.3 + 1e-12; az += 0.05) {
    for (double el = 0.0; el <= 0.15 + 1e-12; el += 0.05) {
      SphericalPoint p;
      p.azimuth = az;
      p.elevation = el;
      p.range = 10.0;
      trace.push_back(p);
    }
  }
  REQUIRE(static_cast<int>(trace.size()) >= cfg.min_trace_for_fit);

  Sweep sweep;
  SphericalPoint a;
  a.azimuth = 0.1;
  a.elevation = 0.05;
  a.range = 50.0;
  sweep.points.push_back(a);
  SphericalPoint b = a;
  b.azimuth = 0.22;
  b.elevation = 0.12;
  b.range = 44.0;
  sweep.points.push_back(b);
  SphericalPoint below = a;
  below.elevation = -kPi / 6.0;  // fake range dives below ground here
  sweep.points.push_back(below);

  inpaint_as_object(sweep, {0, 1, 2}, trace, 1.7, cfg);
  CHECK(sweep.points[0].range == doctest::Approx(10.0).epsilon(1e-6));
  CHECK(sweep.points[1].range == doctest::Approx(10.0).epsilon(1e-6));
  CHECK(sweep.points[2].range == doctest::Approx(3.4).epsilon(1e-6));  // ground clamp
}

TEST_CASE("object inpainting falls back to nearest trace sample") {
  AttackerConfig cfg;
  std::vector<SphericalPoint> trace(4);
  for (int i = 0; i < 4; ++i) {
    trace[i].azimuth = 0.1 * i;
    trace[i].elevation = 0.0;
    trace[i].range = 5.0 + i;
  }
  Sweep sweep;
  SphericalPoint p;
  p.azimuth = 0.11;
  p.elevation = 0.0;
  p.range = 60.0;
  sweep.points.push_back(p);
  inpaint_as_object(sweep, {0}, trace, 1.7, cfg);
  CHECK(sweep.points[0].range == doctest::Approx(6.0).epsilon(1e-12));
}

TEST_CASE("background inpainting blends the surrounding returns") {
  AttackerConfig cfg;
  const SensorModel s = SensorModel::uniform(8, -10.0, 4.0, 72, 1.0, 130.0, 1.7);
  Sweep sweep = grid_sweep(s, 20.0);
  // mask one mid-grid cell with a positive elevation (no ground clamp)
  int victim = -1;
  for (size_t i = 0; i < sweep.points.size(); ++i) {
    if (sweep.points[i].elevation > 0.01 && std::abs(sweep.points[i].azimuth - kPi) < 0.05) {
      victim = static_cast<int>(i);
      break;
    }
  }
  REQUIRE(victim >= 0);
  sweep.points[victim].range = 3.0;  // pretend the attacker wrote garbage first
  inpaint_as_background(sweep, {victim}, s, 1.7, cfg);
  CHECK(sweep.points[victim].range == doctest::Approx(20.0).epsilon(1e-9));

  // with every return masked there is no context: ground ray or max range
  Sweep bare;
  SphericalPoint down;
  down.azimuth = 0.0;
  down.elevation = -kPi / 6.0;
  down.range = 55.0;
  bare.points.push_back(down);
  SphericalPoint up = down;
  up.elevation = 0.02;
  bare.points.push_back(up);
  inpaint_as_background(bare, {0, 1}, s, 1.7, cfg);
  CHECK(bare.points[0].range == doctest::Approx(3.4).epsilon(1e-9));
  CHECK(bare.points[1].range == doctest::Approx(s.max_range).epsilon(1e-12));
}

TEST_CASE("x1 injects a phantom while preserving the datagram geometry") {
  const Scene scene = lead_scene();
  AttackerConfig cfg;
  Attacker attacker(AttackKind::kX1, cfg, scene.sensor, 10.0);

  for (int f = 0; f < 30; ++f) {
    const RenderResult r = render_sweep(scene, f);
    const Sweep out = attacker.step(r.sweep, 0.1 * f);
    REQUIRE(same_geometry(out, r.sweep));  // angles, count, timestamps intact
    const AttackerLogRow& row = attacker.log().back();
    CHECK(row.frame == f);
    CHECK(row.masked_points > 0);
    if (f == 0) {
      CHECK(row.directive.rfind("establish missing=", 0) == 0);
      CHECK(row.phase == AttackPhase::kStable);
    } else if (f < 25) {
      CHECK(row.directive == "establish");
      CHECK(row.r_k == 15.0);
    } else {
      CHECK(row.directive == "move");
      CHECK(row.phase == AttackPhase::kAttacking);
    }
  }
  const auto& log = attacker.log();
  REQUIRE(log.size() == 30);
  for (size_t i = 26; i < log.size(); ++i) CHECK(log[i].r_k < log[i - 1].r_k + 1e-12);
  CHECK(log[29].r_k < 15.0);
  CHECK(attacker.phase() == AttackPhase::kAttacking);
}

TEST_CASE("x3 stalls perception by looping the buffered past") {
  AttackerConfig cfg;
  cfg.trigger_frame = 50;
  const SensorModel s = SensorModel::uniform(4, -10.0, -1.0, 24, 1.0, 130.0, 1.7);
  Attacker attacker(AttackKind::kX3, cfg, s, 10.0);

  for (int f = 0; f < 55; ++f) {
    const Sweep clean = tagged_sweep(f);
    const Sweep out = attacker.step(clean, 0.1 * f);
    const AttackerLogRow& row = attacker.log().back();
    if (f < 50) {
      CHECK(same_ranges(out, clean));
      CHECK(row.directive == "none");
      continue;
    }
    const int src = 10 + (f - 50);  // ring holds frames 10..49
    CHECK(row.directive == "replay:" + std::to_string(src));
    CHECK(row.phase == AttackPhase::kAttacking);
    CHECK(out.index == f);  // victim-facing index stays monotone
    REQUIRE(out.points.size() == 3);
    for (int k = 0; k < 3; ++k) {
      CHECK(out.points[k].range == 5.0 + 0.01 * src);
      CHECK(out.points[k].t ==
            doctest::Approx(0.1 * f + 0.001 * k).epsilon(1e-9));  // rebased times
    }
  }
}

TEST_CASE("x4 plays the buffer backwards with smoothed endpoints") {
  AttackerConfig cfg;
  cfg.trigger_frame = 60;
  const SensorModel s = SensorModel::uniform(4, -10.0, -1.0, 24, 1.0, 130.0, 1.7);
  Attacker attacker(AttackKind::kX4, cfg, s, 10.0);

  std::vector<int> sources;
  for (int f = 0; f < 67; ++f) {
    attacker.step(tagged_sweep(f), 0.1 * f);
    const AttackerLogRow& row = attacker.log().back();
    if (f < 60) {
      CHECK(row.directive == "none");
    } else {
      REQUIRE(row.directive.rfind("replay:", 0) == 0);
      sources.push_back(std::stoi(row.directive.substr(7)));
    }
  }
  // five trigger repeats, then descending through the buffer
  REQUIRE(sources.size() == 7);
  CHECK(sources == std::vector<int>{60, 60, 60, 60, 60, 59, 58});
}

TEST_CASE("x6 erases the selected object from the stream") {
  const Scene scene = lead_scene();
  const RenderResult r = render_sweep(scene, 0);
  AttackerConfig cfg;
  Attacker attacker(AttackKind::kX6, cfg, scene.sensor, 10.0);

  for (int f = 0; f < 8; ++f) {
    const Sweep out = attacker.step(r.sweep, 0.1 * f);
    const AttackerLogRow& row = attacker.log().back();
    REQUIRE(same_geometry(out, r.sweep));
    if (f < 3) {
      CHECK(row.directive == "none");
      CHECK(same_ranges(out, r.sweep));
    } else if (f == 3) {
      CHECK(row.directive == "select");
      CHECK(row.target_id >= 1);
      CHECK(same_ranges(out, r.sweep));  // selection frame passes through
    } else {
      CHECK(row.directive == "remove");
      REQUIRE(row.masked_points >= 30);
      int rewritten = 0;
      for (size_t i = 0; i < out.points.size(); ++i) {
        if (out.points[i].range != r.sweep.points[i].range) ++rewritten;
      }
      CHECK(rewritten >= 30);
      // the victim's detector no longer sees anything at the true position
      const auto dets = detect_lidar(out, scene.sensor.mount_height, cfg.detector);
      for (const BoxDetection& d : dets) {
        CHECK(std::hypot(d.box.center.x - 25.0, d.box.center.y) > 2.0);
      }
    }
  }
}

TEST_CASE("x6 leaves an empty road untouched") {
  Scene scene;
  for (const Scene& s : builtin_scene_suite()) {
    if (s.name == "empty_road") scene = s;
  }
  REQUIRE(scene.name == "empty_road");
  const RenderResult r = render_sweep(scene, 0);

  AttackerConfig cfg;
  Attacker attacker(AttackKind::kX6, cfg, scene.sensor, 10.0);
  for (int f = 0; f < 5; ++f) {
    const Sweep out = attacker.step(r.sweep, 0.1 * f);
    CHECK(same_geometry(out, r.sweep));
    CHECK(same_ranges(out, r.sweep));
    CHECK(attacker.log().back().directive == "none");
  }
  CHECK(attacker.phase() == AttackPhase::kWaiting);
}

TEST_CASE("x7 walks the real target toward the ego") {
  const Scene scene = lead_scene();
  AttackerConfig cfg;
  cfg.stable_duration = 0.5;
  cfg.attack_duration = 2.0;
  Attacker attacker(AttackKind::kX7, cfg, scene.sensor, 10.0);

  double prev_r = 1e300;
  for (int f = 0; f < 35; ++f) {
    const RenderResult r = render_sweep(scene, f);
    const Sweep out = attacker.step(r.sweep, 0.1 * f);
    const AttackerLogRow& row = attacker.log().back();
    REQUIRE(same_geometry(out, r.sweep));

    if (f < 3) {
      CHECK(row.directive == "none");
    } else if (f == 3) {
      CHECK(row.directive == "select");
      CHECK(same_ranges(out, r.sweep));
      // realness check: the monitor track matches the ground truth position
      const BevTrack* target = nullptr;
      for (const BevTrack& t : attacker.monitor().tracks) {
        if (t.id == row.target_id) target = &t;
      }
      REQUIRE(target != nullptr);
      REQUIRE(r.truth.size() == 1);
      CHECK(std::hypot(target->x(0) - r.truth[0].box.center.x,
                       target->x(1) - r.truth[0].box.center.y) <= 2.0);
    } else if (f <= 8) {
      CHECK(row.directive == "establish");
      CHECK(row.r_k == doctest::Approx(25.0).epsilon(0.08));
      CHECK(row.masked_points > 0);
    } else if (f <= 28) {
      CHECK(row.directive == "move");
      CHECK(row.r_k < prev_r + 1e-12);
      CHECK(row.masked_points > 0);
      if (f == 28) {
        CHECK(row.r_k < 5.0);  // deep into the approach
        double clean_sum = 0.0, out_sum = 0.0;
        int moved = 0;
        for (size_t i = 0; i < out.points.size(); ++i) {
          if (out.points[i].range != r.sweep.points[i].range) {
            clean_sum += r.sweep.points[i].range;
            out_sum += out.points[i].range;
            ++moved;
          }
        }
        REQUIRE(moved > 0);
        CHECK(out_sum / moved < clean_sum / moved - 15.0);  // pulled toward the ego
      }
    } else {
      CHECK(row.directive == "none");
      CHECK(row.phase == AttackPhase::kExhausted);
      CHECK(same_ranges(out, r.sweep));
    }
    prev_r = row.r_k;
  }
}

TEST_CASE("attacker log serializes one row per frame") {
  const SensorModel s = SensorModel::uniform(4, -10.0, -1.0, 24, 1.0, 130.0, 1.7);
  Attacker attacker(AttackKind::kNone, AttackerConfig{}, s, 10.0);
  attacker.step(tagged_sweep(0), 0.0);
  attacker.step(tagged_sweep(1), 0.1);

  const std::string csv = attacker_log_csv(attacker.log());
  std::istringstream in(csv);
  std::string line;
  REQUIRE(std::getline(in, line));
  CHECK(line == "frame,phase,target_id,r_k,masked_points,directive");
  int rows = 0;
  while (std::getline(in, line)) ++rows;
  CHECK(rows == 2);
}
