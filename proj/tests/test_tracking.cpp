#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>

#include "avsec/rng.hpp"
#include "avsec/tracking.hpp"

using namespace avsec;

namespace {

Track fresh_track(double x, double y, double yaw = 0.0) {
  Track t;
  t.x.setZero();
  t.x(0) = x;
  t.x(1) = y;
  t.x(2) = 0.75;
  t.x(6) = 4.0;
  t.x(7) = 2.0;
  t.x(8) = 1.5;
  t.x(9) = yaw;
  t.P = StateCov::Identity();
  return t;
}

OrientedBox box_at(double x, double y, double yaw = 0.0) {
  OrientedBox b;
  b.center = {x, y, 0.75};
  b.length = 4.0;
  b.width = 2.0;
  b.height = 1.5;
  b.yaw = yaw;
  return b;
}

BoxDetection lidar_det(double x, double y) {
  BoxDetection d;
  d.source = DetectionSource::kLidar;
  d.box = box_at(x, y);
  return d;
}

BoxDetection cam2d_det(const CameraModel& camera, const OrientedBox& box) {
  BoxDetection d;
  d.source = DetectionSource::kCamera2d;
  d.box2d = project_box(camera, box);
  return d;
}

Eigen::Matrix3d random_pd(Rng& rng) {
  Eigen::Matrix3d a;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) a(i, j) = rng.uniform(-1.0, 1.0);
  return a * a.transpose() + 0.1 * Eigen::Matrix3d::Identity();
}

}  // namespace

TEST_CASE("predict advances position by velocity and inflates covariance") {
  FusionConfig cfg;
  Track t = fresh_track(1.0, 2.0);
  t.x(3) = 2.0;
  t.x(4) = -1.0;
  kf_predict(t, 0.1, cfg);

  CHECK(t.x(0) == doctest::Approx(1.2).epsilon(1e-12));
  CHECK(t.x(1) == doctest::Approx(1.9).epsilon(1e-12));
  CHECK(t.x(2) == doctest::Approx(0.75).epsilon(1e-12));
  // diag prior: P00' = P00 + dt^2 P33 + q_pos^2 = 1 + 0.01 + 0.01
  CHECK(t.P(0, 0) == doctest::Approx(1.02).epsilon(1e-12));
  CHECK(t.P(0, 3) == doctest::Approx(0.1).epsilon(1e-12));
  CHECK(t.P.trace() > StateCov::Identity().trace());
}

TEST_CASE("box update with unit prior and unit noise halves the state gap") {
  FusionConfig cfg;
  Track t = fresh_track(0.0, 0.0);
  t.x(2) = 0.0;
  t.x(6) = t.x(7) = t.x(8) = 0.0;

  OrientedBox z;
  z.center = {1.0, 0.0, 0.0};
  z.length = z.width = z.height = 0.0;
  z.yaw = 0.0;
  kf_update_box(t, z, Eigen::Matrix<double, 7, 7>::Identity());

  CHECK(t.x(0) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(t.P(0, 0) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(t.x(3) == doctest::Approx(0.0).epsilon(1e-12));  // velocity unobserved
  CHECK(t.P(3, 3) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("yaw innovation wraps and folds to the nearest axis branch") {
  // A box measured half a turn away is the same box: no yaw motion.
  Track t = fresh_track(5.0, 0.0, 0.0);
  kf_update_box(t, box_at(5.0, 0.0, kPi), Eigen::Matrix<double, 7, 7>::Identity());
  CHECK(t.x(9) == doctest::Approx(0.0).epsilon(1e-12));

  // 3.1 vs -3.0 are 0.1832 rad apart through the pi boundary, not 6.1.
  Track u = fresh_track(5.0, 0.0, 3.1);
  kf_update_box(u, box_at(5.0, 0.0, -3.0), Eigen::Matrix<double, 7, 7>::Identity());
  // posterior = wrap(3.1 + 0.5 * (2 pi - 6.1)) = 0.05 - pi
  CHECK(u.x(9) == doctest::Approx(0.05 - kPi).epsilon(1e-12));
  CHECK(std::abs(u.x(9)) <= kPi);
}

TEST_CASE("non positive definite measurement covariance is rejected") {
  Track t = fresh_track(5.0, 0.0);
  Eigen::Matrix<double, 7, 7> bad = Eigen::Matrix<double, 7, 7>::Identity();
  bad(0, 0) = -1.0;
  CHECK_THROWS_AS(kf_update_box(t, box_at(5.0, 0.0), bad), ConfigError);
}

TEST_CASE("covariance stays symmetric positive definite under random traffic") {
  FusionConfig cfg;
  Rng rng(2024);
  Track t = fresh_track(10.0, 0.0);
  for (int i = 0; i < 1000; ++i) {
    kf_predict(t, 0.1, cfg);
    Eigen::Matrix<double, 7, 7> R = Eigen::Matrix<double, 7, 7>::Zero();
    R.topLeftCorner<3, 3>() = random_pd(rng);
    R.block<3, 3>(3, 3) = random_pd(rng);
    R(6, 6) = rng.uniform(0.01, 1.0);
    OrientedBox z = box_at(10.0 + rng.normal(0.0, 0.5), rng.normal(0.0, 0.5),
                           rng.uniform(-kPi, kPi));
    kf_update_box(t, z, R);

    const double asym = (t.P - t.P.transpose()).cwiseAbs().maxCoeff();
    REQUIRE(asym < 1e-9);
    Eigen::LLT<StateCov> llt(t.P + 1e-12 * StateCov::Identity());
    REQUIRE(llt.info() == Eigen::Success);
  }
}

TEST_CASE("covariance intersection reproduces the scalar fixture") {
  Eigen::VectorXd x1(1), x2(1), xf;
  Eigen::MatrixXd p1(1, 1), p2(1, 1), pf;
  x1 << 0.0;
  p1 << 1.0;
  x2 << 4.0;
  p2 << 4.0;
  ci_fuse(x1, p1, x2, p2, 0.5, xf, pf);
  CHECK(pf(0, 0) == doctest::Approx(1.6).epsilon(1e-12));
  CHECK(xf(0) == doctest::Approx(0.8).epsilon(1e-12));

  // identical inputs are a fixed point for any weight
  ci_fuse(x2, p2, x2, p2, 0.3, xf, pf);
  CHECK(xf(0) == doctest::Approx(4.0).epsilon(1e-12));
  CHECK(pf(0, 0) == doctest::Approx(4.0).epsilon(1e-12));

  CHECK_THROWS_AS(ci_fuse(x1, p1, x2, p2, -0.1, xf, pf), ConfigError);
  CHECK_THROWS_AS(ci_fuse(x1, p1, x2, p2, 1.1, xf, pf), ConfigError);
}

TEST_CASE("covariance intersection output never claims more information") {
  Rng rng(99);
  for (int trial = 0; trial < 1000; ++trial) {
    const Eigen::Matrix3d p1 = random_pd(rng);
    const Eigen::Matrix3d p2 = random_pd(rng);
    Eigen::VectorXd x1(3), x2(3), xf;
    for (int i = 0; i < 3; ++i) {
      x1(i) = rng.uniform(-5.0, 5.0);
      x2(i) = rng.uniform(-5.0, 5.0);
    }
    const double w = rng.uniform(0.05, 0.95);
    Eigen::MatrixXd pf;
    ci_fuse(x1, p1, x2, p2, w, xf, pf);

    Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> g1(p1 / w - pf.selfadjointView<Eigen::Lower>());
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> g2(p2 / (1.0 - w) -
                                                      pf.selfadjointView<Eigen::Lower>());
    REQUIRE(g1.eigenvalues().minCoeff() > -1e-9);
    REQUIRE(g2.eigenvalues().minCoeff() > -1e-9);
  }
}

TEST_CASE("tracker converges on a constant velocity target") {
  FusionConfig cfg;
  Tracker tracker(cfg, 0.1, TrackPipeline::kLidar);

  double last_x = 0.0;
  for (int f = 0; f < 20; ++f) {
    last_x = 10.0 + 2.0 * (0.1 * f);
    tracker.step({lidar_det(last_x, 0.0)});
  }
  REQUIRE(tracker.tracks().size() == 1);
  const Track& t = tracker.tracks()[0];
  CHECK(t.status == TrackStatus::kConfirmed);
  CHECK(t.id == 1);
  CHECK(std::hypot(t.x(0) - last_x, t.x(1)) <= 0.3);
  CHECK(t.x(3) == doctest::Approx(2.0).epsilon(0.25));
}

TEST_CASE("a one frame spur never confirms and is deleted") {
  FusionConfig cfg;
  Tracker tracker(cfg, 0.1, TrackPipeline::kLidar);
  tracker.step({lidar_det(12.0, 3.0)});
  REQUIRE(tracker.tracks().size() == 1);
  for (int f = 0; f < cfg.delete_misses; ++f) {
    for (const Track& t : tracker.tracks()) REQUIRE(t.status == TrackStatus::kTentative);
    tracker.step({});
  }
  CHECK(tracker.tracks().empty());
}

TEST_CASE("camera hits let the second architecture confirm earlier") {
  FusionConfig cfg;
  CameraModel camera;
  VictimAv av1(AvKind::kAv1, cfg, camera, 0.1);
  VictimAv av2(AvKind::kAv2, cfg, camera, 0.1);

  const OrientedBox box = box_at(15.0, 0.0);
  const std::vector<BoxDetection> lidar = {lidar_det(15.0, 0.0)};
  const std::vector<BoxDetection> cam2d = {cam2d_det(camera, box)};
  REQUIRE(cam2d[0].box2d.has_value());

  CHECK(av1.step(lidar, cam2d, {}).empty());
  CHECK(av2.step(lidar, cam2d, {}).empty());
  CHECK(av1.step(lidar, cam2d, {}).empty());
  CHECK(av2.step(lidar, cam2d, {}).size() == 1);  // lidar 2 + camera 2 hits
  CHECK(av1.step(lidar, cam2d, {}).size() == 1);  // lidar 3 hits
}

TEST_CASE("camera silence deletes an in-fov track under asymmetry vetting") {
  FusionConfig cfg;
  CameraModel camera;
  VictimAv av1(AvKind::kAv1, cfg, camera, 0.1);
  VictimAv av3(AvKind::kAv3, cfg, camera, 0.1);
  VictimAv av3_backed(AvKind::kAv3, cfg, camera, 0.1);
  VictimAv av3_rear(AvKind::kAv3, cfg, camera, 0.1);

  const OrientedBox box = box_at(15.0, 0.0);
  const std::vector<BoxDetection> front = {lidar_det(15.0, 0.0)};
  const std::vector<BoxDetection> rear = {lidar_det(-15.0, 0.0)};
  const std::vector<BoxDetection> cam2d = {cam2d_det(camera, box)};

  // confirm at frame 2, vetting window fills over frames 2..11, axe at 11
  std::vector<Track> got1, got3, got_backed, got_rear;
  for (int f = 0; f < 12; ++f) {
    got1 = av1.step(front, {}, {});
    got3 = av3.step(front, {}, {});
    got_backed = av3_backed.step(front, cam2d, {});
    got_rear = av3_rear.step(rear, {}, {});
    if (f < 11) REQUIRE(got3.size() == got1.size());  // intact until the window fills
  }
  CHECK(got1.size() == 1);        // baseline keeps the lidar-only track
  CHECK(got3.empty());            // vetted away: camera never corroborated
  CHECK(got_backed.size() == 1);  // camera agreement keeps it alive
  CHECK(got_rear.size() == 1);    // behind the camera: vetting does not apply
}

TEST_CASE("track to track fusion merges matches and suppresses one-sided tracks") {
  FusionConfig cfg;
  CameraModel camera;

  Track lid = fresh_track(20.0, 0.0);
  lid.status = TrackStatus::kConfirmed;
  lid.pipeline = TrackPipeline::kLidar;
  lid.hits_lidar = 5;
  Track cam = fresh_track(20.5, 0.0);
  cam.status = TrackStatus::kConfirmed;
  cam.pipeline = TrackPipeline::kCamera3d;
  cam.hits_camera = 4;

  const FusedOutput both = fuse_t2t({lid}, {cam}, camera, cfg);
  REQUIRE(both.output.size() == 1);
  CHECK(both.suppressed.empty());
  CHECK(both.output[0].pipeline == TrackPipeline::kFused);
  CHECK(both.output[0].x(0) == doctest::Approx(20.25).epsilon(1e-9));
  CHECK(both.output[0].hits_camera == 4);

  const FusedOutput lidar_only = fuse_t2t({lid}, {}, camera, cfg);
  CHECK(lidar_only.output.empty());
  REQUIRE(lidar_only.suppressed.size() == 1);
  CHECK(lidar_only.suppressed[0].suppressed);

  Track rear = fresh_track(-20.0, 0.0);
  rear.status = TrackStatus::kConfirmed;
  const FusedOutput outside = fuse_t2t({rear}, {}, camera, cfg);
  REQUIRE(outside.output.size() == 1);
  CHECK(outside.suppressed.empty());

  const FusedOutput cam_only = fuse_t2t({}, {cam}, camera, cfg);
  CHECK(cam_only.output.empty());
  CHECK(cam_only.suppressed.size() == 1);

  Track unconfirmed = fresh_track(20.0, 0.0);
  const FusedOutput tentative = fuse_t2t({unconfirmed}, {}, camera, cfg);
  CHECK(tentative.output.empty());
  CHECK(tentative.suppressed.empty());
}

TEST_CASE("architecture names") {
  CHECK(std::string(av_name(AvKind::kAv1)) == "av1");
  CHECK(std::string(av_name(AvKind::kAv4)) == "av4");
}
