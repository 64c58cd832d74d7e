#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "avsec/geometry.hpp"
#include "avsec/rng.hpp"

using namespace avsec;

TEST_CASE("angle wrapping") {
  CHECK(wrap_two_pi(0.0) == doctest::Approx(0.0));
  CHECK(wrap_two_pi(-0.1) == doctest::Approx(kTwoPi - 0.1));
  CHECK(wrap_two_pi(kTwoPi + 0.25) == doctest::Approx(0.25));
  CHECK(wrap_pi(kPi) == doctest::Approx(kPi));
  CHECK(wrap_pi(kPi + 0.1) == doctest::Approx(-kPi + 0.1));
  CHECK(wrap_pi(-kPi) == doctest::Approx(kPi));
  CHECK(wrap_pi(3.0 * kPi) == doctest::Approx(kPi));
}

TEST_CASE("spherical cartesian round trip") {
  Rng rng(7);
  for (int i = 0; i < 1000; ++i) {
    const double range = rng.uniform(0.1, 120.0);
    const double az = rng.uniform(0.0, kTwoPi - 1e-9);
    const double el = rng.uniform(-1.2, 1.2);
    const Vec3 v = spherical_to_cartesian(range, az, el);
    double r2, az2, el2;
    cartesian_to_spherical(v, r2, az2, el2);
    CHECK(r2 == doctest::Approx(range).epsilon(1e-12));
    CHECK(wrap_pi(az2 - az) == doctest::Approx(0.0).epsilon(1e-9));
    CHECK(el2 == doctest::Approx(el).epsilon(1e-9));
  }
  double r, a, e;
  CHECK_THROWS_AS(cartesian_to_spherical(Vec3{0, 0, 0}, r, a, e), std::domain_error);
}

TEST_CASE("uniform sensor model") {
  const SensorModel s = SensorModel::uniform(32, -30.67, 10.67, 1800, 10.0, 130.0, 1.7);
  REQUIRE(static_cast<int>(s.elevation_angles.size()) == 32);
  CHECK(s.elevation_angles.front() == doctest::Approx(deg2rad(-30.67)));
  CHECK(s.elevation_angles.back() == doctest::Approx(deg2rad(10.67)));
  for (size_t i = 1; i < s.elevation_angles.size(); ++i)
    CHECK(s.elevation_angles[i] > s.elevation_angles[i - 1]);
  CHECK(s.points_per_sweep() == 57600);
  CHECK(s.firing_interval() == doctest::Approx(1.0 / 18000.0));
  CHECK(s.sweep_period() == doctest::Approx(0.1));
  CHECK(expected_azimuth_count(10.0, s.firing_interval()) == 1800);
}

TEST_CASE("grid azimuth is centidegree stable") {
  const SensorModel s = SensorModel::uniform(32, -30.67, 10.67, 1800, 10.0, 130.0, 1.7);
  for (int i : {0, 1, 7, 899, 1799}) {
    const double deg = rad2deg(s.grid_azimuth(i)) * 100.0;
    CHECK(deg == doctest::Approx(std::lround(deg)).epsilon(1e-9));
  }
}

TEST_CASE("nearest azimuth step wraps") {
  const SensorModel s = SensorModel::uniform(32, -30.67, 10.67, 1800, 10.0, 130.0, 1.7);
  CHECK(nearest_azimuth_step(s, 0.0) == 0);
  CHECK(nearest_azimuth_step(s, s.grid_azimuth(431) + 0.4 * s.azimuth_step()) == 431);
  CHECK(nearest_azimuth_step(s, kTwoPi - 0.2 * s.azimuth_step()) == 0);
  CHECK(nearest_azimuth_step(s, deg2rad(359.85)) == 1799);
}

TEST_CASE("nearest channel") {
  const SensorModel s = SensorModel::uniform(4, -30.0, 0.0, 360, 10.0, 100.0, 1.7);
  CHECK(nearest_channel(s, deg2rad(-30.0)) == 0);
  CHECK(nearest_channel(s, deg2rad(-24.0)) == 1);
  CHECK(nearest_channel(s, deg2rad(2.0)) == 3);
  CHECK(nearest_channel(s, deg2rad(-45.0)) == 0);
}

TEST_CASE("expected angle grid enumerates all cells in order") {
  const SensorModel s = SensorModel::uniform(4, -30.0, 0.0, 8, 10.0, 100.0, 1.7);
  const auto grid = expected_angle_grid(s);
  REQUIRE(static_cast<int>(grid.size()) == 32);
  CHECK(grid[0][0] == doctest::Approx(0.0));
  CHECK(grid[0][1] == doctest::Approx(deg2rad(-30.0)));
  CHECK(grid[5][0] == doctest::Approx(s.grid_azimuth(1)));
  CHECK(grid[5][1] == doctest::Approx(s.elevation_angles[1]));
  for (size_t i = 1; i < grid.size(); ++i) {
    const bool az_up = grid[i][0] > grid[i - 1][0];
    const bool same_az_el_up = grid[i][0] == grid[i - 1][0] && grid[i][1] > grid[i - 1][1];
    CHECK((az_up || same_az_el_up));
  }
}

TEST_CASE("vec3 arithmetic") {
  const Vec3 a{1, 2, 3}, b{4, -5, 6};
  CHECK((a + b).y == doctest::Approx(-3.0));
  CHECK((a - b).x == doctest::Approx(-3.0));
  CHECK((a * 2.0).z == doctest::Approx(6.0));
  CHECK(a.dot(b) == doctest::Approx(12.0));
  CHECK(Vec3{3, 4, 0}.norm() == doctest::Approx(5.0));
}
