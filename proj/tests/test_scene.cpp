#include <doctest.h>

#include <cmath>
#include <numbers>
#include <set>

#include "armrl/scene.hpp"
#include "armrl/vision.hpp"

using namespace armrl;
using namespace armrl::scene;

namespace {

// Camera `depth` metres in front of monitor pixel (mx, my), looking straight at it.
kinematics::Pose head_on(const MonitorModel& m, double depth, double mx = MonitorModel::kCenterX,
                         double my = MonitorModel::kCenterY) {
  kinematics::Pose p;
  p.orientation = m.pose.orientation;
  p.position = m.to_world(mx, my) - depth * m.pose.orientation.col(2);
  return p;
}

MonitorModel test_monitor() {
  return MonitorModel::facing_base(kinematics::DHTable::ur10e(), kinematics::default_start_pose());
}

SceneConfig quiet_scene() {
  SceneConfig s;
  s.noise_std = 0.0;
  return s;
}

std::size_t red_pixels(const Image& img) {
  std::size_t n = 0;
  for (int y = 0; y < img.height(); ++y)
    for (int x = 0; x < img.width(); ++x)
      if (img.at(x, y, Channel::kRed) > 200 && img.at(x, y, Channel::kGreen) < 100 &&
          img.at(x, y, Channel::kBlue) < 100)
        ++n;
  return n;
}

}  // namespace

TEST_CASE("reset_target modes") {
  TargetConfig cfg;
  Rng rng(1);
  TargetState s = reset_target(TargetMode::kStatic, cfg, rng);
  CHECK(s.center == Eigen::Vector2d(960, 600));
  CHECK(s.drift == Eigen::Vector2d::Zero());

  int counts[4] = {0, 0, 0, 0};
  const int n = 10000;
  for (int i = 0; i < n; ++i) {
    s = reset_target(TargetMode::kTracker, cfg, rng);
    CHECK(s.center == Eigen::Vector2d(960, 600));
    if (s.drift == Eigen::Vector2d(3, 0)) ++counts[0];
    else if (s.drift == Eigen::Vector2d(-3, 0)) ++counts[1];
    else if (s.drift == Eigen::Vector2d(0, 3)) ++counts[2];
    else if (s.drift == Eigen::Vector2d(0, -3)) ++counts[3];
  }
  for (int c : counts) CHECK(std::abs(c / double(n) - 0.25) <= 0.02);
  CHECK(counts[0] + counts[1] + counts[2] + counts[3] == n);
}

TEST_CASE("random reset is uniform over the margin box") {
  TargetConfig cfg;
  // 5 x 5 equal-count cells over the integer grid [100,1819] x [100,1099].
  int cells[5][5] = {};
  const int n = 10000;
  for (int seed = 0; seed < n; ++seed) {
    Rng rng(static_cast<std::uint64_t>(seed));
    const TargetState s = reset_target(TargetMode::kRandomReset, cfg, rng);
    REQUIRE(s.center.x() >= 100);
    REQUIRE(s.center.x() <= 1819);
    REQUIRE(s.center.y() >= 100);
    REQUIRE(s.center.y() <= 1099);
    CHECK(s.drift == Eigen::Vector2d::Zero());
    const int cx = static_cast<int>((s.center.x() - 100) / 344);
    const int cy = static_cast<int>((s.center.y() - 100) / 200);
    ++cells[cx][cy];
  }
  double chi2 = 0.0;
  const double expected = n / 25.0;
  for (auto& row : cells)
    for (int c : row) chi2 += (c - expected) * (c - expected) / expected;
  // 1% critical value of chi-square with 24 degrees of freedom.
  CHECK(chi2 < 42.980);
}

TEST_CASE("drift reflection examples") {
  TargetState t;
  t.drift = {3, 0};
  TargetState n = drift_target(t);
  CHECK(n.center == Eigen::Vector2d(963, 600));
  CHECK(n.drift == Eigen::Vector2d(3, 0));

  t.center = {1918, 600};
  n = drift_target(t);
  CHECK(n.center == Eigen::Vector2d(1915, 600));
  CHECK(n.drift == Eigen::Vector2d(-3, 0));

  t.center = {960, 1};
  t.drift = {0, -3};
  n = drift_target(t);
  CHECK(n.center == Eigen::Vector2d(960, 4));
  CHECK(n.drift == Eigen::Vector2d(0, 3));
}

TEST_CASE("project_point pinhole examples") {
  CameraModel cam;
  kinematics::Pose identity;
  auto p = project_point(cam, identity, {0.0, 0.0, 1.0});
  REQUIRE(p);
  CHECK(p->u == 200.0);
  CHECK(p->v == 150.0);
  CHECK(p->depth == 1.0);

  cam.focal_px = 400.0;
  p = project_point(cam, identity, {0.1, 0.0, 1.0});
  REQUIRE(p);
  CHECK(p->u - 200.0 == doctest::Approx(40.0).epsilon(1e-12));

  CHECK_FALSE(project_point(cam, identity, {0.0, 0.0, -0.5}));
}

TEST_CASE("head-on render matches the analytic apparent radius") {
  const MonitorModel m = test_monitor();
  CameraModel cam;
  const TargetState target;
  for (double depth : {0.3, 0.45, 0.6}) {
    Rng rng(5);
    const Image img = render(cam, head_on(m, depth), m, target, quiet_scene(), 1.0, rng);
    const double r = cam.focal_px * target.radius_px * m.pixel_pitch / depth;
    const double area = std::numbers::pi * r * r;
    CHECK(std::abs(red_pixels(img) - area) / area < 0.10);
    // Centroid of red pixels at the principal point.
    double sx = 0, sy = 0, n = 0;
    for (int y = 0; y < img.height(); ++y)
      for (int x = 0; x < img.width(); ++x)
        if (img.at(x, y, Channel::kRed) > 200 && img.at(x, y, Channel::kGreen) < 100) sx += x, sy += y, ++n;
    CHECK(std::abs(sx / n - 199.5) < 0.6);
    CHECK(std::abs(sy / n - 149.5) < 0.6);
  }
}

TEST_CASE("camera turned away sees no target") {
  const MonitorModel m = test_monitor();
  kinematics::Pose p = head_on(m, 0.4);
  p.orientation = p.orientation * Eigen::AngleAxisd(std::numbers::pi, Eigen::Vector3d::UnitY()).toRotationMatrix();
  Rng rng(2);
  const Image img = render(CameraModel{}, p, m, TargetState{}, SceneConfig{}, 1.0, rng);
  CHECK(red_pixels(img) == 0);
}

TEST_CASE("lighting scales every pixel before rounding") {
  const MonitorModel m = test_monitor();
  const CameraModel cam;
  Rng a(3), b(3);
  const Image full = render(cam, head_on(m, 0.4), m, TargetState{}, quiet_scene(), 1.0, a);
  const Image dim = render(cam, head_on(m, 0.4), m, TargetState{}, quiet_scene(), 0.8, b);
  for (std::size_t i = 0; i < full.data().size(); ++i) {
    REQUIRE(dim.data()[i] == std::lround(0.8 * full.data()[i]));
  }
}

TEST_CASE("render is deterministic and noise is seeded") {
  const MonitorModel m = test_monitor();
  const CameraModel cam;
  Rng a(11), b(11), c(12);
  const Image x = render(cam, head_on(m, 0.4), m, TargetState{}, SceneConfig{}, 0.9, a);
  const Image y = render(cam, head_on(m, 0.4), m, TargetState{}, SceneConfig{}, 0.9, b);
  const Image z = render(cam, head_on(m, 0.4), m, TargetState{}, SceneConfig{}, 0.9, c);
  CHECK(x == y);
  CHECK_FALSE(x == z);
}

TEST_CASE("noise has the configured spread") {
  const MonitorModel m = test_monitor();
  SceneConfig noisy;
  noisy.noise_std = 4.0;
  Rng a(7), b(7);
  // Full lighting keeps the clean values integral, so rounding adds no offset.
  const Image clean = render(CameraModel{}, head_on(m, 0.4), m, TargetState{}, quiet_scene(), 1.0, a);
  const Image img = render(CameraModel{}, head_on(m, 0.4), m, TargetState{}, noisy, 1.0, b);
  double s = 0, ss = 0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < img.data().size(); ++i) {
    const int c = clean.data()[i];
    if (c < 20 || c > 235) continue;  // away from clamping
    const double d = double(img.data()[i]) - c;
    s += d;
    ss += d * d;
    ++n;
  }
  const double mean = s / n, sd = std::sqrt(ss / n - mean * mean);
  CHECK(std::abs(mean) < 0.1);
  // Rounding adds about 1/12 variance on top of the configured noise.
  CHECK(sd == doctest::Approx(std::sqrt(16.0 + 1.0 / 12)).epsilon(0.05));
}

TEST_CASE("apparent radius shrinks with distance") {
  const MonitorModel m = test_monitor();
  std::size_t prev = SIZE_MAX;
  for (int k = 0; k < 10; ++k) {
    const double depth = 0.25 + 0.05 * k;
    Rng rng(1);
    const std::size_t n = red_pixels(render(CameraModel{}, head_on(m, depth), m, TargetState{}, quiet_scene(), 1.0, rng));
    CHECK(n < prev);
    prev = n;
  }
}

TEST_CASE("monitor faces the robot at the start pose") {
  const auto dh = kinematics::DHTable::ur10e();
  const auto q = kinematics::default_start_pose();
  const MonitorModel m = MonitorModel::facing_base(dh, q, 0.70, 0.0);
  const Eigen::Vector3d ee = kinematics::forward_kinematics(dh, q).position;
  CHECK(m.pose.position.x() == doctest::Approx(0.70));
  CHECK(m.pose.position.y() == doctest::Approx(ee.y()));
  CHECK(m.pose.position.z() == doctest::Approx(ee.z()));
  CHECK(m.pose.orientation.determinant() == doctest::Approx(1.0));
  CHECK(m.on_panel(0, 0));
  CHECK_FALSE(m.on_panel(1920, 600));
}
