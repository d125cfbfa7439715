#include <doctest.h>

#include <cmath>

#include "armrl/random.hpp"
#include "armrl/scene.hpp"
#include "armrl/vision.hpp"

using namespace armrl;
using namespace armrl::vision;

namespace {

BinaryMask disc_mask(int w, int h, double cx, double cy, double r) {
  BinaryMask m(w, h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) m.set(x, y, (x - cx) * (x - cx) + (y - cy) * (y - cy) <= r * r);
  return m;
}

void paint_disc(Image& img, double cx, double cy, double r, std::uint8_t red, std::uint8_t green,
                std::uint8_t blue) {
  for (int y = 0; y < img.height(); ++y)
    for (int x = 0; x < img.width(); ++x)
      if ((x - cx) * (x - cx) + (y - cy) * (y - cy) <= r * r) img.set(x, y, red, green, blue);
}

Image filled(int w, int h, std::uint8_t v) {
  Image img(w, h);
  std::fill(img.data().begin(), img.data().end(), v);
  return img;
}

scene::MonitorModel test_monitor() {
  return scene::MonitorModel::facing_base(kinematics::DHTable::ur10e(), kinematics::default_start_pose());
}

kinematics::Pose head_on(const scene::MonitorModel& m, double depth, double mx, double my) {
  kinematics::Pose p;
  p.orientation = m.pose.orientation;
  p.position = m.to_world(mx, my) - depth * m.pose.orientation.col(2);
  return p;
}

}  // namespace

TEST_CASE("threshold_channel keeps intensities at or above the cutoff") {
  Image img(3, 1);
  img.set(0, 0, 199, 0, 0);
  img.set(1, 0, 200, 255, 0);
  img.set(2, 0, 255, 0, 201);
  const BinaryMask red = threshold_channel(img, Channel::kRed, 200);
  CHECK_FALSE(red.get(0, 0));
  CHECK(red.get(1, 0));
  CHECK(red.get(2, 0));
  const BinaryMask green = threshold_channel(img, Channel::kGreen, 200);
  CHECK(green.count() == 1);
  CHECK(green.get(1, 0));
  const BinaryMask blue = threshold_channel(img, Channel::kBlue, 200);
  CHECK(blue.count() == 1);
  CHECK(blue.get(2, 0));
}

TEST_CASE("isolate_target is red and not green and not blue") {
  Image img(6, 1);
  img.set(0, 0, 255, 20, 20);    // target red
  img.set(1, 0, 255, 255, 255);  // white
  img.set(2, 0, 230, 210, 60);   // yellow
  img.set(3, 0, 255, 0, 255);    // magenta
  img.set(4, 0, 150, 0, 0);      // dark red
  img.set(5, 0, 200, 199, 199);  // boundary case
  const BinaryMask m = isolate_target(img, ChannelCutoffs{});
  CHECK(m.get(0, 0));
  CHECK_FALSE(m.get(1, 0));
  CHECK_FALSE(m.get(2, 0));
  CHECK_FALSE(m.get(3, 0));
  CHECK_FALSE(m.get(4, 0));
  CHECK(m.get(5, 0));

  for (std::uint8_t v : {0, 128, 255}) CHECK(isolate_target(filled(20, 10, v), ChannelCutoffs{}).count() == 0);
}

TEST_CASE("boundary_pixels of small masks") {
  BinaryMask single(5, 5);
  single.set(2, 2, true);
  CHECK(boundary_pixels(single, 1).size() == 1);
  CHECK(boundary_pixels(single, 4).size() == 1);

  BinaryMask block(7, 7);
  for (int y = 1; y <= 5; ++y)
    for (int x = 1; x <= 5; ++x) block.set(x, y, true);
  CHECK(boundary_pixels(block, 1).size() == 16);  // 5x5 square ring
  CHECK(boundary_pixels(block, 2).size() == 4);   // corners only
  CHECK(boundary_pixels(block, 3).empty());

  // Frame borders do not count as outside.
  BinaryMask full(4, 4);
  std::fill(full.bits().begin(), full.bits().end(), 1);
  CHECK(boundary_pixels(full, 1).empty());
}

TEST_CASE("ideal_boundary_count matches a direct count") {
  for (int r = 1; r <= kMaxRadius; ++r) {
    int n = 0;
    auto inside = [r](int x, int y) { return x * x + y * y <= r * r; };
    for (int y = -r; y <= r; ++y)
      for (int x = -r; x <= r; ++x)
        if (inside(x, y) && (!inside(x + 1, y) || !inside(x - 1, y) || !inside(x, y + 1) || !inside(x, y - 1))) ++n;
    CHECK(ideal_boundary_count(r) == n);
  }
}

TEST_CASE("hough_circles on an empty mask") {
  CHECK(hough_circles(BinaryMask(400, 300), HoughConfig{}).empty());
}

TEST_CASE("hough_circles recovers random synthetic discs") {
  Rng rng(7);
  const HoughConfig cfg;
  int found = 0;
  double worst_center = 0.0, worst_radius = 0.0;
  const int n = 150;
  for (int i = 0; i < n; ++i) {
    const double r = uniform_real(rng, 12.0, 38.0);
    const double cx = uniform_real(rng, r, 400 - r);
    const double cy = uniform_real(rng, r, 300 - r);
    const auto dets = hough_circles(disc_mask(400, 300, cx, cy, r), cfg);
    if (dets.empty()) continue;
    ++found;
    CHECK(dets.size() == 1);
    worst_center = std::max(worst_center, (dets[0].center - Eigen::Vector2d(cx, cy)).norm());
    worst_radius = std::max(worst_radius, std::abs(dets[0].radius - r));
  }
  CHECK(found == n);
  CHECK(worst_center <= 1.5);
  CHECK(worst_radius <= 1.5);
}

TEST_CASE("hough_circles finds discs clipped by the frame edge") {
  const auto dets = hough_circles(disc_mask(400, 300, 5.0, 150.0, 25.0), HoughConfig{});
  REQUIRE(dets.size() == 1);
  CHECK((dets[0].center - Eigen::Vector2d(5, 150)).norm() <= 1.5);
  CHECK(std::abs(dets[0].radius - 25.0) <= 1.5);
}

TEST_CASE("hough_circles suppresses neighbours and keeps distant discs") {
  BinaryMask m = disc_mask(400, 300, 100, 100, 20);
  const BinaryMask b = disc_mask(400, 300, 300, 200, 30);
  for (std::size_t i = 0; i < m.bits().size(); ++i) m.bits()[i] |= b.bits()[i];
  const auto dets = hough_circles(m, HoughConfig{});
  REQUIRE(dets.size() == 2);
  CHECK(dets[0].votes >= dets[1].votes);
  // The larger disc has more boundary pixels, so it ranks first.
  CHECK((dets[0].center - Eigen::Vector2d(300, 200)).norm() <= 1.5);
  CHECK((dets[1].center - Eigen::Vector2d(100, 100)).norm() <= 1.5);
}

TEST_CASE("hough_circles rejects non-circular blobs") {
  BinaryMask bar(400, 300);
  for (int y = 140; y < 160; ++y)
    for (int x = 20; x < 380; ++x) bar.set(x, y, true);
  CHECK(hough_circles(bar, HoughConfig{}).empty());

  BinaryMask speckle(400, 300);
  Rng rng(3);
  for (int i = 0; i < 600; ++i) speckle.set(uniform_int(rng, 0, 399), uniform_int(rng, 0, 299), true);
  CHECK(hough_circles(speckle, HoughConfig{}).empty());
}

TEST_CASE("raising the vote threshold above one rejects everything") {
  HoughConfig cfg;
  cfg.vote_threshold = 1.01;
  CHECK(hough_circles(disc_mask(400, 300, 200, 150, 20), cfg).empty());
}

TEST_CASE("detect_target ignores coloured distractors") {
  Image img = filled(400, 300, 110);
  paint_disc(img, 80, 80, 30, 230, 210, 60);    // yellow
  paint_disc(img, 320, 80, 30, 255, 255, 255);  // white
  paint_disc(img, 80, 220, 30, 40, 70, 200);    // blue
  CHECK_FALSE(detect_target(img, ChannelCutoffs{}, HoughConfig{}));
  paint_disc(img, 300, 210, 22, 255, 20, 20);
  const auto det = detect_target(img, ChannelCutoffs{}, HoughConfig{});
  REQUIRE(det);
  CHECK((det->center - Eigen::Vector2d(300, 210)).norm() <= 1.5);
  CHECK(std::abs(det->radius - 22) <= 1.5);
}

TEST_CASE("detect_target on rendered frames agrees with the projection") {
  const scene::MonitorModel monitor = test_monitor();
  const scene::CameraModel cam;
  scene::SceneConfig sc;
  Rng rng(11);
  int checked = 0;
  for (int i = 0; i < 20; ++i) {
    scene::TargetState target;
    target.center = {uniform_real(rng, 300, 1620), uniform_real(rng, 250, 950)};
    // View the target off-centre so it does not always land in the middle.
    const double mx = target.center.x() + uniform_real(rng, -150, 150);
    const double my = target.center.y() + uniform_real(rng, -100, 100);
    const kinematics::Pose cam_pose = head_on(monitor, uniform_real(rng, 0.45, 0.8), mx, my);
    const double lighting = uniform_real(rng, 0.85, 1.0);
    const Image img = scene::render(cam, cam_pose, monitor, target, sc, lighting, rng);

    const auto c = scene::project_point(cam, cam_pose, monitor.to_world(target.center.x(), target.center.y()));
    const auto e = scene::project_point(cam, cam_pose,
                                        monitor.to_world(target.center.x() + target.radius_px, target.center.y()));
    REQUIRE(c);
    REQUIRE(e);
    const double radius = std::hypot(e->u - c->u, e->v - c->v);
    const auto det = detect_target(img, ChannelCutoffs{}, HoughConfig{});
    if (radius < kMinRadius || radius > kMaxRadius) continue;
    REQUIRE(det);
    CHECK(std::hypot(det->center.x() - c->u, det->center.y() - c->v) <= 2.0);
    CHECK(std::abs(det->radius - radius) <= 2.0);
    ++checked;
  }
  CHECK(checked >= 15);
}

TEST_CASE("rendered clutter alone yields no detection") {
  const scene::MonitorModel monitor = test_monitor();
  const scene::CameraModel cam;
  const scene::SceneConfig sc;
  scene::TargetState target;
  target.center = {1800, 1100};
  Rng rng(5);
  for (const auto& shape : sc.clutter) {
    const kinematics::Pose cam_pose = head_on(monitor, 0.6, shape.center.x(), shape.center.y());
    const Image img = scene::render(cam, cam_pose, monitor, target, sc, 1.0, rng);
    CHECK_FALSE(detect_target(img, ChannelCutoffs{}, HoughConfig{}));
  }
}
