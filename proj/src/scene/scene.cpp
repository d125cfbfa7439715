#include "armrl/scene.hpp"

#include <algorithm>
#include <array>
#include <cmath>

namespace armrl::scene {

using kinematics::Pose;

MonitorModel MonitorModel::facing_base(const kinematics::DHTable& dh, const kinematics::JointState& start,
                                       double distance, double azimuth) {
  const Eigen::Vector3d axis(std::cos(azimuth), std::sin(azimuth), 0.0);
  const Eigen::Vector3d ee = kinematics::forward_kinematics(dh, start).position;
  Eigen::Vector3d horizontal(ee.x(), ee.y(), 0.0);
  const Eigen::Vector3d lateral = horizontal - horizontal.dot(axis) * axis;

  MonitorModel m;
  m.pose.position = distance * axis + lateral + Eigen::Vector3d(0.0, 0.0, ee.z());
  const Eigen::Vector3d down(0.0, 0.0, -1.0);
  m.pose.orientation.col(0) = down.cross(axis);
  m.pose.orientation.col(1) = down;
  m.pose.orientation.col(2) = axis;
  return m;
}

Eigen::Vector3d MonitorModel::to_world(double mx, double my) const {
  return pose.position + pose.orientation.col(0) * ((mx - kCenterX) * pixel_pitch) +
         pose.orientation.col(1) * ((my - kCenterY) * pixel_pitch);
}

bool MonitorModel::on_panel(double mx, double my) const {
  return mx >= -0.5 && mx <= kWidth - 0.5 && my >= -0.5 && my <= kHeight - 0.5;
}

std::vector<ClutterShape> SceneConfig::default_clutter() {
  using K = ClutterShape::Kind;
  return {
      {K::kCircle, {700.0, -420.0}, {160.0, 160.0}, {160, 160, 160}},
      {K::kRectangle, {2350.0, 400.0}, {180.0, 220.0}, {40, 70, 200}},
      {K::kRectangle, {-400.0, 900.0}, {200.0, 150.0}, {230, 210, 60}},
  };
}

TargetState reset_target(TargetMode mode, const TargetConfig& cfg, Rng& rng) {
  TargetState t;
  t.radius_px = cfg.radius_px;
  switch (mode) {
    case TargetMode::kStatic:
      break;
    case TargetMode::kRandomReset: {
      const int m = cfg.reset_margin;
      t.center.x() = static_cast<double>(uniform_int(rng, m, MonitorModel::kWidth - 1 - m));
      t.center.y() = static_cast<double>(uniform_int(rng, m, MonitorModel::kHeight - 1 - m));
      break;
    }
    case TargetMode::kTracker: {
      const double s = cfg.drift_speed;
      static constexpr int kDirs[4][2] = {{1, 0}, {-1, 0}, {0, 1}, {0, -1}};
      const auto k = uniform_index(rng, 4);
      t.drift = Eigen::Vector2d(kDirs[k][0] * s, kDirs[k][1] * s);
      break;
    }
  }
  return t;
}

TargetState drift_target(const TargetState& t) {
  TargetState next = t;
  const double limits[2] = {MonitorModel::kWidth - 1.0, MonitorModel::kHeight - 1.0};
  for (int axis = 0; axis < 2; ++axis) {
    const double moved = next.center[axis] + next.drift[axis];
    if (moved < 0.0 || moved > limits[axis]) next.drift[axis] = -next.drift[axis];
    next.center[axis] += next.drift[axis];
  }
  return next;
}

std::optional<Projection> project_point(const CameraModel& cam, const Pose& cam_pose,
                                        const Eigen::Vector3d& p_world) {
  const Eigen::Vector3d pc = cam_pose.orientation.transpose() * (p_world - cam_pose.position);
  if (pc.z() <= 0.0) return std::nullopt;
  return Projection{cam.principal_point.x() + cam.focal_px * pc.x() / pc.z(),
                    cam.principal_point.y() + cam.focal_px * pc.y() / pc.z(), pc.z()};
}

Pose camera_pose(const CameraModel& cam, const Pose& ee_pose) { return ee_pose * cam.mount; }

double sample_lighting(const SceneConfig& scene, Rng& rng) {
  return uniform_real(rng, scene.lighting_min, scene.lighting_max);
}

namespace {

// Topmost clutter shape covering a plane point (later shapes draw over
// earlier ones), or -1.
int clutter_at(const ClutterShape* clutter, int count, double mx, double my) {
  for (int i = count - 1; i >= 0; --i) {
    const ClutterShape& c = clutter[i];
    const double dx = mx - c.center.x();
    const double dy = my - c.center.y();
    if (c.kind == ClutterShape::Kind::kCircle) {
      if (dx * dx + dy * dy <= c.size.x() * c.size.x()) return i;
    } else if (std::abs(dx) <= c.size.x() && std::abs(dy) <= c.size.y()) {
      return i;
    }
  }
  return -1;
}

// 2^20 samples, uniform on (-sqrt(3), sqrt(3)) so unit standard deviation,
// stored in 1/256 units.
const std::vector<std::int32_t>& noise_table() {
  static const std::vector<std::int32_t> table = [] {
    std::vector<std::int32_t> t(std::size_t{1} << 20);
    SplitMix64 gen{0x5eed0f1a5c3e7ULL};
    const double amp = 256.0 * std::sqrt(3.0);
    for (auto& v : t) {
      const double u = (static_cast<double>(gen.next() >> 11) + 0.5) * 0x1.0p-53;
      v = static_cast<std::int32_t>(std::lround(amp * (2.0 * u - 1.0)));
    }
    return t;
  }();
  return table;
}

}  // namespace

Image render(const CameraModel& cam, const Pose& cam_pose, const MonitorModel& monitor,
             const TargetState& target, const SceneConfig& scene, double lighting_scale, Rng& rng) {
  constexpr int W = CameraModel::kWidth;
  constexpr int H = CameraModel::kHeight;
  Image img(W, H);

  const Eigen::Matrix3d& rc = cam_pose.orientation;
  const Eigen::Vector3d& n = monitor.pose.orientation.col(2);
  const Eigen::Vector3d& ex = monitor.pose.orientation.col(0);
  const Eigen::Vector3d& ey = monitor.pose.orientation.col(1);
  const Eigen::Vector3d rel = cam_pose.position - monitor.pose.position;
  const double num = -n.dot(rel);
  const double inv_pitch = 1.0 / monitor.pixel_pitch;
  const double px0 = ex.dot(rel), py0 = ey.dot(rel);

  // ray(x, y) = rc * (x - cx, y - cy, f); every projection onto a fixed
  // axis is affine in (x, y).
  auto affine = [&](const Eigen::Vector3d& axis) {
    const Eigen::Vector3d a = rc.transpose() * axis;
    return Eigen::Vector3d(a.x(), a.y(), a.z() * cam.focal_px - a.x() * cam.principal_point.x() -
                                              a.y() * cam.principal_point.y());
  };
  const Eigen::Vector3d den_c = affine(n), ex_c = affine(ex), ey_c = affine(ey);
  const double r2 = target.radius_px * target.radius_px;

  // Pass 1: palette index per pixel. 0 = room, 1 = panel, 2 = target, 3+ = clutter.
  std::vector<Rgb> palette{scene.room, monitor.background, scene.target_color};
  for (const auto& k : scene.clutter) palette.push_back(k.color);
  std::vector<std::uint8_t> label(static_cast<std::size_t>(W) * H, 0);
  std::uint8_t* out = label.data();
  const ClutterShape* shapes = scene.clutter.data();
  const int num_shapes = static_cast<int>(scene.clutter.size());
  // Plain scalars: the byte stores below could otherwise alias these.
  const double dnx = den_c.x(), dny = den_c.y(), dn0 = den_c.z();
  const double ax = ex_c.x(), ay = ex_c.y(), a0 = ex_c.z();
  const double bx = ey_c.x(), by = ey_c.y(), b0 = ey_c.z();
  const double tx = target.center.x(), ty = target.center.y();
  const double mx0 = MonitorModel::kCenterX + px0 * inv_pitch, my0 = MonitorModel::kCenterY + py0 * inv_pitch;
  for (int y = 0; y < H; ++y) {
    double den = dny * y + dn0;
    double pa = ay * y + a0;
    double pb = by * y + b0;
    for (int x = 0; x < W; ++x, ++out, den += dnx, pa += ax, pb += bx) {
      const double t = num / den;
      if (den == 0.0 || !(t > 0.0)) continue;
      const double ti = t * inv_pitch;
      const double mx = mx0 + ti * pa;
      const double my = my0 + ti * pb;
      if (mx >= -0.5 && mx <= MonitorModel::kWidth - 0.5 && my >= -0.5 && my <= MonitorModel::kHeight - 0.5) {
        const double dx = mx - tx, dy = my - ty;
        *out = dx * dx + dy * dy <= r2 ? 2 : 1;
      } else if (const int k = clutter_at(shapes, num_shapes, mx, my); k >= 0) {
        *out = static_cast<std::uint8_t>(3 + k);
      }
    }
  }

  // Pass 2: lighting, noise, rounding to nearest. Arithmetic is fixed point
  // in 1/256 intensity units. Noise is read from a fixed unit-variance table
  // starting at an offset drawn from `rng`.
  std::vector<std::array<std::int32_t, 3>> lit(palette.size());
  for (std::size_t i = 0; i < palette.size(); ++i) {
    const Rgb& c = palette[i];
    lit[i] = {static_cast<std::int32_t>(std::lround(256.0 * lighting_scale * c.r)),
              static_cast<std::int32_t>(std::lround(256.0 * lighting_scale * c.g)),
              static_cast<std::int32_t>(std::lround(256.0 * lighting_scale * c.b))};
  }
  const std::vector<std::int32_t>& table = noise_table();
  const std::size_t table_size = table.size();
  std::size_t offset = static_cast<std::size_t>(rng()) & (table_size - 1);
  const std::int32_t sigma_q = static_cast<std::int32_t>(std::lround(256.0 * scene.noise_std));

  const std::size_t samples = label.size() * 3;
  std::vector<std::int32_t> value(samples);
  {
    std::int32_t* v = value.data();
    const std::uint8_t* labels = label.data();
    const std::array<std::int32_t, 3>* shade = lit.data();
    for (std::size_t i = 0; i < label.size(); ++i, v += 3) {
      const std::int32_t* c = shade[labels[i]].data();
      v[0] = c[0];
      v[1] = c[1];
      v[2] = c[2];
    }
  }
  std::int32_t* v = value.data();
  if (sigma_q > 0) {
    // The table wraps, so the span may split into two contiguous pieces.
    for (std::size_t done = 0; done < samples;) {
      const std::size_t len = std::min(samples - done, table_size - offset);
      const std::int32_t* noise = table.data() + offset;
      std::int32_t* dst = v + done;
      for (std::size_t j = 0; j < len; ++j) dst[j] += (noise[j] * sigma_q) >> 8;
      done += len;
      offset = 0;
    }
  }
  std::uint8_t* px = img.data().data();
  for (std::size_t j = 0; j < samples; ++j) {
    const std::int32_t i = (v[j] + 128) >> 8;
    px[j] = static_cast<std::uint8_t>(i < 0 ? 0 : (i > 255 ? 255 : i));
  }
  return img;
}

}  // namespace armrl::scene
