#pragma once

#include <Eigen/Dense>

#include <optional>
#include <vector>

#include "armrl/image.hpp"
#include "armrl/kinematics.hpp"
#include "armrl/random.hpp"

namespace armrl::scene {

struct Rgb {
  std::uint8_t r = 0, g = 0, b = 0;
  bool operator==(const Rgb&) const = default;
};

/// Flat panel in the base frame. Orientation columns: x = increasing monitor
/// column, y = increasing monitor row, z = plane normal pointing away from the
/// robot. `pose.position` is the world location of pixel (960, 600).
struct MonitorModel {
  static constexpr int kWidth = 1920;
  static constexpr int kHeight = 1200;
  static constexpr double kCenterX = 960.0;
  static constexpr double kCenterY = 600.0;

  kinematics::Pose pose;
  double pixel_pitch = 0.00027;  // m / px
  Rgb background{255, 255, 255};

  /// Monitor `distance` metres from the base along horizontal `azimuth`,
  /// facing the base, centred laterally and vertically on the end-effector
  /// at `start`.
  static MonitorModel facing_base(const kinematics::DHTable& dh, const kinematics::JointState& start,
                                  double distance = 0.70, double azimuth = 0.0);

  /// World point of a monitor-pixel coordinate (plane extends past the panel).
  Eigen::Vector3d to_world(double mx, double my) const;
  bool on_panel(double mx, double my) const;
};

enum class TargetMode { kStatic, kRandomReset, kTracker };

struct TargetState {
  Eigen::Vector2d center{MonitorModel::kCenterX, MonitorModel::kCenterY};
  double radius_px = 60.0;
  Eigen::Vector2d drift = Eigen::Vector2d::Zero();

  bool operator==(const TargetState&) const = default;
};

struct TargetConfig {
  double radius_px = 60.0;
  int reset_margin = 100;
  double drift_speed = 3.0;
};

struct CameraModel {
  static constexpr int kWidth = 400;
  static constexpr int kHeight = 300;

  double focal_px = 900.0;
  Eigen::Vector2d principal_point{200.0, 150.0};
  /// Camera frame relative to the end-effector: z optical axis, x right, y down.
  kinematics::Pose mount;
};

struct ClutterShape {
  enum class Kind { kCircle, kRectangle };
  Kind kind = Kind::kCircle;
  Eigen::Vector2d center = Eigen::Vector2d::Zero();  // monitor-plane pixels
  Eigen::Vector2d size{50.0, 50.0};                  // radius (x only) or half extents
  Rgb color;
};

struct SceneConfig {
  double lighting_min = 0.85;
  double lighting_max = 1.0;
  std::vector<ClutterShape> clutter = default_clutter();
  double noise_std = 2.0;
  Rgb room{110, 110, 110};
  Rgb target_color{255, 20, 20};

  static std::vector<ClutterShape> default_clutter();
};

TargetState reset_target(TargetMode mode, const TargetConfig& cfg, Rng& rng);

TargetState drift_target(const TargetState& t);

struct Projection {
  double u = 0.0;
  double v = 0.0;
  double depth = 0.0;
};

std::optional<Projection> project_point(const CameraModel& cam, const kinematics::Pose& cam_pose,
                                        const Eigen::Vector3d& p_world);

/// World pose of the camera for an end-effector pose.
kinematics::Pose camera_pose(const CameraModel& cam, const kinematics::Pose& ee_pose);

double sample_lighting(const SceneConfig& scene, Rng& rng);

/// Pinhole render of the room, monitor and target. Pixel (x, y) samples the
/// ray through image coordinate (x, y). Brightness is multiplied by
/// `lighting_scale`, then uniform noise with standard deviation
/// `scene.noise_std` is added; one draw from `rng` seeds the noise stream.
Image render(const CameraModel& cam, const kinematics::Pose& cam_pose, const MonitorModel& monitor,
             const TargetState& target, const SceneConfig& scene, double lighting_scale, Rng& rng);

}  // namespace armrl::scene
