#pragma once

#include <Eigen/Dense>

#include <array>
#include <span>
#include <string_view>
#include <vector>

namespace armrl::kinematics {

inline constexpr int kNumJoints = 6;
inline constexpr int kNumActuatedJoints = 5;
inline constexpr int kNumActions = 2 * kNumActuatedJoints;

/// One row of a standard Denavit-Hartenberg table:
/// T = Rot_z(q + theta_offset) * Trans_z(d) * Trans_x(a) * Rot_x(alpha).
struct DHJoint {
  double a = 0.0;      // link length [m]
  double d = 0.0;      // link offset [m]
  double alpha = 0.0;  // twist [rad]
  double theta_offset = 0.0;
};

struct DHTable {
  std::array<DHJoint, kNumJoints> joints{};

  /// UR10e-class arm (base, shoulder, elbow, wrist 1-3).
  static DHTable ur10e();
  bool is_finite() const;
};

struct JointState {
  std::array<double, kNumJoints> angles{};

  bool operator==(const JointState&) const = default;
};

struct Pose {
  Eigen::Vector3d position = Eigen::Vector3d::Zero();
  Eigen::Matrix3d orientation = Eigen::Matrix3d::Identity();

  Eigen::Isometry3d to_isometry() const;
  static Pose from_isometry(const Eigen::Isometry3d& iso);
  /// Composition: this * other (other expressed in this frame).
  Pose operator*(const Pose& other) const;
};

/// Axis-aligned Cartesian box in the base frame. Closed: faces count as inside.
struct WorkspaceLimits {
  Eigen::Vector3d min{-0.30, -0.60, 0.30};
  Eigen::Vector3d max{0.55, 0.90, 1.30};

  bool contains(const Eigen::Vector3d& p) const;
};

struct JointLimits {
  double lower = -2.0 * 3.14159265358979323846;
  double upper = 2.0 * 3.14159265358979323846;

  bool contains(const JointState& q) const;
};

enum class Joint { kBase = 0, kShoulder, kElbow, kWrist1, kWrist2 };

std::string_view joint_name(Joint j);

/// Decoded discrete action: rotate one joint by direction * magnitude.
struct DiscreteAction {
  int index = 0;
  Joint joint = Joint::kBase;
  int direction = 1;  // +1 or -1
  double magnitude = 0.0;
};

/// Per-joint step sizes in radians, indexed by Joint.
inline constexpr std::array<double, kNumActuatedJoints> kStepSizes{0.025, 0.02, 0.02, 0.015, 0.015};

/// Index 2k -> (joint k, +1), 2k+1 -> (joint k, -1). Throws InvalidActionError
/// outside [0, 9].
DiscreteAction decode_action(int index);

JointState apply_action(const JointState& q, const DiscreteAction& action);

/// General chain: one angle per table row. Used directly by tests with short
/// planar chains; the 6-DOF overload is the normal entry point.
Pose forward_kinematics(std::span<const DHJoint> chain, std::span<const double> angles);
Pose forward_kinematics(const DHTable& dh, const JointState& q);

/// Single DH link transform as a homogeneous matrix.
Eigen::Matrix4d link_transform(const DHJoint& joint, double angle);

enum class MoveResult { kValid, kBlocked };

MoveResult validate_move(const DHTable& dh, const WorkspaceLimits& limits,
                         const JointLimits& joint_limits, const JointState& candidate);

inline MoveResult validate_move(const DHTable& dh, const WorkspaceLimits& limits,
                                const JointState& candidate) {
  return validate_move(dh, limits, JointLimits{}, candidate);
}

/// Start configuration: camera pitched up from the monitor so the target
/// begins just below the frame, a few steps from the goal region.
JointState default_start_pose();

}  // namespace armrl::kinematics
