#include "armrl/kinematics.hpp"

#include <cmath>
#include <string>

#include "armrl/error.hpp"

namespace armrl::kinematics {

namespace {
constexpr double kPi = 3.14159265358979323846;
}

DHTable DHTable::ur10e() {
  DHTable t;
  t.joints = {{
      {0.0, 0.1807, kPi / 2, 0.0},
      {-0.6127, 0.0, 0.0, 0.0},
      {-0.57155, 0.0, 0.0, 0.0},
      {0.0, 0.17415, kPi / 2, 0.0},
      {0.0, 0.11985, -kPi / 2, 0.0},
      {0.0, 0.11655, 0.0, 0.0},
  }};
  return t;
}

bool DHTable::is_finite() const {
  for (const auto& j : joints) {
    if (!std::isfinite(j.a) || !std::isfinite(j.d) || !std::isfinite(j.alpha) ||
        !std::isfinite(j.theta_offset)) {
      return false;
    }
  }
  return true;
}

Eigen::Isometry3d Pose::to_isometry() const {
  Eigen::Isometry3d iso = Eigen::Isometry3d::Identity();
  iso.linear() = orientation;
  iso.translation() = position;
  return iso;
}

Pose Pose::from_isometry(const Eigen::Isometry3d& iso) {
  return Pose{iso.translation(), iso.linear()};
}

Pose Pose::operator*(const Pose& other) const {
  return Pose{position + orientation * other.position, orientation * other.orientation};
}

bool WorkspaceLimits::contains(const Eigen::Vector3d& p) const {
  return (p.array() >= min.array()).all() && (p.array() <= max.array()).all();
}

bool JointLimits::contains(const JointState& q) const {
  for (double a : q.angles) {
    if (!(a >= lower && a <= upper)) return false;
  }
  return true;
}

std::string_view joint_name(Joint j) {
  switch (j) {
    case Joint::kBase: return "base";
    case Joint::kShoulder: return "shoulder";
    case Joint::kElbow: return "elbow";
    case Joint::kWrist1: return "wrist1";
    case Joint::kWrist2: return "wrist2";
  }
  return "unknown";
}

DiscreteAction decode_action(int index) {
  if (index < 0 || index >= kNumActions) {
    throw InvalidActionError("action index " + std::to_string(index) + " outside [0, 9]");
  }
  const int joint = index / 2;
  return DiscreteAction{index, static_cast<Joint>(joint), index % 2 == 0 ? 1 : -1,
                        kStepSizes[static_cast<std::size_t>(joint)]};
}

JointState apply_action(const JointState& q, const DiscreteAction& action) {
  JointState next = q;
  next.angles[static_cast<std::size_t>(action.joint)] += action.direction * action.magnitude;
  return next;
}

Eigen::Matrix4d link_transform(const DHJoint& joint, double angle) {
  const double theta = angle + joint.theta_offset;
  const double ct = std::cos(theta), st = std::sin(theta);
  const double ca = std::cos(joint.alpha), sa = std::sin(joint.alpha);
  Eigen::Matrix4d t;
  t << ct, -st * ca, st * sa, joint.a * ct,
       st, ct * ca, -ct * sa, joint.a * st,
       0.0, sa, ca, joint.d,
       0.0, 0.0, 0.0, 1.0;
  return t;
}

Pose forward_kinematics(std::span<const DHJoint> chain, std::span<const double> angles) {
  if (chain.size() != angles.size()) {
    throw ShapeError("forward_kinematics: " + std::to_string(chain.size()) + " links but " +
                     std::to_string(angles.size()) + " angles");
  }
  Eigen::Matrix4d t = Eigen::Matrix4d::Identity();
  for (std::size_t i = 0; i < chain.size(); ++i) t = t * link_transform(chain[i], angles[i]);
  return Pose{t.block<3, 1>(0, 3), t.block<3, 3>(0, 0)};
}

Pose forward_kinematics(const DHTable& dh, const JointState& q) {
  return forward_kinematics(std::span<const DHJoint>(dh.joints), std::span<const double>(q.angles));
}

MoveResult validate_move(const DHTable& dh, const WorkspaceLimits& limits,
                         const JointLimits& joint_limits, const JointState& candidate) {
  if (!joint_limits.contains(candidate)) return MoveResult::kBlocked;
  const Pose pose = forward_kinematics(dh, candidate);
  return limits.contains(pose.position) ? MoveResult::kValid : MoveResult::kBlocked;
}

JointState default_start_pose() {
  return JointState{{kPi, -2.40, 2.45, -3.40, -kPi / 2, 0.0}};
}

}  // namespace armrl::kinematics
