#include "armrl/env.hpp"

#include <cmath>
#include <string>

#include "armrl/error.hpp"

namespace armrl::env {

scene::TargetMode target_mode(Variant v) {
  switch (v) {
    case Variant::kStaticReacher: return scene::TargetMode::kStatic;
    case Variant::kReacher: return scene::TargetMode::kRandomReset;
    case Variant::kTracker: return scene::TargetMode::kTracker;
  }
  return scene::TargetMode::kStatic;
}

void EnvConfig::validate() const {
  auto fail = [](const std::string& what) { throw ConfigError("invalid env config: " + what); };
  if (max_episode_steps <= 0) fail("max_episode_steps must be positive");
  if (!(min_radius < goal_radius && goal_radius < max_radius)) fail("need min_radius < goal_radius < max_radius");
  if (!(max_dist > 0.0)) fail("max_dist must be positive");
  const double half_diag = std::hypot(kFrameCenterX, kFrameCenterY);
  if (std::abs(max_dist - half_diag) > 1e-9) {
    fail("max_dist must equal the frame half-diagonal (" + std::to_string(half_diag) + ")");
  }
  if (!dh.is_finite()) fail("DH table has non-finite entries");
  if (!(workspace.min.array() < workspace.max.array()).all()) fail("workspace min must be < max");
  for (double a : start_pose.angles) {
    if (!std::isfinite(a)) fail("start_pose has non-finite entries");
  }
  if (!(camera.focal_px > 0.0)) fail("camera focal_px must be positive");
  if (!(scene.lighting_min > 0.0 && scene.lighting_min <= scene.lighting_max && scene.lighting_max <= 1.0)) {
    fail("lighting range must satisfy 0 < lo <= hi <= 1");
  }
  if (scene.noise_std < 0.0) fail("noise_std must be non-negative");
  if (monitor && !(monitor->pixel_pitch > 0.0)) fail("pixel_pitch must be positive");
  if (hough.accumulator_scale < 1 || hough.min_center_dist <= 0.0 || hough.edge_threshold < 1 ||
      hough.vote_threshold <= 0.0) {
    fail("hough parameters must be positive");
  }
  if (kinematics::validate_move(dh, workspace, joint_limits, start_pose) == kinematics::MoveResult::kBlocked) {
    fail("start_pose lies outside the workspace limits");
  }
}

scene::MonitorModel EnvConfig::resolved_monitor() const {
  if (monitor) return *monitor;
  return scene::MonitorModel::facing_base(dh, start_pose, monitor_distance, monitor_azimuth);
}

bool is_goal(const vision::Detection& d, const EnvConfig& cfg) {
  const double dist = std::hypot(d.center.x() - kFrameCenterX, d.center.y() - kFrameCenterY);
  return d.radius > cfg.goal_radius && dist < cfg.goal_dist;
}

double compute_reward(const std::optional<vision::Detection>& d, bool blocked, const EnvConfig& cfg) {
  double reward;
  if (!d) {
    reward = cfg.out_of_frame_reward;
  } else if (is_goal(*d, cfg)) {
    reward = cfg.goal_reward;
  } else {
    const double dist = std::hypot(d->center.x() - kFrameCenterX, d->center.y() - kFrameCenterY);
    const double dist_reward = -1.0 * dist / cfg.max_dist;
    const double radius_reward = (d->radius - cfg.max_radius) / (cfg.max_radius - cfg.min_radius);
    reward = radius_reward + dist_reward;
  }
  if (blocked) reward -= cfg.block_penalty;
  return reward;
}

FeatureVector observe_features(const kinematics::JointState& joints, const std::optional<vision::Detection>& d,
                               const EnvConfig& cfg) {
  FeatureVector f(kFeatureSize, 0.0);
  // Joint angles are encoded relative to the start pose so inputs start near zero.
  for (int j = 0; j < kinematics::kNumActuatedJoints; ++j) {
    const auto k = static_cast<std::size_t>(j);
    f[k] = joints.angles[k] - cfg.start_pose.angles[k];
  }
  if (d) {
    f[5] = 1.0;
    f[6] = (d->center.x() - kFrameCenterX) / kFrameCenterX;
    f[7] = (d->center.y() - kFrameCenterY) / kFrameCenterY;
    f[8] = d->radius / cfg.max_radius;
  }
  return f;
}

Environment::Environment(EnvConfig cfg) : cfg_(std::move(cfg)) {
  cfg_.validate();
  monitor_ = cfg_.resolved_monitor();
  joints_ = cfg_.start_pose;
}

void Environment::capture() {
  const kinematics::Pose ee = kinematics::forward_kinematics(cfg_.dh, joints_);
  frame_ = scene::render(cfg_.camera, scene::camera_pose(cfg_.camera, ee), monitor_, target_, cfg_.scene, lighting_,
                         rng_);
  detection_ = vision::detect_target(frame_, cfg_.cutoffs, cfg_.hough);
}

Observation Environment::observation() const {
  if (cfg_.observation_mode == ObservationMode::kImage) return frame_;
  return observe_features(joints_, detection_, cfg_);
}

Observation Environment::reset(std::uint64_t seed) {
  rng_.seed(seed);
  joints_ = cfg_.start_pose;
  target_ = scene::reset_target(target_mode(cfg_.variant), cfg_.target, rng_);
  step_count_ = 0;
  lighting_ = scene::sample_lighting(cfg_.scene, rng_);
  started_ = true;
  done_ = false;
  capture();
  return observation();
}

StepResult Environment::step(int action) {
  if (!started_) throw UsageError("step() called before reset()");
  if (done_) throw UsageError("step() called on a finished episode; call reset()");
  const kinematics::DiscreteAction a = kinematics::decode_action(action);

  StepResult result;
  const kinematics::JointState candidate = kinematics::apply_action(joints_, a);
  result.info.blocked =
      kinematics::validate_move(cfg_.dh, cfg_.workspace, cfg_.joint_limits, candidate) == kinematics::MoveResult::kBlocked;
  if (!result.info.blocked) joints_ = candidate;
  if (cfg_.variant == Variant::kTracker) target_ = scene::drift_target(target_);
  capture();
  ++step_count_;

  result.info.detection = detection_;
  result.reward = compute_reward(detection_, result.info.blocked, cfg_);
  result.terminated = detection_.has_value() && is_goal(*detection_, cfg_);
  result.truncated = !result.terminated && step_count_ >= cfg_.max_episode_steps;
  result.observation = observation();
  done_ = result.terminated || result.truncated;
  return result;
}

}  // namespace armrl::env
