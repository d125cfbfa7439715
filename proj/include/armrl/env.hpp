#pragma once

#include <optional>
#include <variant>
#include <vector>

#include "armrl/image.hpp"
#include "armrl/kinematics.hpp"
#include "armrl/random.hpp"
#include "armrl/scene.hpp"
#include "armrl/vision.hpp"

namespace armrl::env {

enum class Variant { kStaticReacher, kReacher, kTracker };
enum class ObservationMode { kImage, kFeatures };

scene::TargetMode target_mode(Variant v);

/// Frame geometry the reward is defined against.
inline constexpr double kFrameCenterX = scene::CameraModel::kWidth / 2.0;
inline constexpr double kFrameCenterY = scene::CameraModel::kHeight / 2.0;

struct EnvConfig {
  Variant variant = Variant::kStaticReacher;
  ObservationMode observation_mode = ObservationMode::kImage;
  int max_episode_steps = 150;
  double goal_reward = 20.0;
  double out_of_frame_reward = -0.01;
  double block_penalty = 1.0;
  double goal_radius = 30.0;
  double goal_dist = 70.0;
  double max_dist = 250.0;
  double max_radius = 40.0;
  double min_radius = 10.0;
  kinematics::JointState start_pose = kinematics::default_start_pose();

  kinematics::DHTable dh = kinematics::DHTable::ur10e();
  kinematics::WorkspaceLimits workspace;
  kinematics::JointLimits joint_limits;
  /// Unset: derived from `dh` and `start_pose` via MonitorModel::facing_base.
  std::optional<scene::MonitorModel> monitor;
  double monitor_distance = 0.70;
  double monitor_azimuth = 0.0;
  scene::CameraModel camera;
  scene::SceneConfig scene;
  scene::TargetConfig target;
  vision::ChannelCutoffs cutoffs;
  vision::HoughConfig hough;

  /// Throws ConfigError naming the first violated invariant.
  void validate() const;
  scene::MonitorModel resolved_monitor() const;
};

inline constexpr int kFeatureSize = kinematics::kNumActuatedJoints + 4;

using FeatureVector = std::vector<double>;
using Observation = std::variant<Image, FeatureVector>;

struct StepInfo {
  std::optional<vision::Detection> detection;
  bool blocked = false;
};

struct StepResult {
  Observation observation;
  double reward = 0.0;
  bool terminated = false;
  bool truncated = false;
  StepInfo info;
};

bool is_goal(const vision::Detection& d, const EnvConfig& cfg = {});

/// Shaped reward: goal bonus, out-of-frame reward, or radius + centring
/// terms; `block_penalty` is subtracted when the move was refused.
double compute_reward(const std::optional<vision::Detection>& d, bool blocked, const EnvConfig& cfg = {});

/// (5 active joint angles, present flag, centre offset x/y normalised by the
/// half-frame, radius / max_radius).
FeatureVector observe_features(const kinematics::JointState& joints, const std::optional<vision::Detection>& d,
                               const EnvConfig& cfg = {});

class Environment {
 public:
  explicit Environment(EnvConfig cfg);

  Observation reset(std::uint64_t seed);
  StepResult step(int action);

  const EnvConfig& config() const { return cfg_; }
  const scene::MonitorModel& monitor() const { return monitor_; }
  const kinematics::JointState& joints() const { return joints_; }
  const scene::TargetState& target() const { return target_; }
  int step_count() const { return step_count_; }
  double lighting() const { return lighting_; }
  bool done() const { return done_; }
  /// Most recent rendered frame (also kept in Features mode).
  const Image& frame() const { return frame_; }
  const std::optional<vision::Detection>& detection() const { return detection_; }

 private:
  void capture();
  Observation observation() const;

  EnvConfig cfg_;
  scene::MonitorModel monitor_;
  kinematics::JointState joints_;
  scene::TargetState target_;
  int step_count_ = 0;
  double lighting_ = 1.0;
  Rng rng_;
  bool started_ = false;
  bool done_ = false;
  Image frame_;
  std::optional<vision::Detection> detection_;
};

}  // namespace armrl::env
