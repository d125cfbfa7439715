#include <doctest.h>

#include <cmath>
#include <variant>

#include "armrl/env.hpp"
#include "armrl/error.hpp"

using namespace armrl;
using namespace armrl::env;

namespace {

vision::Detection detection(double radius, double dist, double angle = 0.0) {
  vision::Detection d;
  d.center = {200.0 + dist * std::cos(angle), 150.0 + dist * std::sin(angle)};
  d.radius = radius;
  return d;
}

EnvConfig features_config(Variant v = Variant::kStaticReacher) {
  EnvConfig cfg;
  cfg.variant = v;
  cfg.observation_mode = ObservationMode::kFeatures;
  return cfg;
}

const FeatureVector& features(const Observation& o) { return std::get<FeatureVector>(o); }

}  // namespace

TEST_CASE("is_goal uses strict inequalities") {
  CHECK(is_goal(detection(31, 69)));
  CHECK_FALSE(is_goal(detection(30, 50)));
  CHECK_FALSE(is_goal(detection(35, 70)));
  CHECK(is_goal(detection(30.0001, 0)));
  CHECK(is_goal(detection(40, 69.999, 2.0)));
}

TEST_CASE("compute_reward examples") {
  CHECK(compute_reward(detection(20, 100), false) == doctest::Approx(-20.0 / 30 - 100.0 / 250).epsilon(1e-12));
  CHECK(std::abs(compute_reward(detection(20, 100), false) - -1.0666666666666667) < 1e-9);
  CHECK(std::abs(compute_reward(detection(20, 100), true) - -2.0666666666666667) < 1e-9);
  CHECK(compute_reward(std::nullopt, false) == -0.01);
  CHECK(std::abs(compute_reward(std::nullopt, true) - -1.01) < 1e-12);
  CHECK(compute_reward(detection(35, 10), false) == 20.0);
  // Perfect in-frame non-goal bounds.
  CHECK(compute_reward(detection(40, 70), false) == doctest::Approx(-70.0 / 250));
  CHECK(compute_reward(detection(10, 250), false) == doctest::Approx(-2.0));
}

TEST_CASE("compute_reward over a radius/distance grid") {
  for (int i = 0; i <= 30; ++i) {
    for (int j = 0; j <= 25; ++j) {
      const double r = 10.0 + i, dist = 10.0 * j;
      const auto d = detection(r, dist, 0.3 * j);
      const bool goal = r > 30.0 && dist < 70.0;
      const double expected = goal ? 20.0 : (r - 40.0) / 30.0 - dist / 250.0;
      CHECK(std::abs(compute_reward(d, false) - expected) <= 1e-9);
      CHECK(std::abs(compute_reward(d, true) - (expected - 1.0)) <= 1e-9);
      if (!goal) {
        CHECK(compute_reward(d, false) <= 0.0);
        CHECK(compute_reward(d, false) >= -2.0);
      }
    }
  }
}

TEST_CASE("config validation") {
  CHECK_NOTHROW(EnvConfig{}.validate());
  EnvConfig cfg;
  cfg.max_dist = 200.0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = EnvConfig{};
  cfg.goal_radius = 50.0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = EnvConfig{};
  cfg.max_episode_steps = 0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = EnvConfig{};
  cfg.workspace.max.z() = -5.0;
  CHECK_THROWS_AS(Environment{cfg}, ConfigError);
  CHECK(std::hypot(200.0, 150.0) == 250.0);
}

TEST_CASE("observe_features encoding") {
  const EnvConfig cfg;
  const auto absent = observe_features(cfg.start_pose, std::nullopt, cfg);
  REQUIRE(absent.size() == static_cast<std::size_t>(kFeatureSize));
  for (double v : absent) CHECK(v == 0.0);

  vision::Detection d;
  d.center = {200, 150};
  d.radius = 20;
  auto f = observe_features(cfg.start_pose, d, cfg);
  CHECK(f[5] == 1.0);
  CHECK(f[6] == 0.0);
  CHECK(f[7] == 0.0);
  CHECK(f[8] == 0.5);

  d.center = {280, 150};
  d.radius = 25;
  kinematics::JointState q = cfg.start_pose;
  q.angles[1] += 0.25;
  f = observe_features(q, d, cfg);
  CHECK(f[6] == doctest::Approx(0.4));
  CHECK(f[7] == 0.0);
  CHECK(f[1] == doctest::Approx(0.25));
  CHECK(f[0] == 0.0);
}

TEST_CASE("reset contract") {
  Environment e(features_config());
  const Observation o = e.reset(3);
  CHECK(e.joints() == e.config().start_pose);
  CHECK(e.target().center == Eigen::Vector2d(960, 600));
  CHECK(e.step_count() == 0);
  CHECK(e.lighting() >= 0.85);
  CHECK(e.lighting() <= 1.0);
  // The default start pose looks past the target.
  CHECK_FALSE(e.detection().has_value());
  CHECK(features(o)[5] == 0.0);

  Environment image_env(EnvConfig{});
  const Observation a = image_env.reset(9);
  const Observation b = image_env.reset(9);
  REQUIRE(std::holds_alternative<Image>(a));
  CHECK(std::get<Image>(a) == std::get<Image>(b));
  CHECK(std::get<Image>(a).width() == 400);
  CHECK(std::get<Image>(a).height() == 300);

  Environment tracker(features_config(Variant::kTracker));
  tracker.reset(4);
  CHECK(tracker.step_count() == 0);
  CHECK(tracker.target().drift.lpNorm<1>() == 3.0);
}

TEST_CASE("step before reset and after done are usage errors") {
  Environment e(features_config());
  CHECK_THROWS_AS(e.step(0), UsageError);
  e.reset(1);
  CHECK_THROWS_AS(e.step(10), InvalidActionError);
  CHECK_THROWS_AS(e.step(-1), InvalidActionError);
  StepResult r;
  while (!e.done()) r = e.step(9);
  CHECK((r.terminated || r.truncated));
  CHECK_THROWS_AS(e.step(0), UsageError);
}

TEST_CASE("truncation at the step cap") {
  EnvConfig cfg = features_config();
  cfg.max_episode_steps = 12;
  Environment e(cfg);
  e.reset(2);
  StepResult r;
  int steps = 0;
  // Alternating one wrist joint keeps the camera off target.
  while (!e.done()) {
    r = e.step(8 + steps % 2);
    ++steps;
  }
  CHECK(steps == 12);
  CHECK(r.truncated);
  CHECK_FALSE(r.terminated);
  CHECK(e.step_count() == 12);
}

TEST_CASE("blocked steps leave joints unchanged and cost the penalty") {
  EnvConfig cfg = features_config();
  const Eigen::Vector3d ee = kinematics::forward_kinematics(cfg.dh, cfg.start_pose).position;
  cfg.workspace.min = ee.array() - 1e-3;
  cfg.workspace.max = ee.array() + 1e-3;
  Environment e(cfg);
  int blocked = 0;
  for (int a = 0; a < kinematics::kNumActions; ++a) {
    e.reset(1);
    const kinematics::JointState before = e.joints();
    const auto candidate = kinematics::apply_action(before, kinematics::decode_action(a));
    const bool expect_blocked = kinematics::validate_move(cfg.dh, cfg.workspace, cfg.joint_limits, candidate) ==
                                kinematics::MoveResult::kBlocked;
    const StepResult r = e.step(a);
    CHECK(r.info.blocked == expect_blocked);
    if (!r.info.blocked) {
      CHECK(e.joints() == candidate);
      continue;
    }
    ++blocked;
    CHECK(e.joints() == before);
    CHECK(r.reward == doctest::Approx(compute_reward(r.info.detection, false, cfg) - 1.0));
  }
  CHECK(blocked >= 6);
}

TEST_CASE("step rewards and termination follow the detection") {
  Environment e(features_config());
  Rng rng(17);
  int goals = 0;
  for (int ep = 0; ep < 40; ++ep) {
    e.reset(static_cast<std::uint64_t>(ep));
    StepResult r;
    while (!e.done()) {
      r = e.step(static_cast<int>(uniform_index(rng, 10)));
      CHECK(r.reward == doctest::Approx(compute_reward(r.info.detection, r.info.blocked, e.config())));
      CHECK(r.terminated == (r.info.detection && is_goal(*r.info.detection)));
      CHECK(r.truncated == (!r.terminated && e.step_count() == 150));
      CHECK(features(r.observation) == observe_features(e.joints(), r.info.detection, e.config()));
    }
    CHECK(e.step_count() <= 150);
    if (r.terminated) {
      ++goals;
      CHECK(r.reward >= 19.0);
    }
  }
  CHECK(goals > 0);
}

TEST_CASE("tracker target drifts once per step") {
  Environment e(features_config(Variant::kTracker));
  e.reset(8);
  for (int i = 0; i < 30; ++i) {
    const scene::TargetState before = e.target();
    e.step(i % 10);
    CHECK(e.target().center == scene::drift_target(before).center);
  }
}

TEST_CASE("fixed seed and actions reproduce the step sequence") {
  for (const Variant v : {Variant::kStaticReacher, Variant::kReacher, Variant::kTracker}) {
    Environment a(features_config(v)), b(features_config(v));
    a.reset(21);
    b.reset(21);
    Rng rng(4);
    for (int i = 0; i < 60 && !a.done(); ++i) {
      const int act = static_cast<int>(uniform_index(rng, 10));
      const StepResult ra = a.step(act), rb = b.step(act);
      CHECK(ra.reward == rb.reward);
      CHECK(features(ra.observation) == features(rb.observation));
      CHECK(a.frame() == b.frame());
      CHECK(ra.terminated == rb.terminated);
    }
  }
}
