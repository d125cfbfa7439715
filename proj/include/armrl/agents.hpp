#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "armrl/env.hpp"
#include "armrl/network.hpp"
#include "armrl/random.hpp"

namespace armrl::agents {

inline constexpr int kNumActions = kinematics::kNumActions;
/// Box-filter factor from camera frames to network input.
inline constexpr int kDownsample = 5;

/// Observation as stored by the learners. Images are kept as the downsampled
/// 8-bit CHW planes so a full replay buffer stays small; features as-is.
struct State {
  std::vector<std::uint8_t> pixels;
  std::vector<double> features;
};
using StatePtr = std::shared_ptr<const State>;

StatePtr pack(const env::Observation& obs);
/// Network input shape (without batch) for an observation mode.
nn::Shape input_shape(env::ObservationMode mode);
/// Stacks states into a [B, ...] tensor; pixels are scaled to [0, 1].
nn::Tensor to_batch(const std::vector<const State*>& states, const nn::Shape& shape);
nn::Tensor to_batch(const State& state, const nn::Shape& shape);

struct Transition {
  StatePtr s;
  int a = 0;
  double r = 0.0;
  StatePtr s2;
  bool terminated = false;
  bool truncated = false;
};

/// Fixed-capacity FIFO ring with uniform sampling.
class ReplayBuffer {
 public:
  explicit ReplayBuffer(std::size_t capacity);

  void push(Transition t);
  std::size_t size() const { return items_.size(); }
  std::size_t capacity() const { return capacity_; }
  /// i-th oldest stored transition.
  const Transition& at(std::size_t i) const;
  /// Indices (oldest = 0) drawn uniformly with replacement.
  std::vector<std::size_t> sample_indices(std::size_t n, Rng& rng) const;
  std::vector<const Transition*> sample(std::size_t n, Rng& rng) const;

 private:
  std::size_t capacity_;
  std::vector<Transition> items_;
  std::size_t head_ = 0;  // slot of the oldest item once full
};

struct UpdateStats {
  double loss = 0.0;
  double policy_loss = 0.0;
  double value_loss = 0.0;
  double entropy = 0.0;
  double approx_kl = 0.0;
  double clip_fraction = 0.0;
  double grad_norm = 0.0;
};

/// Common face the training harness drives.
class Agent {
 public:
  virtual ~Agent() = default;
  /// Exploring action for the current training step.
  virtual int act(const StatePtr& s) = 0;
  /// Greedy (DQN) / mode (PPO) action.
  virtual int act_greedy(const State& s) const = 0;
  /// Records the outcome of the last act(); returns stats when an update ran.
  virtual std::optional<UpdateStats> observe(const Transition& t) = 0;
  virtual const nn::Network& network() const = 0;
  /// Exploration rate for logging; NaN when not applicable.
  virtual double epsilon() const = 0;
};

// ---------------------------------------------------------------- DQN

enum class TargetSync { kHardCopy, kPolyak };

struct DQNConfig {
  double gamma = 0.99;
  double lr = 5e-4;
  int batch_size = 64;
  TargetSync target_sync = TargetSync::kHardCopy;
  int target_period = 1000;  // env steps between hard copies
  double polyak_rate = 0.005;
  double epsilon_start = 1.0;
  double epsilon_end = 0.01;
  std::int64_t epsilon_decay_steps = 60000;
  int train_start = 1000;
  int update_every = 1;
  std::size_t buffer_capacity = 20000;
  double max_grad_norm = 10.0;

  void validate() const;
};

double epsilon_at(std::int64_t step, const DQNConfig& cfg);
/// Lowest index among equal maxima.
int argmax(const double* values, int n);
int select_action_dqn(const nn::Network& q, const nn::Tensor& state, double epsilon, Rng& rng);

/// y = r + gamma * max_q_next, bootstrap dropped on termination only.
std::vector<double> td_targets(const std::vector<double>& rewards, const std::vector<double>& max_q_next,
                               const std::vector<bool>& terminated, double gamma);
std::vector<double> td_targets(const std::vector<const Transition*>& batch, const nn::Network& target,
                               const nn::Shape& shape, double gamma);
/// Mean squared TD error of Q(s, a) against fixed targets.
nn::Var dqn_loss(nn::Tape& tape, const nn::Network& q, const nn::Tensor& states, const std::vector<int>& actions,
                 const std::vector<double>& targets);
/// One Adam step on the batch; the target network is only read.
double dqn_update(nn::Network& q, const nn::Network& target, nn::AdamState& opt,
                  const std::vector<const Transition*>& batch, const nn::Shape& shape, const DQNConfig& cfg);
void sync_target(const nn::Network& q, nn::Network& target, TargetSync mode, double rho);

class DQNAgent : public Agent {
 public:
  DQNAgent(env::ObservationMode mode, DQNConfig cfg, std::uint64_t seed);
  DQNAgent(nn::Network q, DQNConfig cfg, std::uint64_t seed);

  int act(const StatePtr& s) override;
  int act_greedy(const State& s) const override;
  std::optional<UpdateStats> observe(const Transition& t) override;
  const nn::Network& network() const override { return q_; }
  double epsilon() const override { return epsilon_at(steps_, cfg_); }

  const nn::Network& target_network() const { return target_; }
  const ReplayBuffer& buffer() const { return buffer_; }

 private:
  DQNConfig cfg_;
  nn::Network q_;
  nn::Network target_;
  nn::AdamState opt_;
  nn::Shape shape_;
  ReplayBuffer buffer_;
  Rng rng_;
  std::int64_t steps_ = 0;
};

// ---------------------------------------------------------------- PPO

struct PPOConfig {
  double gamma = 0.99;
  double gae_lambda = 0.95;
  double clip_eps = 0.2;
  int epochs = 4;
  int minibatch_size = 128;
  int rollout_length = 1024;
  double entropy_coef = 0.01;
  double value_coef = 0.5;
  double lr = 3e-4;
  double max_grad_norm = 0.5;

  void validate() const;
};

struct GaeResult {
  std::vector<double> advantages;  // raw
  std::vector<double> returns;     // advantages + values
  std::vector<double> normalized;  // advantages scaled to mean 0, std 1
};

/// next_values[t] is V of the observation that followed step t. A step that
/// ends an episode (terminated or truncated) stops the recursion; only
/// termination drops its bootstrap term.
GaeResult compute_gae(const std::vector<double>& rewards, const std::vector<double>& values,
                      const std::vector<double>& next_values, const std::vector<bool>& terminated,
                      const std::vector<bool>& truncated, double gamma, double lambda);

/// min(ratio * A, clip(ratio, 1 - eps, 1 + eps) * A).
double ppo_clip_loss(double ratio, double advantage, double clip_eps);

struct PPOLoss {
  nn::Var total;       // minimised: -surrogate + value_coef * value_loss - entropy_coef * entropy
  nn::Var surrogate;   // mean clipped surrogate
  nn::Var value_loss;  // mean squared error against returns
  nn::Var entropy;     // mean policy entropy
  nn::Var ratio;       // per-sample probability ratios
};

PPOLoss ppo_loss(nn::Var logits, nn::Var values, const std::vector<int>& actions,
                 const std::vector<double>& old_log_probs, const std::vector<double>& advantages,
                 const std::vector<double>& returns, const PPOConfig& cfg);

struct RolloutStep {
  StatePtr s;
  int a = 0;
  double log_prob = 0.0;
  double value = 0.0;
  double r = 0.0;
  bool terminated = false;
  bool truncated = false;
  StatePtr s2;
};

class PPOAgent : public Agent {
 public:
  PPOAgent(env::ObservationMode mode, PPOConfig cfg, std::uint64_t seed);
  PPOAgent(nn::Network net, PPOConfig cfg, std::uint64_t seed);

  int act(const StatePtr& s) override;
  int act_greedy(const State& s) const override;
  std::optional<UpdateStats> observe(const Transition& t) override;
  const nn::Network& network() const override { return net_; }
  double epsilon() const override;

  /// Runs `epochs` passes of minibatch updates over a full rollout.
  UpdateStats update(const std::vector<RolloutStep>& rollout);

 private:
  PPOConfig cfg_;
  nn::Network net_;
  nn::AdamState opt_;
  nn::Shape shape_;
  Rng rng_;
  std::vector<RolloutStep> rollout_;
  double pending_log_prob_ = 0.0;
  double pending_value_ = 0.0;
};

/// Categorical draw from log-probabilities with one uniform variate.
int sample_categorical(const double* log_probs, int n, Rng& rng);

}  // namespace armrl::agents
