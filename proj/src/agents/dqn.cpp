#include <algorithm>
#include <cmath>

#include "armrl/agents.hpp"
#include "armrl/error.hpp"

namespace armrl::agents {

void DQNConfig::validate() const {
  auto fail = [](const std::string& what) { throw ConfigError("invalid DQN config: " + what); };
  if (!(gamma >= 0.0 && gamma < 1.0)) fail("gamma must lie in [0, 1)");
  if (!(lr > 0.0)) fail("lr must be positive");
  if (batch_size < 1) fail("batch_size must be >= 1");
  if (target_period < 1) fail("target_period must be >= 1");
  if (!(polyak_rate >= 0.0 && polyak_rate <= 1.0)) fail("polyak_rate must lie in [0, 1]");
  if (!(epsilon_end <= epsilon_start)) fail("epsilon_end must be <= epsilon_start");
  if (!(epsilon_end >= 0.0 && epsilon_start <= 1.0)) fail("epsilon values must lie in [0, 1]");
  if (epsilon_decay_steps < 1) fail("epsilon_decay_steps must be >= 1");
  if (train_start < batch_size) fail("train_start must be >= batch_size");
  if (update_every < 1) fail("update_every must be >= 1");
  if (buffer_capacity < static_cast<std::size_t>(batch_size)) fail("buffer_capacity must hold a batch");
  if (!(max_grad_norm > 0.0)) fail("max_grad_norm must be positive");
}

double epsilon_at(std::int64_t step, const DQNConfig& cfg) {
  if (step >= cfg.epsilon_decay_steps) return cfg.epsilon_end;
  const double frac = static_cast<double>(std::max<std::int64_t>(step, 0)) / static_cast<double>(cfg.epsilon_decay_steps);
  return cfg.epsilon_start + frac * (cfg.epsilon_end - cfg.epsilon_start);
}

int argmax(const double* values, int n) {
  int best = 0;
  for (int i = 1; i < n; ++i) {
    if (values[i] > values[best]) best = i;
  }
  return best;
}

int select_action_dqn(const nn::Network& q, const nn::Tensor& state, double epsilon, Rng& rng) {
  // Always consume the exploration draw so the rng stream does not depend
  // on the network's outputs.
  const double u = uniform01(rng);
  const int random_action = static_cast<int>(uniform_index(rng, kNumActions));
  if (u < epsilon) return random_action;
  const nn::Tensor values = q.predict(state)[0];
  return argmax(values.data(), static_cast<int>(values.size()));
}

std::vector<double> td_targets(const std::vector<double>& rewards, const std::vector<double>& max_q_next,
                               const std::vector<bool>& terminated, double gamma) {
  if (rewards.empty()) throw UsageError("td_targets on an empty batch");
  if (max_q_next.size() != rewards.size() || terminated.size() != rewards.size()) {
    throw ShapeError("td_targets: mismatched batch columns");
  }
  std::vector<double> y(rewards.size());
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = terminated[i] ? rewards[i] : rewards[i] + gamma * max_q_next[i];
  return y;
}

std::vector<double> td_targets(const std::vector<const Transition*>& batch, const nn::Network& target,
                               const nn::Shape& shape, double gamma) {
  if (batch.empty()) throw UsageError("td_targets on an empty batch");
  std::vector<const State*> next;
  std::vector<double> rewards;
  std::vector<bool> terminated;
  for (const Transition* t : batch) {
    next.push_back(t->s2.get());
    rewards.push_back(t->r);
    terminated.push_back(t->terminated);
  }
  const nn::Tensor q = target.predict(to_batch(next, shape))[0];
  const int n = q.dim(1);
  std::vector<double> max_q(batch.size());
  for (std::size_t i = 0; i < batch.size(); ++i) max_q[i] = *std::max_element(q.data() + i * n, q.data() + (i + 1) * n);
  return td_targets(rewards, max_q, terminated, gamma);
}

nn::Var dqn_loss(nn::Tape& tape, const nn::Network& q, const nn::Tensor& states, const std::vector<int>& actions,
                 const std::vector<double>& targets) {
  nn::Var values = q.forward(tape, states)[0];
  nn::Var chosen = nn::gather(values, actions);
  nn::Var y = tape.constant(nn::Tensor(nn::Shape{static_cast<int>(targets.size())}, targets));
  return nn::mean(nn::square(nn::sub(chosen, y)));
}

double dqn_update(nn::Network& q, const nn::Network& target, nn::AdamState& opt,
                  const std::vector<const Transition*>& batch, const nn::Shape& shape, const DQNConfig& cfg) {
  if (batch.empty()) throw UsageError("dqn_update on an empty batch");
  const std::vector<double> y = td_targets(batch, target, shape, cfg.gamma);
  std::vector<const State*> states;
  std::vector<int> actions;
  for (const Transition* t : batch) {
    states.push_back(t->s.get());
    actions.push_back(t->a);
  }
  q.zero_grad();
  nn::Tape tape;
  nn::Var loss = dqn_loss(tape, q, to_batch(states, shape), actions, y);
  tape.backward(loss);
  q.clip_grad_norm(cfg.max_grad_norm);
  nn::adam_step(q, opt);
  return loss.value().item();
}

void sync_target(const nn::Network& q, nn::Network& target, TargetSync mode, double rho) {
  if (mode == TargetSync::kHardCopy) {
    target.copy_from(q);
  } else {
    target.blend_from(q, rho);
  }
}

DQNAgent::DQNAgent(env::ObservationMode mode, DQNConfig cfg, std::uint64_t seed)
    : DQNAgent(nn::Network::init(mode == env::ObservationMode::kFeatures
                                     ? nn::Architecture::feature_net(env::kFeatureSize, {kNumActions})
                                     : nn::Architecture::image_net({kNumActions}),
                                 seed),
               cfg, seed) {}

DQNAgent::DQNAgent(nn::Network q, DQNConfig cfg, std::uint64_t seed)
    : cfg_(cfg), q_(std::move(q)), target_(q_), buffer_(cfg.buffer_capacity), rng_(seed ^ 0xd1b54a32d192ed03ULL) {
  cfg_.validate();
  const auto& heads = q_.architecture().heads;
  if (heads.size() != 1 || heads[0] != kNumActions) throw ShapeError("DQN network needs a single 10-way head");
  shape_ = q_.architecture().input;
  opt_ = nn::make_adam(q_, {cfg_.lr});
}

int DQNAgent::act(const StatePtr& s) { return select_action_dqn(q_, to_batch(*s, shape_), epsilon(), rng_); }

int DQNAgent::act_greedy(const State& s) const {
  const nn::Tensor values = q_.predict(to_batch(s, shape_))[0];
  return argmax(values.data(), static_cast<int>(values.size()));
}

std::optional<UpdateStats> DQNAgent::observe(const Transition& t) {
  buffer_.push(t);
  ++steps_;
  std::optional<UpdateStats> stats;
  if (steps_ >= cfg_.train_start && steps_ % cfg_.update_every == 0) {
    const auto batch = buffer_.sample(static_cast<std::size_t>(cfg_.batch_size), rng_);
    UpdateStats s;
    s.loss = dqn_update(q_, target_, opt_, batch, shape_, cfg_);
    stats = s;
    if (cfg_.target_sync == TargetSync::kPolyak) sync_target(q_, target_, TargetSync::kPolyak, cfg_.polyak_rate);
  }
  if (cfg_.target_sync == TargetSync::kHardCopy && steps_ % cfg_.target_period == 0) {
    sync_target(q_, target_, TargetSync::kHardCopy, 1.0);
  }
  return stats;
}

}  // namespace armrl::agents
