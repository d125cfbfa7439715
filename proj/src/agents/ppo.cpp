#include <algorithm>
#include <cmath>
#include <numeric>

#include "armrl/agents.hpp"
#include "armrl/error.hpp"

namespace armrl::agents {

void PPOConfig::validate() const {
  auto fail = [](const std::string& what) { throw ConfigError("invalid PPO config: " + what); };
  if (!(gamma >= 0.0 && gamma < 1.0)) fail("gamma must lie in [0, 1)");
  if (!(gae_lambda >= 0.0 && gae_lambda <= 1.0)) fail("gae_lambda must lie in [0, 1]");
  if (!(clip_eps > 0.0)) fail("clip_eps must be positive");
  if (epochs < 1) fail("epochs must be >= 1");
  if (rollout_length < 1) fail("rollout_length must be >= 1");
  if (minibatch_size < 1 || minibatch_size > rollout_length) fail("minibatch_size must lie in [1, rollout_length]");
  if (!(lr > 0.0)) fail("lr must be positive");
  if (entropy_coef < 0.0 || value_coef < 0.0) fail("loss coefficients must be non-negative");
  if (!(max_grad_norm > 0.0)) fail("max_grad_norm must be positive");
}

GaeResult compute_gae(const std::vector<double>& rewards, const std::vector<double>& values,
                      const std::vector<double>& next_values, const std::vector<bool>& terminated,
                      const std::vector<bool>& truncated, double gamma, double lambda) {
  const std::size_t n = rewards.size();
  if (n == 0) throw UsageError("compute_gae on an empty rollout");
  if (values.size() != n || next_values.size() != n || terminated.size() != n || truncated.size() != n) {
    throw ShapeError("compute_gae: mismatched rollout columns");
  }
  GaeResult out;
  out.advantages.assign(n, 0.0);
  double carry = 0.0;
  for (std::size_t i = n; i-- > 0;) {
    const double bootstrap = terminated[i] ? 0.0 : gamma * next_values[i];
    const double delta = rewards[i] + bootstrap - values[i];
    if (terminated[i] || truncated[i]) carry = 0.0;
    carry = delta + gamma * lambda * carry;
    out.advantages[i] = carry;
  }
  out.returns.resize(n);
  for (std::size_t i = 0; i < n; ++i) out.returns[i] = out.advantages[i] + values[i];

  const double mean = std::accumulate(out.advantages.begin(), out.advantages.end(), 0.0) / static_cast<double>(n);
  double var = 0.0;
  for (double a : out.advantages) var += (a - mean) * (a - mean);
  const double sd = std::sqrt(var / static_cast<double>(n));
  out.normalized.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    out.normalized[i] = sd > 1e-12 ? (out.advantages[i] - mean) / sd : 0.0;
  }
  return out;
}

double ppo_clip_loss(double ratio, double advantage, double clip_eps) {
  return std::min(ratio * advantage, std::clamp(ratio, 1.0 - clip_eps, 1.0 + clip_eps) * advantage);
}

PPOLoss ppo_loss(nn::Var logits, nn::Var values, const std::vector<int>& actions,
                 const std::vector<double>& old_log_probs, const std::vector<double>& advantages,
                 const std::vector<double>& returns, const PPOConfig& cfg) {
  nn::Tape& tape = *logits.tape;
  const int batch = logits.value().dim(0);
  auto column = [&](const std::vector<double>& v) {
    if (static_cast<int>(v.size()) != batch) throw ShapeError("ppo_loss: column length != batch");
    return tape.constant(nn::Tensor(nn::Shape{batch}, v));
  };
  PPOLoss out;
  nn::Var log_probs = nn::log_softmax(logits);
  nn::Var taken = nn::gather(log_probs, actions);
  out.ratio = nn::exp(nn::sub(taken, column(old_log_probs)));
  nn::Var adv = column(advantages);
  nn::Var unclipped = nn::mul(out.ratio, adv);
  nn::Var clipped = nn::mul(nn::clamp(out.ratio, 1.0 - cfg.clip_eps, 1.0 + cfg.clip_eps), adv);
  out.surrogate = nn::mean(nn::minimum(unclipped, clipped));

  nn::Var v = nn::reshape(values, nn::Shape{batch});
  out.value_loss = nn::mean(nn::square(nn::sub(v, column(returns))));
  out.entropy = nn::scale(nn::mean(nn::row_sum(nn::mul(nn::exp(log_probs), log_probs))), -1.0);

  out.total = nn::add(nn::add(nn::scale(out.surrogate, -1.0), nn::scale(out.value_loss, cfg.value_coef)),
                      nn::scale(out.entropy, -cfg.entropy_coef));
  return out;
}

namespace {

nn::Network actor_critic(env::ObservationMode mode, std::uint64_t seed) {
  const std::vector<int> heads{kNumActions, 1};
  return nn::Network::init(mode == env::ObservationMode::kFeatures
                               ? nn::Architecture::feature_net(env::kFeatureSize, heads)
                               : nn::Architecture::image_net(heads),
                           seed);
}

}  // namespace

PPOAgent::PPOAgent(env::ObservationMode mode, PPOConfig cfg, std::uint64_t seed)
    : PPOAgent(actor_critic(mode, seed), cfg, seed) {}

PPOAgent::PPOAgent(nn::Network net, PPOConfig cfg, std::uint64_t seed)
    : cfg_(cfg), net_(std::move(net)), rng_(seed ^ 0xd1b54a32d192ed03ULL) {
  cfg_.validate();
  const auto& heads = net_.architecture().heads;
  if (heads.size() != 2 || heads[0] != kNumActions || heads[1] != 1) {
    throw ShapeError("PPO network needs a 10-way policy head and a scalar value head");
  }
  shape_ = net_.architecture().input;
  opt_ = nn::make_adam(net_, {cfg_.lr});
  rollout_.reserve(static_cast<std::size_t>(cfg_.rollout_length));
}

double PPOAgent::epsilon() const { return std::nan(""); }

int PPOAgent::act(const StatePtr& s) {
  nn::Tape tape;
  auto out = net_.forward(tape, to_batch(*s, shape_), false);
  const nn::Tensor lp = nn::log_softmax(out[0]).value();
  const int a = sample_categorical(lp.data(), kNumActions, rng_);
  pending_log_prob_ = lp[static_cast<std::size_t>(a)];
  pending_value_ = out[1].value()[0];
  return a;
}

int PPOAgent::act_greedy(const State& s) const {
  const nn::Tensor logits = net_.predict(to_batch(s, shape_))[0];
  return argmax(logits.data(), kNumActions);
}

std::optional<UpdateStats> PPOAgent::observe(const Transition& t) {
  rollout_.push_back({t.s, t.a, pending_log_prob_, pending_value_, t.r, t.terminated, t.truncated, t.s2});
  if (static_cast<int>(rollout_.size()) < cfg_.rollout_length) return std::nullopt;
  UpdateStats stats = update(rollout_);
  rollout_.clear();
  return stats;
}

UpdateStats PPOAgent::update(const std::vector<RolloutStep>& rollout) {
  const std::size_t n = rollout.size();
  if (static_cast<int>(n) != cfg_.rollout_length) throw UsageError("rollout length does not match config");

  // Bootstrap values: the next stored step when the episode continues,
  // otherwise an explicit evaluation of the following observation.
  std::vector<double> rewards(n), values(n), next_values(n, 0.0);
  std::vector<bool> terminated(n), truncated(n);
  std::vector<const State*> to_eval;
  std::vector<std::size_t> eval_slot;
  for (std::size_t i = 0; i < n; ++i) {
    const RolloutStep& r = rollout[i];
    rewards[i] = r.r;
    values[i] = r.value;
    terminated[i] = r.terminated;
    truncated[i] = r.truncated;
    if (r.terminated) continue;
    if (!r.truncated && i + 1 < n) {
      next_values[i] = rollout[i + 1].value;
    } else {
      to_eval.push_back(r.s2.get());
      eval_slot.push_back(i);
    }
  }
  if (!to_eval.empty()) {
    const nn::Tensor v = net_.predict(to_batch(to_eval, shape_))[1];
    for (std::size_t k = 0; k < eval_slot.size(); ++k) next_values[eval_slot[k]] = v[k];
  }
  const GaeResult gae = compute_gae(rewards, values, next_values, terminated, truncated, cfg_.gamma, cfg_.gae_lambda);

  UpdateStats stats;
  int batches = 0;
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  const std::size_t mb = static_cast<std::size_t>(cfg_.minibatch_size);
  for (int epoch = 0; epoch < cfg_.epochs; ++epoch) {
    for (std::size_t i = n - 1; i > 0; --i) std::swap(order[i], order[uniform_index(rng_, i + 1)]);
    for (std::size_t start = 0; start < n; start += mb) {
      const std::size_t end = std::min(n, start + mb);
      std::vector<const State*> states;
      std::vector<int> actions;
      std::vector<double> old_lp, adv, ret;
      for (std::size_t k = start; k < end; ++k) {
        const std::size_t i = order[k];
        states.push_back(rollout[i].s.get());
        actions.push_back(rollout[i].a);
        old_lp.push_back(rollout[i].log_prob);
        adv.push_back(gae.normalized[i]);
        ret.push_back(gae.returns[i]);
      }
      net_.zero_grad();
      nn::Tape tape;
      auto out = net_.forward(tape, to_batch(states, shape_));
      PPOLoss loss = ppo_loss(out[0], out[1], actions, old_lp, adv, ret, cfg_);
      tape.backward(loss.total);
      stats.grad_norm += net_.clip_grad_norm(cfg_.max_grad_norm);
      nn::adam_step(net_, opt_);

      stats.loss += loss.total.value().item();
      stats.policy_loss -= loss.surrogate.value().item();
      stats.value_loss += loss.value_loss.value().item();
      stats.entropy += loss.entropy.value().item();
      const nn::Tensor& ratio = loss.ratio.value();
      double kl = 0.0, clipped = 0.0;
      for (std::size_t k = 0; k < ratio.size(); ++k) {
        kl -= std::log(ratio[k]);
        if (std::abs(ratio[k] - 1.0) > cfg_.clip_eps) clipped += 1.0;
      }
      stats.approx_kl += kl / static_cast<double>(ratio.size());
      stats.clip_fraction += clipped / static_cast<double>(ratio.size());
      ++batches;
    }
  }
  for (double* f : {&stats.loss, &stats.policy_loss, &stats.value_loss, &stats.entropy, &stats.approx_kl,
                    &stats.clip_fraction, &stats.grad_norm}) {
    *f /= batches;
  }
  return stats;
}

}  // namespace armrl::agents
