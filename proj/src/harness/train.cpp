#include <cmath>
#include <fstream>
#include <iostream>
#include <mutex>
#include <thread>

#include "armrl/error.hpp"
#include "armrl/harness.hpp"

namespace armrl::harness {

std::unique_ptr<agents::Agent> make_agent(const RunConfig& cfg, std::uint64_t seed) {
  if (cfg.agent == AgentKind::kDQN) {
    return std::make_unique<agents::DQNAgent>(cfg.env.observation_mode, cfg.dqn, seed);
  }
  return std::make_unique<agents::PPOAgent>(cfg.env.observation_mode, cfg.ppo, seed);
}

std::uint64_t episode_seed(std::uint64_t trial_seed, int episode) {
  SplitMix64 mix{trial_seed * 0x9e3779b97f4a7c15ULL + static_cast<std::uint64_t>(episode)};
  return mix.next();
}

namespace {

// Running sums for the loss columns of the current episode.
struct StatsAccumulator {
  int n = 0;
  agents::UpdateStats sum;
  void add(const agents::UpdateStats& s) {
    ++n;
    sum.loss += s.loss;
    sum.policy_loss += s.policy_loss;
    sum.value_loss += s.value_loss;
    sum.entropy += s.entropy;
    sum.approx_kl += s.approx_kl;
    sum.clip_fraction += s.clip_fraction;
  }
  void fill(MetricsRow& row, bool ppo) const {
    row.updates = n;
    if (n == 0) return;
    row.loss = sum.loss / n;
    if (ppo) {
      row.policy_loss = sum.policy_loss / n;
      row.value_loss = sum.value_loss / n;
      row.entropy = sum.entropy / n;
      row.approx_kl = sum.approx_kl / n;
      row.clip_fraction = sum.clip_fraction / n;
    }
  }
};

std::mutex log_mutex;

}  // namespace

TrialResult run_trial(const RunConfig& cfg, int trial) {
  const std::uint64_t seed = cfg.base_seed + static_cast<std::uint64_t>(trial);
  const std::filesystem::path dir = cfg.output_dir / ("trial_" + std::to_string(trial));
  std::filesystem::create_directories(dir);

  TrialResult result;
  result.metrics_path = dir / "metrics.csv";
  result.checkpoint_path = dir / "checkpoint.bin";
  std::ofstream csv(result.metrics_path, std::ios::binary);
  if (!csv) throw Error("cannot write " + result.metrics_path.string());
  csv << metrics_header() << '\n';

  env::Environment env(cfg.env);
  std::unique_ptr<agents::Agent> agent = make_agent(cfg, seed);
  const bool ppo = cfg.agent == AgentKind::kPPO;

  int episode = 0;
  agents::StatePtr s = agents::pack(env.reset(episode_seed(seed, episode)));
  double ep_return = 0.0;
  int ep_len = 0;
  StatsAccumulator acc;

  auto flush = [&](std::int64_t step, const std::string& outcome) {
    MetricsRow row;
    row.trial = trial;
    row.episode = episode;
    row.env_step = step;
    row.episode_return = ep_return;
    row.episode_length = ep_len;
    row.mean_step_reward = ep_return / ep_len;
    row.outcome = outcome;
    const double eps = agent->epsilon();
    if (!std::isnan(eps)) row.epsilon = eps;
    acc.fill(row, ppo);
    csv << format_metrics_row(row) << '\n';
    result.rows.push_back(std::move(row));
  };

  for (std::int64_t step = 1; step <= cfg.total_steps; ++step) {
    const int a = agent->act(s);
    env::StepResult res = env.step(a);
    agents::StatePtr s2 = agents::pack(res.observation);
    if (auto st = agent->observe({s, a, res.reward, s2, res.terminated, res.truncated})) acc.add(*st);
    ep_return += res.reward;
    ++ep_len;
    if (res.terminated || res.truncated) {
      flush(step, res.terminated ? "goal" : "truncated");
      ++episode;
      ep_return = 0.0;
      ep_len = 0;
      acc = {};
      if (step < cfg.total_steps) s = agents::pack(env.reset(episode_seed(seed, episode)));
    } else {
      s = std::move(s2);
    }
    if (cfg.log_every > 0 && step % cfg.log_every == 0) {
      double recent = 0.0;
      int k = 0;
      for (auto it = result.rows.rbegin(); it != result.rows.rend() && k < 20; ++it, ++k) recent += it->episode_length;
      std::lock_guard<std::mutex> lock(log_mutex);
      std::cerr << "[trial " << trial << "] step " << step << "/" << cfg.total_steps << "  episodes " << episode
                << "  mean_len(last " << k << ") " << (k ? recent / k : 0.0) << std::endl;
    }
  }
  if (ep_len > 0) flush(cfg.total_steps, "partial");
  csv.close();
  if (!csv) throw Error("failed writing " + result.metrics_path.string());
  nn::save_checkpoint(agent->network(), result.checkpoint_path);
  return result;
}

TrainResult train(const RunConfig& cfg) {
  cfg.validate();
  std::filesystem::create_directories(cfg.output_dir);
  {
    std::ofstream out(cfg.output_dir / "config.txt", std::ios::binary);
    out << to_text(cfg);
  }
  TrainResult result;
  result.trials.resize(static_cast<std::size_t>(cfg.trials));
  if (cfg.parallel && cfg.trials > 1) {
    std::vector<std::exception_ptr> errors(static_cast<std::size_t>(cfg.trials));
    std::vector<std::thread> workers;
    for (int k = 0; k < cfg.trials; ++k) {
      workers.emplace_back([&, k] {
        try {
          result.trials[static_cast<std::size_t>(k)] = run_trial(cfg, k);
        } catch (...) {
          errors[static_cast<std::size_t>(k)] = std::current_exception();
        }
      });
    }
    for (auto& w : workers) w.join();
    for (auto& e : errors) {
      if (e) std::rethrow_exception(e);
    }
  } else {
    for (int k = 0; k < cfg.trials; ++k) result.trials[static_cast<std::size_t>(k)] = run_trial(cfg, k);
  }

  result.metrics_path = cfg.output_dir / "metrics.csv";
  std::ofstream merged(result.metrics_path, std::ios::binary);
  merged << metrics_header() << '\n';
  for (const TrialResult& t : result.trials) {
    for (const MetricsRow& r : t.rows) merged << format_metrics_row(r) << '\n';
  }
  if (!merged) throw Error("failed writing " + result.metrics_path.string());
  return result;
}

}  // namespace armrl::harness
