#include <charconv>
#include <cstdio>
#include <fstream>

#include "armrl/error.hpp"
#include "armrl/harness.hpp"

namespace armrl::harness {

EvalResult evaluate(const env::EnvConfig& env_cfg, const EvalOptions& opts) {
  if (opts.uniform_random) return evaluate(env_cfg, nullptr, opts);
  if (!opts.checkpoint) {
    const nn::Network net = nn::Network::init(
        env_cfg.observation_mode == env::ObservationMode::kFeatures
            ? nn::Architecture::feature_net(env::kFeatureSize, {agents::kNumActions, 1})
            : nn::Architecture::image_net({agents::kNumActions, 1}),
        opts.seed);
    return evaluate(env_cfg, &net, opts);
  }
  const nn::Network net = nn::load_checkpoint(*opts.checkpoint);
  return evaluate(env_cfg, &net, opts);
}

EvalResult evaluate(const env::EnvConfig& env_cfg, const nn::Network* net, const EvalOptions& opts) {
  if (opts.episodes < 1) throw ConfigError("evaluate: episodes must be >= 1");
  const nn::Shape shape = agents::input_shape(env_cfg.observation_mode);
  if (net) {
    if (net->architecture().input != shape) {
      throw ShapeError("checkpoint expects input " + nn::shape_string(net->architecture().input) + " but " +
                       observation_name(env_cfg.observation_mode) + " observations are " + nn::shape_string(shape));
    }
    if (net->architecture().heads.empty() || net->architecture().heads[0] != agents::kNumActions) {
      throw ShapeError("checkpoint's first head is not a 10-way action head");
    }
  }
  const bool frames = opts.dump_frames && !opts.output_dir.empty();
  if (!opts.output_dir.empty()) std::filesystem::create_directories(opts.output_dir);

  env::Environment env(env_cfg);
  Rng rng(opts.seed);
  EvalResult result;
  for (int e = 0; e < opts.episodes; ++e) {
    agents::StatePtr s = agents::pack(env.reset(episode_seed(opts.seed, e)));
    EvalEpisode ep;
    for (int t = 0;; ++t) {
      if (frames && t % opts.frame_every == 0) {
        char name[64];
        std::snprintf(name, sizeof(name), "ep%03d_step%03d.png", e, t);
        write_png(opts.output_dir / name, env.frame());
      }
      int a;
      if (net) {
        const nn::Tensor out = net->predict(agents::to_batch(*s, shape))[0];
        a = agents::argmax(out.data(), agents::kNumActions);
      } else {
        a = static_cast<int>(uniform_index(rng, agents::kNumActions));
      }
      const env::StepResult r = env.step(a);
      EvalStep st;
      st.episode = e;
      st.step = t + 1;
      st.action = a;
      st.reward = r.reward;
      st.blocked = r.info.blocked;
      if (r.info.detection) {
        st.detected = true;
        st.u = r.info.detection->center.x();
        st.v = r.info.detection->center.y();
        st.radius = r.info.detection->radius;
      }
      st.terminated = r.terminated;
      st.truncated = r.truncated;
      st.joints = env.joints();
      result.steps.push_back(st);
      ep.episode_return += r.reward;
      ep.length = t + 1;
      if (r.terminated || r.truncated) {
        ep.goal = r.terminated;
        if (frames && (t + 1) % opts.frame_every == 0) {
          char name[64];
          std::snprintf(name, sizeof(name), "ep%03d_step%03d.png", e, t + 1);
          write_png(opts.output_dir / name, env.frame());
        }
        break;
      }
      s = agents::pack(r.observation);
    }
    result.episodes.push_back(ep);
  }
  for (const EvalEpisode& ep : result.episodes) {
    result.mean_return += ep.episode_return;
    result.mean_length += ep.length;
    result.success_rate += ep.goal ? 1.0 : 0.0;
  }
  const double n = static_cast<double>(result.episodes.size());
  result.mean_return /= n;
  result.mean_length /= n;
  result.success_rate /= n;

  if (!opts.output_dir.empty()) {
    std::ofstream out(opts.output_dir / "eval_steps.csv", std::ios::binary);
    out << eval_steps_csv(result);
  }
  return result;
}

std::string eval_steps_csv(const EvalResult& result) {
  auto num = [](double v) {
    char buf[32];
    auto r = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, r.ptr);
  };
  std::string out = "episode,step,action,reward,blocked,detected,u,v,radius,terminated,truncated,q0,q1,q2,q3,q4,q5\n";
  for (const EvalStep& s : result.steps) {
    out += std::to_string(s.episode) + ',' + std::to_string(s.step) + ',' + std::to_string(s.action) + ',' +
           num(s.reward) + ',' + (s.blocked ? "1" : "0") + ',' + (s.detected ? "1" : "0") + ',';
    if (s.detected) {
      out += num(s.u) + ',' + num(s.v) + ',' + num(s.radius) + ',';
    } else {
      out += ",,,";
    }
    out += std::string(s.terminated ? "1" : "0") + ',' + (s.truncated ? "1" : "0");
    for (double q : s.joints.angles) out += ',' + num(q);
    out += '\n';
  }
  return out;
}

}  // namespace armrl::harness
