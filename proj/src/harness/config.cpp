#include "armrl/config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "armrl/error.hpp"

namespace armrl::harness {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  return s.substr(b, s.find_last_not_of(" \t\r\n") - b + 1);
}

std::string lower(std::string s) {
  for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

// Shortest round-trip text for a double.
std::string num(double v) {
  char buf[32];
  auto r = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, r.ptr);
}

double to_double(const std::string& key, const std::string& v) {
  double out = 0.0;
  auto r = std::from_chars(v.data(), v.data() + v.size(), out);
  if (r.ec != std::errc() || r.ptr != v.data() + v.size()) {
    throw ConfigError("config key '" + key + "': expected a number, got '" + v + "'");
  }
  return out;
}

std::int64_t to_int(const std::string& key, const std::string& v) {
  std::int64_t out = 0;
  auto r = std::from_chars(v.data(), v.data() + v.size(), out);
  if (r.ec != std::errc() || r.ptr != v.data() + v.size()) {
    throw ConfigError("config key '" + key + "': expected an integer, got '" + v + "'");
  }
  return out;
}

bool to_bool(const std::string& key, const std::string& v) {
  const std::string l = lower(v);
  if (l == "true" || l == "1" || l == "yes" || l == "on") return true;
  if (l == "false" || l == "0" || l == "no" || l == "off") return false;
  throw ConfigError("config key '" + key + "': expected true/false, got '" + v + "'");
}

using Setter = std::function<void(RunConfig&, const std::string& key, const std::string& value)>;
using Getter = std::function<std::string(const RunConfig&)>;

struct KeyDef {
  std::string key;
  Setter set;
  Getter get;
};

template <typename T>
KeyDef real_key(std::string key, T RunConfig::*section, double T::*field) {
  return {std::move(key), [=](RunConfig& c, const std::string& k, const std::string& v) { (c.*section).*field = to_double(k, v); },
          [=](const RunConfig& c) { return num((c.*section).*field); }};
}

template <typename T, typename I>
KeyDef int_key(std::string key, T RunConfig::*section, I T::*field) {
  return {std::move(key),
          [=](RunConfig& c, const std::string& k, const std::string& v) { (c.*section).*field = static_cast<I>(to_int(k, v)); },
          [=](const RunConfig& c) { return std::to_string((c.*section).*field); }};
}

// Keys shared by both agents are spelled agent.<name> and land in whichever
// config the selected agent uses.
KeyDef agent_real(const std::string& name, double agents::DQNConfig::*dqn, double agents::PPOConfig::*ppo) {
  return {"agent." + name,
          [=](RunConfig& c, const std::string& k, const std::string& v) {
            if (c.agent == AgentKind::kDQN) {
              if (!dqn) throw ConfigError("config key '" + k + "' does not apply to DQN");
              c.dqn.*dqn = to_double(k, v);
            } else {
              if (!ppo) throw ConfigError("config key '" + k + "' does not apply to PPO");
              c.ppo.*ppo = to_double(k, v);
            }
          },
          [=](const RunConfig& c) -> std::string {
            if (c.agent == AgentKind::kDQN) return dqn ? num(c.dqn.*dqn) : "";
            return ppo ? num(c.ppo.*ppo) : "";
          }};
}

template <typename ID, typename IP>
KeyDef agent_int(const std::string& name, ID agents::DQNConfig::*dqn, IP agents::PPOConfig::*ppo) {
  return {"agent." + name,
          [=](RunConfig& c, const std::string& k, const std::string& v) {
            if (c.agent == AgentKind::kDQN) {
              if (!dqn) throw ConfigError("config key '" + k + "' does not apply to DQN");
              const std::int64_t x = to_int(k, v);
              if (std::is_unsigned_v<ID> && x < 0) throw ConfigError("config key '" + k + "' must be non-negative");
              c.dqn.*dqn = static_cast<ID>(x);
            } else {
              if (!ppo) throw ConfigError("config key '" + k + "' does not apply to PPO");
              c.ppo.*ppo = static_cast<IP>(to_int(k, v));
            }
          },
          [=](const RunConfig& c) -> std::string {
            if (c.agent == AgentKind::kDQN) return dqn ? std::to_string(c.dqn.*dqn) : "";
            return ppo ? std::to_string(c.ppo.*ppo) : "";
          }};
}

const std::vector<KeyDef>& key_table() {
  static const std::vector<KeyDef> table = [] {
    using env::EnvConfig;
    std::vector<KeyDef> t;
    t.push_back({"agent",
                 [](RunConfig& c, const std::string& k, const std::string& v) {
                   const std::string l = lower(v);
                   if (l == "dqn") c.agent = AgentKind::kDQN;
                   else if (l == "ppo") c.agent = AgentKind::kPPO;
                   else throw ConfigError("config key '" + k + "': expected DQN or PPO, got '" + v + "'");
                 },
                 [](const RunConfig& c) { return agent_name(c.agent); }});
    t.push_back({"total_steps", [](RunConfig& c, const std::string& k, const std::string& v) { c.total_steps = to_int(k, v); },
                 [](const RunConfig& c) { return std::to_string(c.total_steps); }});
    t.push_back({"trials", [](RunConfig& c, const std::string& k, const std::string& v) { c.trials = static_cast<int>(to_int(k, v)); },
                 [](const RunConfig& c) { return std::to_string(c.trials); }});
    t.push_back({"base_seed",
                 [](RunConfig& c, const std::string& k, const std::string& v) {
                   const auto s = to_int(k, v);
                   if (s < 0) throw ConfigError("config key '" + k + "' must be non-negative");
                   c.base_seed = static_cast<std::uint64_t>(s);
                 },
                 [](const RunConfig& c) { return std::to_string(c.base_seed); }});
    t.push_back({"output_dir", [](RunConfig& c, const std::string&, const std::string& v) { c.output_dir = v; },
                 [](const RunConfig& c) { return c.output_dir.string(); }});
    t.push_back({"parallel", [](RunConfig& c, const std::string& k, const std::string& v) { c.parallel = to_bool(k, v); },
                 [](const RunConfig& c) -> std::string { return c.parallel ? "true" : "false"; }});
    t.push_back({"log_every", [](RunConfig& c, const std::string& k, const std::string& v) { c.log_every = static_cast<int>(to_int(k, v)); },
                 [](const RunConfig& c) { return std::to_string(c.log_every); }});

    t.push_back({"env.variant",
                 [](RunConfig& c, const std::string& k, const std::string& v) {
                   const std::string l = lower(v);
                   if (l == "staticreacher" || l == "static_reacher") c.env.variant = env::Variant::kStaticReacher;
                   else if (l == "reacher") c.env.variant = env::Variant::kReacher;
                   else if (l == "tracker") c.env.variant = env::Variant::kTracker;
                   else throw ConfigError("config key '" + k + "': expected StaticReacher, Reacher or Tracker, got '" + v + "'");
                 },
                 [](const RunConfig& c) { return variant_name(c.env.variant); }});
    t.push_back({"env.observation_mode",
                 [](RunConfig& c, const std::string& k, const std::string& v) {
                   const std::string l = lower(v);
                   if (l == "image") c.env.observation_mode = env::ObservationMode::kImage;
                   else if (l == "features") c.env.observation_mode = env::ObservationMode::kFeatures;
                   else throw ConfigError("config key '" + k + "': expected Image or Features, got '" + v + "'");
                 },
                 [](const RunConfig& c) { return observation_name(c.env.observation_mode); }});
    t.push_back(int_key("env.max_episode_steps", &RunConfig::env, &EnvConfig::max_episode_steps));
    t.push_back(real_key("env.goal_reward", &RunConfig::env, &EnvConfig::goal_reward));
    t.push_back(real_key("env.out_of_frame_reward", &RunConfig::env, &EnvConfig::out_of_frame_reward));
    t.push_back(real_key("env.block_penalty", &RunConfig::env, &EnvConfig::block_penalty));
    t.push_back(real_key("env.goal_radius", &RunConfig::env, &EnvConfig::goal_radius));
    t.push_back(real_key("env.goal_dist", &RunConfig::env, &EnvConfig::goal_dist));
    t.push_back(real_key("env.max_dist", &RunConfig::env, &EnvConfig::max_dist));
    t.push_back(real_key("env.max_radius", &RunConfig::env, &EnvConfig::max_radius));
    t.push_back(real_key("env.min_radius", &RunConfig::env, &EnvConfig::min_radius));
    t.push_back({"env.start_pose",
                 [](RunConfig& c, const std::string& k, const std::string& v) {
                   std::istringstream is(v);
                   std::string item;
                   std::size_t i = 0;
                   while (std::getline(is, item, ',')) {
                     if (i >= 6) throw ConfigError("config key '" + k + "': expected 6 comma-separated angles");
                     c.env.start_pose.angles[i++] = to_double(k, trim(item));
                   }
                   if (i != 6) throw ConfigError("config key '" + k + "': expected 6 comma-separated angles");
                 },
                 [](const RunConfig& c) {
                   std::string s;
                   for (std::size_t i = 0; i < 6; ++i) s += (i ? "," : "") + num(c.env.start_pose.angles[i]);
                   return s;
                 }});
    t.push_back(real_key("env.monitor_distance", &RunConfig::env, &EnvConfig::monitor_distance));
    t.push_back(real_key("env.monitor_azimuth", &RunConfig::env, &EnvConfig::monitor_azimuth));
    t.push_back({"env.focal_px", [](RunConfig& c, const std::string& k, const std::string& v) { c.env.camera.focal_px = to_double(k, v); },
                 [](const RunConfig& c) { return num(c.env.camera.focal_px); }});
    t.push_back({"env.noise_std", [](RunConfig& c, const std::string& k, const std::string& v) { c.env.scene.noise_std = to_double(k, v); },
                 [](const RunConfig& c) { return num(c.env.scene.noise_std); }});
    t.push_back({"env.lighting_min", [](RunConfig& c, const std::string& k, const std::string& v) { c.env.scene.lighting_min = to_double(k, v); },
                 [](const RunConfig& c) { return num(c.env.scene.lighting_min); }});
    t.push_back({"env.lighting_max", [](RunConfig& c, const std::string& k, const std::string& v) { c.env.scene.lighting_max = to_double(k, v); },
                 [](const RunConfig& c) { return num(c.env.scene.lighting_max); }});
    t.push_back({"env.clutter",
                 [](RunConfig& c, const std::string& k, const std::string& v) {
                   c.env.scene.clutter = to_bool(k, v) ? scene::SceneConfig::default_clutter() : std::vector<scene::ClutterShape>{};
                 },
                 [](const RunConfig& c) -> std::string { return c.env.scene.clutter.empty() ? "false" : "true"; }});
    t.push_back({"env.target_radius_px", [](RunConfig& c, const std::string& k, const std::string& v) { c.env.target.radius_px = to_double(k, v); },
                 [](const RunConfig& c) { return num(c.env.target.radius_px); }});
    t.push_back({"env.reset_margin",
                 [](RunConfig& c, const std::string& k, const std::string& v) { c.env.target.reset_margin = static_cast<int>(to_int(k, v)); },
                 [](const RunConfig& c) { return std::to_string(c.env.target.reset_margin); }});
    t.push_back({"env.drift_speed", [](RunConfig& c, const std::string& k, const std::string& v) { c.env.target.drift_speed = to_double(k, v); },
                 [](const RunConfig& c) { return num(c.env.target.drift_speed); }});
    t.push_back({"vision.red_cutoff", [](RunConfig& c, const std::string& k, const std::string& v) { c.env.cutoffs.red = static_cast<int>(to_int(k, v)); },
                 [](const RunConfig& c) { return std::to_string(c.env.cutoffs.red); }});
    t.push_back({"vision.green_cutoff", [](RunConfig& c, const std::string& k, const std::string& v) { c.env.cutoffs.green = static_cast<int>(to_int(k, v)); },
                 [](const RunConfig& c) { return std::to_string(c.env.cutoffs.green); }});
    t.push_back({"vision.blue_cutoff", [](RunConfig& c, const std::string& k, const std::string& v) { c.env.cutoffs.blue = static_cast<int>(to_int(k, v)); },
                 [](const RunConfig& c) { return std::to_string(c.env.cutoffs.blue); }});
    t.push_back({"vision.accumulator_scale",
                 [](RunConfig& c, const std::string& k, const std::string& v) { c.env.hough.accumulator_scale = static_cast<int>(to_int(k, v)); },
                 [](const RunConfig& c) { return std::to_string(c.env.hough.accumulator_scale); }});
    t.push_back({"vision.min_center_dist", [](RunConfig& c, const std::string& k, const std::string& v) { c.env.hough.min_center_dist = to_double(k, v); },
                 [](const RunConfig& c) { return num(c.env.hough.min_center_dist); }});
    t.push_back({"vision.edge_threshold",
                 [](RunConfig& c, const std::string& k, const std::string& v) { c.env.hough.edge_threshold = static_cast<int>(to_int(k, v)); },
                 [](const RunConfig& c) { return std::to_string(c.env.hough.edge_threshold); }});
    t.push_back({"vision.vote_threshold", [](RunConfig& c, const std::string& k, const std::string& v) { c.env.hough.vote_threshold = to_double(k, v); },
                 [](const RunConfig& c) { return num(c.env.hough.vote_threshold); }});

    using D = agents::DQNConfig;
    using P = agents::PPOConfig;
    t.push_back(agent_real("gamma", &D::gamma, &P::gamma));
    t.push_back(agent_real("lr", &D::lr, &P::lr));
    t.push_back(agent_real("max_grad_norm", &D::max_grad_norm, &P::max_grad_norm));
    t.push_back(agent_int<int, int>("batch_size", &D::batch_size, &P::minibatch_size));
    t.push_back({"agent.target_sync",
                 [](RunConfig& c, const std::string& k, const std::string& v) {
                   if (c.agent != AgentKind::kDQN) throw ConfigError("config key '" + k + "' does not apply to PPO");
                   const std::string l = lower(v);
                   if (l == "hardcopy" || l == "hard") c.dqn.target_sync = agents::TargetSync::kHardCopy;
                   else if (l == "polyak") c.dqn.target_sync = agents::TargetSync::kPolyak;
                   else throw ConfigError("config key '" + k + "': expected HardCopy or Polyak, got '" + v + "'");
                 },
                 [](const RunConfig& c) -> std::string {
                   if (c.agent != AgentKind::kDQN) return "";
                   return c.dqn.target_sync == agents::TargetSync::kHardCopy ? "HardCopy" : "Polyak";
                 }});
    t.push_back(agent_int<int, int>("target_period", &D::target_period, nullptr));
    t.push_back(agent_real("polyak_rate", &D::polyak_rate, nullptr));
    t.push_back(agent_real("epsilon_start", &D::epsilon_start, nullptr));
    t.push_back(agent_real("epsilon_end", &D::epsilon_end, nullptr));
    t.push_back(agent_int<std::int64_t, int>("epsilon_decay_steps", &D::epsilon_decay_steps, nullptr));
    t.push_back(agent_int<int, int>("train_start", &D::train_start, nullptr));
    t.push_back(agent_int<int, int>("update_every", &D::update_every, nullptr));
    t.push_back(agent_int<std::size_t, int>("buffer_capacity", &D::buffer_capacity, nullptr));
    t.push_back(agent_real("gae_lambda", nullptr, &P::gae_lambda));
    t.push_back(agent_real("clip_eps", nullptr, &P::clip_eps));
    t.push_back(agent_int<int, int>("epochs", nullptr, &P::epochs));
    t.push_back(agent_int<int, int>("rollout_length", nullptr, &P::rollout_length));
    t.push_back(agent_real("entropy_coef", nullptr, &P::entropy_coef));
    t.push_back(agent_real("value_coef", nullptr, &P::value_coef));
    return t;
  }();
  return table;
}

}  // namespace

std::string agent_name(AgentKind k) { return k == AgentKind::kDQN ? "DQN" : "PPO"; }

std::string variant_name(env::Variant v) {
  switch (v) {
    case env::Variant::kStaticReacher: return "StaticReacher";
    case env::Variant::kReacher: return "Reacher";
    case env::Variant::kTracker: return "Tracker";
  }
  return "StaticReacher";
}

std::string observation_name(env::ObservationMode m) {
  return m == env::ObservationMode::kImage ? "Image" : "Features";
}

void RunConfig::validate() const {
  if (trials < 1) throw ConfigError("config key 'trials' must be >= 1");
  if (total_steps <= 0) throw ConfigError("config key 'total_steps' must be > 0");
  if (log_every < 0) throw ConfigError("config key 'log_every' must be >= 0");
  if (output_dir.empty()) throw ConfigError("config key 'output_dir' must not be empty");
  env.validate();
  if (agent == AgentKind::kDQN) {
    dqn.validate();
  } else {
    ppo.validate();
  }
}

KeyValues parse_key_values(const std::string& text, const std::string& source) {
  KeyValues kv;
  std::istringstream is(text);
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw FormatError(source + ":" + std::to_string(lineno) + ": expected 'key = value'");
    }
    std::string key = trim(line.substr(0, eq));
    if (key.empty()) throw FormatError(source + ":" + std::to_string(lineno) + ": empty key");
    kv.emplace_back(std::move(key), trim(line.substr(eq + 1)));
  }
  return kv;
}

KeyValues read_key_values(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_key_values(ss.str(), path.string());
}

std::pair<std::string, std::string> parse_override(const std::string& arg) {
  const auto eq = arg.find('=');
  if (eq == std::string::npos || trim(arg.substr(0, eq)).empty()) {
    throw ConfigError("override '" + arg + "' is not of the form key=value");
  }
  return {trim(arg.substr(0, eq)), trim(arg.substr(eq + 1))};
}

RunConfig build_run_config(const KeyValues& kv) {
  std::map<std::string, const KeyDef*> index;
  for (const KeyDef& d : key_table()) index[d.key] = &d;
  // Last assignment wins; the agent kind is resolved first because agent.*
  // keys are routed by it.
  std::map<std::string, std::string> last;
  std::vector<std::string> order;
  for (const auto& [k, v] : kv) {
    if (!index.count(k)) throw ConfigError("unknown config key '" + k + "'");
    if (!last.count(k)) order.push_back(k);
    last[k] = v;
  }
  RunConfig cfg;
  if (last.count("agent")) index["agent"]->set(cfg, "agent", last["agent"]);
  cfg.total_steps = cfg.agent == AgentKind::kDQN ? 60000 : 40000;
  for (const std::string& k : order) {
    if (k != "agent") index[k]->set(cfg, k, last[k]);
  }
  if (!last.count("agent.epsilon_decay_steps")) cfg.dqn.epsilon_decay_steps = std::max<std::int64_t>(cfg.total_steps, 1);
  cfg.validate();
  return cfg;
}

std::vector<std::string> known_keys() {
  std::vector<std::string> keys;
  for (const KeyDef& d : key_table()) keys.push_back(d.key);
  return keys;
}

std::string to_text(const RunConfig& cfg) {
  std::string out;
  for (const KeyDef& d : key_table()) {
    const std::string v = d.get(cfg);
    if (d.key.rfind("agent.", 0) == 0 && v.empty()) continue;
    out += d.key + " = " + v + "\n";
  }
  return out;
}

}  // namespace armrl::harness
