// Command-line front end: train, evaluate, plot, vision-debug.

#include <cstdio>
#include <cstdlib>
#include <iostream>

#include <CLI11.hpp>

#include "armrl/error.hpp"
#include "armrl/harness.hpp"
#include "armrl/vision.hpp"

namespace {

using namespace armrl;

harness::RunConfig load_config(const std::string& path, const std::vector<std::string>& overrides) {
  harness::KeyValues kv;
  if (!path.empty()) kv = harness::read_key_values(path);
  for (const std::string& o : overrides) kv.push_back(harness::parse_override(o));
  harness::RunConfig cfg = harness::build_run_config(kv);
  if (const char* out = std::getenv("ARM_RL_OUTPUT"); out != nullptr && *out != '\0') cfg.output_dir = out;
  return cfg;
}

int run_train(const std::string& config, const std::vector<std::string>& overrides) {
  const harness::RunConfig cfg = load_config(config, overrides);
  std::cout << "training " << harness::agent_name(cfg.agent) << " on " << harness::variant_name(cfg.env.variant)
            << " (" << harness::observation_name(cfg.env.observation_mode) << "), " << cfg.trials << " trial(s) x "
            << cfg.total_steps << " steps -> " << cfg.output_dir.string() << "\n";
  const harness::TrainResult res = harness::train(cfg);
  for (std::size_t k = 0; k < res.trials.size(); ++k) {
    const auto& rows = res.trials[k].rows;
    double len = 0.0;
    int n = 0;
    for (auto it = rows.rbegin(); it != rows.rend() && n < 100; ++it) {
      if (it->outcome == "partial") continue;
      len += it->episode_length;
      ++n;
    }
    std::cout << "trial " << k << ": " << rows.size() << " episodes, mean length (last " << n
              << ") = " << (n ? len / n : 0.0) << ", checkpoint " << res.trials[k].checkpoint_path.string() << "\n";
  }
  std::cout << "metrics: " << res.metrics_path.string() << "\n";
  return 0;
}

int run_evaluate(const std::string& config, const std::vector<std::string>& overrides, const std::string& checkpoint,
                 harness::EvalOptions opts) {
  const harness::RunConfig cfg = load_config(config, overrides);
  if (!checkpoint.empty()) opts.checkpoint = checkpoint;
  const harness::EvalResult r = harness::evaluate(cfg.env, opts);
  for (std::size_t e = 0; e < r.episodes.size(); ++e) {
    std::printf("episode %zu: return %.4f length %d %s\n", e, r.episodes[e].episode_return, r.episodes[e].length,
                r.episodes[e].goal ? "goal" : "no goal");
  }
  std::printf("mean return %.4f  mean length %.2f  success rate %.3f  (%s policy)\n", r.mean_return, r.mean_length,
              r.success_rate, opts.uniform_random ? "uniform random" : opts.checkpoint ? "checkpoint" : "untrained");
  return 0;
}

int run_plot(const std::vector<std::string>& csvs, const std::string& out, int window) {
  std::vector<std::filesystem::path> paths(csvs.begin(), csvs.end());
  for (const auto& p : harness::plot(paths, out, window)) std::cout << "wrote " << p.string() << "\n";
  return 0;
}

void draw_circle(Image& img, double cx, double cy, double r) {
  for (int k = 0; k < 720; ++k) {
    const double t = k * 3.14159265358979323846 / 360.0;
    const int x = static_cast<int>(std::lround(cx + r * std::cos(t)));
    const int y = static_cast<int>(std::lround(cy + r * std::sin(t)));
    if (x >= 0 && y >= 0 && x < img.width() && y < img.height()) img.set(x, y, 0, 255, 0);
  }
}

int run_vision_debug(const std::string& config, const std::vector<std::string>& overrides, const std::string& input,
                     const std::string& out_dir, std::uint64_t seed, const std::vector<double>& joint_offsets) {
  const harness::RunConfig cfg = load_config(config, overrides);
  Image frame;
  if (!input.empty()) {
    frame = read_png(input);
  } else {
    env::Environment env(cfg.env);
    env.reset(seed);
    kinematics::JointState q = env.joints();
    if (!joint_offsets.empty()) {
      if (joint_offsets.size() > 6) throw ConfigError("at most 6 joint offsets");
      for (std::size_t i = 0; i < joint_offsets.size(); ++i) q.angles[i] += joint_offsets[i];
    }
    const kinematics::Pose ee = kinematics::forward_kinematics(cfg.env.dh, q);
    Rng rng(seed);
    frame = scene::render(cfg.env.camera, scene::camera_pose(cfg.env.camera, ee), env.monitor(), env.target(),
                          cfg.env.scene, env.lighting(), rng);
  }
  const BinaryMask mask = vision::isolate_target(frame, cfg.env.cutoffs);
  const auto detections = vision::hough_circles(mask, cfg.env.hough);
  std::filesystem::create_directories(out_dir);
  const std::filesystem::path dir(out_dir);
  write_png(dir / "frame.png", frame);
  write_png(dir / "mask.png", mask);
  Image annotated = frame;
  for (const auto& d : detections) draw_circle(annotated, d.center.x(), d.center.y(), d.radius);
  write_png(dir / "detections.png", annotated);
  std::printf("mask pixels: %zu\n", mask.count());
  if (detections.empty()) std::printf("no circle detected\n");
  for (const auto& d : detections) {
    env::EnvConfig ec = cfg.env;
    std::printf("circle centre (%.2f, %.2f) radius %.2f votes %d%s\n", d.center.x(), d.center.y(), d.radius, d.votes,
                env::is_goal(d, ec) ? "  [goal]" : "");
  }
  std::printf("wrote frame.png, mask.png, detections.png to %s\n", out_dir.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Camera-guided arm reaching: training, evaluation and diagnostics"};
  app.require_subcommand(1);

  std::string config;
  std::vector<std::string> overrides;
  auto add_config = [&](CLI::App* sub) {
    sub->add_option("-c,--config", config, "key = value config file")->check(CLI::ExistingFile);
    sub->add_option("--set", overrides, "override a config key (key=value), repeatable");
  };

  CLI::App* train = app.add_subcommand("train", "train an agent over seeded trials");
  add_config(train);

  CLI::App* eval = app.add_subcommand("evaluate", "roll out a checkpoint (or an untrained network)");
  add_config(eval);
  std::string checkpoint;
  harness::EvalOptions opts;
  std::string eval_out;
  eval->add_option("--checkpoint", checkpoint, "network checkpoint; omit for an untrained network seeded by --seed");
  eval->add_flag("--uniform", opts.uniform_random, "take uniformly random actions instead of a network");
  eval->add_option("--episodes", opts.episodes, "number of episodes")->check(CLI::PositiveNumber);
  eval->add_option("--seed", opts.seed, "evaluation seed");
  eval->add_flag("--dump-frames", opts.dump_frames, "write a PNG every 10 steps");
  eval->add_option("--output", eval_out, "directory for eval_steps.csv and frames");

  CLI::App* plot = app.add_subcommand("plot", "mean +- stderr learning curves as SVG");
  std::vector<std::string> csvs;
  std::string plot_out = "plots/curves";
  int window = 20;
  plot->add_option("csv", csvs, "metrics CSV files (one series each)")->required()->check(CLI::ExistingFile);
  plot->add_option("-o,--out", plot_out, "output prefix; writes <prefix>_reward.svg and <prefix>_length.svg");
  plot->add_option("--window", window, "trailing smoothing window in episodes")->check(CLI::PositiveNumber);

  CLI::App* vis = app.add_subcommand("vision-debug", "run the detector on a frame and write its intermediates");
  add_config(vis);
  std::string input, vis_out = "vision_debug";
  std::uint64_t vis_seed = 0;
  std::vector<double> offsets;
  vis->add_option("--input", input, "PNG to analyse; omit to render the environment's reset frame")
      ->check(CLI::ExistingFile);
  vis->add_option("--output", vis_out, "output directory");
  vis->add_option("--seed", vis_seed, "reset seed when rendering");
  vis->add_option("--joint-offsets", offsets, "radians added to the start pose joints before rendering")
      ->delimiter(',');

  CLI11_PARSE(app, argc, argv);
  try {
    if (*train) return run_train(config, overrides);
    if (*eval) {
      opts.output_dir = eval_out;
      return run_evaluate(config, overrides, checkpoint, opts);
    }
    if (*plot) return run_plot(csvs, plot_out, window);
    if (*vis) return run_vision_debug(config, overrides, input, vis_out, vis_seed, offsets);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
