#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "armrl/agents.hpp"
#include "armrl/config.hpp"

namespace armrl::harness {

// ---------------------------------------------------------------- metrics

/// One row per finished episode. The last row of a trial may be a partial
/// episode cut by total_steps (outcome "partial"). Loss columns average the
/// updates that ran during the episode and are empty when none ran.
struct MetricsRow {
  int trial = 0;
  int episode = 0;
  std::int64_t env_step = 0;  // cumulative steps at episode end
  double episode_return = 0.0;
  int episode_length = 0;
  double mean_step_reward = 0.0;
  std::string outcome;  // goal | truncated | partial
  std::optional<double> epsilon;
  int updates = 0;
  std::optional<double> loss, policy_loss, value_loss, entropy, approx_kl, clip_fraction;
};

std::string metrics_header();
std::string format_metrics_row(const MetricsRow& row);
/// Throws FormatError naming `source` and the line number of a bad row.
std::vector<MetricsRow> parse_metrics_csv(const std::string& text, const std::string& source = "<csv>");
std::vector<MetricsRow> read_metrics_csv(const std::filesystem::path& path);

// ---------------------------------------------------------------- train

std::unique_ptr<agents::Agent> make_agent(const RunConfig& cfg, std::uint64_t seed);
/// Reset seed of an episode: a fixed mix of trial seed and episode index.
std::uint64_t episode_seed(std::uint64_t trial_seed, int episode);

struct TrialResult {
  std::vector<MetricsRow> rows;
  std::filesystem::path metrics_path;
  std::filesystem::path checkpoint_path;
};

/// Runs trial k with seed base_seed + k into <output_dir>/trial_<k>/.
TrialResult run_trial(const RunConfig& cfg, int trial);

struct TrainResult {
  std::vector<TrialResult> trials;
  std::filesystem::path metrics_path;  // merged CSV of all trials
};

/// All trials (concurrently when cfg.parallel), then the merged metrics.csv
/// and the resolved config.txt.
TrainResult train(const RunConfig& cfg);

// ---------------------------------------------------------------- evaluate

struct EvalOptions {
  std::optional<std::filesystem::path> checkpoint;  // none: untrained network seeded from `seed`
  bool uniform_random = false;                       // ignore any network; uniform actions
  int episodes = 10;
  std::uint64_t seed = 1000;
  bool dump_frames = false;
  int frame_every = 10;
  std::filesystem::path output_dir;  // empty: write nothing
};

struct EvalStep {
  int episode = 0;
  int step = 0;
  int action = 0;
  double reward = 0.0;
  bool blocked = false;
  bool detected = false;
  double u = 0.0, v = 0.0, radius = 0.0;
  bool terminated = false;
  bool truncated = false;
  kinematics::JointState joints;

  bool operator==(const EvalStep&) const = default;
};

struct EvalEpisode {
  double episode_return = 0.0;
  int length = 0;
  bool goal = false;
};

struct EvalResult {
  std::vector<EvalEpisode> episodes;
  std::vector<EvalStep> steps;
  double mean_return = 0.0;
  double mean_length = 0.0;
  double success_rate = 0.0;
};

/// Greedy (Q) or mode (policy) rollouts. Throws ShapeError when the
/// checkpoint's input does not match the observation mode.
EvalResult evaluate(const env::EnvConfig& env_cfg, const EvalOptions& opts);
/// Same, with an in-memory network.
EvalResult evaluate(const env::EnvConfig& env_cfg, const nn::Network* net, const EvalOptions& opts);
std::string eval_steps_csv(const EvalResult& result);

// ---------------------------------------------------------------- plot

/// Per-trial curve sampled on a shared step grid.
struct Band {
  std::vector<double> steps;
  std::vector<double> mean;
  std::vector<double> stderr_;  // empty when only one trial
  int trials = 0;
};

/// Trailing mean over the last `window` values (fewer at the start).
std::vector<double> trailing_mean(const std::vector<double>& values, int window);

/// Smooths each trial, samples it as a step function at `points` evenly
/// spaced env steps over the range every trial covers, and reduces to mean
/// and standard error (sample std / sqrt(n)) across trials.
Band aggregate(const std::vector<std::vector<MetricsRow>>& trials, double (*metric)(const MetricsRow&), int window,
               int points = 200);

struct PlotSeries {
  std::string label;
  Band band;
};

std::string render_svg(const std::vector<PlotSeries>& series, const std::string& title, const std::string& y_label);

/// Writes <out_prefix>_reward.svg and <out_prefix>_length.svg; one series per
/// CSV (trials within a CSV are grouped by the trial column).
std::vector<std::filesystem::path> plot(const std::vector<std::filesystem::path>& csvs,
                                        const std::filesystem::path& out_prefix, int window = 20);

}  // namespace armrl::harness
