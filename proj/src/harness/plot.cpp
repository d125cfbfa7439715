#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "armrl/error.hpp"
#include "armrl/harness.hpp"

namespace armrl::harness {

std::vector<double> trailing_mean(const std::vector<double>& values, int window) {
  if (window < 1) throw ConfigError("smoothing window must be >= 1");
  std::vector<double> out(values.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    acc += values[i];
    if (i >= static_cast<std::size_t>(window)) acc -= values[i - static_cast<std::size_t>(window)];
    out[i] = acc / static_cast<double>(std::min<std::size_t>(i + 1, static_cast<std::size_t>(window)));
  }
  return out;
}

Band aggregate(const std::vector<std::vector<MetricsRow>>& trials, double (*metric)(const MetricsRow&), int window,
               int points) {
  Band band;
  band.trials = static_cast<int>(trials.size());
  if (trials.empty()) return band;
  if (points < 2) throw ConfigError("need at least two plot points");

  struct Curve {
    std::vector<double> steps, values;
  };
  std::vector<Curve> curves;
  double lo = -INFINITY, hi = INFINITY;
  for (const auto& rows : trials) {
    if (rows.empty()) throw FormatError("trial without episodes");
    Curve c;
    std::vector<double> raw;
    for (const MetricsRow& r : rows) {
      c.steps.push_back(static_cast<double>(r.env_step));
      raw.push_back(metric(r));
    }
    c.values = trailing_mean(raw, window);
    lo = std::max(lo, c.steps.front());
    hi = std::min(hi, c.steps.back());
    curves.push_back(std::move(c));
  }
  if (hi < lo) hi = lo;
  for (int i = 0; i < points; ++i) {
    const double x = lo + (hi - lo) * i / (points - 1);
    double sum = 0.0;
    std::vector<double> ys;
    for (const Curve& c : curves) {
      // Value of the latest episode finished at or before x.
      auto it = std::upper_bound(c.steps.begin(), c.steps.end(), x);
      const std::size_t k = it == c.steps.begin() ? 0 : static_cast<std::size_t>(it - c.steps.begin()) - 1;
      ys.push_back(c.values[k]);
      sum += c.values[k];
    }
    const double n = static_cast<double>(ys.size());
    const double mean = sum / n;
    band.steps.push_back(x);
    band.mean.push_back(mean);
    if (ys.size() > 1) {
      double ss = 0.0;
      for (double y : ys) ss += (y - mean) * (y - mean);
      band.stderr_.push_back(std::sqrt(ss / (n - 1.0)) / std::sqrt(n));
    }
  }
  return band;
}

std::string render_svg(const std::vector<PlotSeries>& series, const std::string& title, const std::string& y_label) {
  constexpr double kW = 720, kH = 440, kL = 70, kR = 20, kT = 40, kB = 50;
  static const char* kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};
  double x0 = INFINITY, x1 = -INFINITY, y0 = INFINITY, y1 = -INFINITY;
  for (const PlotSeries& s : series) {
    for (std::size_t i = 0; i < s.band.steps.size(); ++i) {
      const double e = s.band.stderr_.empty() ? 0.0 : s.band.stderr_[i];
      x0 = std::min(x0, s.band.steps[i]);
      x1 = std::max(x1, s.band.steps[i]);
      y0 = std::min(y0, s.band.mean[i] - e);
      y1 = std::max(y1, s.band.mean[i] + e);
    }
  }
  if (!std::isfinite(x0)) x0 = 0, x1 = 1, y0 = 0, y1 = 1;
  if (x1 <= x0) x1 = x0 + 1;
  if (y1 - y0 < 1e-9) y0 -= 0.5, y1 += 0.5;
  const double pad = 0.05 * (y1 - y0);
  y0 -= pad;
  y1 += pad;
  auto px = [&](double x) { return kL + (x - x0) / (x1 - x0) * (kW - kL - kR); };
  auto py = [&](double y) { return kH - kB - (y - y0) / (y1 - y0) * (kH - kT - kB); };

  std::ostringstream os;
  os.setf(std::ios::fixed);
  os.precision(2);
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kW << "\" height=\"" << kH << "\" viewBox=\"0 0 " << kW
     << ' ' << kH << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<text x=\"" << kW / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">" << title << "</text>\n";
  os << "<line x1=\"" << kL << "\" y1=\"" << kH - kB << "\" x2=\"" << kW - kR << "\" y2=\"" << kH - kB
     << "\" stroke=\"black\"/>\n";
  os << "<line x1=\"" << kL << "\" y1=\"" << kT << "\" x2=\"" << kL << "\" y2=\"" << kH - kB << "\" stroke=\"black\"/>\n";
  for (int i = 0; i <= 5; ++i) {
    const double xv = x0 + (x1 - x0) * i / 5, yv = y0 + (y1 - y0) * i / 5;
    os << "<text x=\"" << px(xv) << "\" y=\"" << kH - kB + 18 << "\" text-anchor=\"middle\">" << std::lround(xv)
       << "</text>\n";
    std::ostringstream yl;
    yl.precision(3);
    yl << yv;
    os << "<text x=\"" << kL - 6 << "\" y=\"" << py(yv) + 4 << "\" text-anchor=\"end\">" << yl.str() << "</text>\n";
    os << "<line x1=\"" << kL << "\" y1=\"" << py(yv) << "\" x2=\"" << kW - kR << "\" y2=\"" << py(yv)
       << "\" stroke=\"#ddd\"/>\n";
  }
  os << "<text x=\"" << (kL + kW - kR) / 2 << "\" y=\"" << kH - 12 << "\" text-anchor=\"middle\">env step</text>\n";
  os << "<text transform=\"translate(16," << (kT + kH - kB) / 2 << ") rotate(-90)\" text-anchor=\"middle\">" << y_label
     << "</text>\n";

  for (std::size_t k = 0; k < series.size(); ++k) {
    const Band& b = series[k].band;
    const char* color = kColors[k % 6];
    if (!b.stderr_.empty() && !b.steps.empty()) {
      os << "<polygon class=\"band\" fill=\"" << color << "\" fill-opacity=\"0.2\" stroke=\"none\" points=\"";
      for (std::size_t i = 0; i < b.steps.size(); ++i) os << px(b.steps[i]) << ',' << py(b.mean[i] + b.stderr_[i]) << ' ';
      for (std::size_t i = b.steps.size(); i-- > 0;) os << px(b.steps[i]) << ',' << py(b.mean[i] - b.stderr_[i]) << ' ';
      os << "\"/>\n";
    }
    os << "<polyline class=\"mean\" fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.8\" points=\"";
    for (std::size_t i = 0; i < b.steps.size(); ++i) os << px(b.steps[i]) << ',' << py(b.mean[i]) << ' ';
    os << "\"/>\n";
    os << "<text x=\"" << kW - kR - 8 << "\" y=\"" << kT + 16 * (k + 1) << "\" text-anchor=\"end\" fill=\"" << color
       << "\">" << series[k].label << " (n=" << b.trials << ")</text>\n";
  }
  os << "</svg>\n";
  return os.str();
}

std::vector<std::filesystem::path> plot(const std::vector<std::filesystem::path>& csvs,
                                        const std::filesystem::path& out_prefix, int window) {
  if (csvs.empty()) throw UsageError("plot needs at least one CSV");
  std::vector<PlotSeries> reward, length;
  for (const auto& path : csvs) {
    std::map<int, std::vector<MetricsRow>> by_trial;
    for (MetricsRow& r : read_metrics_csv(path)) by_trial[r.trial].push_back(std::move(r));
    std::vector<std::vector<MetricsRow>> trials;
    for (auto& [k, rows] : by_trial) trials.push_back(std::move(rows));
    std::string label = path.parent_path().filename().string();
    if (label.empty()) label = path.stem().string();
    reward.push_back({label, aggregate(trials, [](const MetricsRow& r) { return r.mean_step_reward; }, window)});
    length.push_back({label, aggregate(trials, [](const MetricsRow& r) { return double(r.episode_length); }, window)});
  }
  if (out_prefix.has_parent_path()) std::filesystem::create_directories(out_prefix.parent_path());
  const std::filesystem::path rp = out_prefix.string() + "_reward.svg";
  const std::filesystem::path lp = out_prefix.string() + "_length.svg";
  std::ofstream(rp) << render_svg(reward, "Mean reward per step (mean ± stderr)", "mean step reward");
  std::ofstream(lp) << render_svg(length, "Episode length (mean ± stderr)", "steps per episode");
  return {rp, lp};
}

}  // namespace armrl::harness
