#include <charconv>
#include <fstream>
#include <sstream>

#include "armrl/error.hpp"
#include "armrl/harness.hpp"

namespace armrl::harness {

namespace {

constexpr const char* kColumns[] = {"trial",       "episode",     "env_step",   "episode_return", "episode_length",
                                    "mean_step_reward", "outcome", "epsilon",   "updates",        "loss",
                                    "policy_loss", "value_loss",  "entropy",    "approx_kl",      "clip_fraction"};
constexpr std::size_t kNumColumns = sizeof(kColumns) / sizeof(kColumns[0]);

std::string num(double v) {
  char buf[32];
  auto r = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, r.ptr);
}

std::string opt(const std::optional<double>& v) { return v ? num(*v) : ""; }

}  // namespace

std::string metrics_header() {
  std::string h;
  for (std::size_t i = 0; i < kNumColumns; ++i) h += (i ? "," : "") + std::string(kColumns[i]);
  return h;
}

std::string format_metrics_row(const MetricsRow& r) {
  std::string s;
  s += std::to_string(r.trial) + ',' + std::to_string(r.episode) + ',' + std::to_string(r.env_step) + ',';
  s += num(r.episode_return) + ',' + std::to_string(r.episode_length) + ',' + num(r.mean_step_reward) + ',';
  s += r.outcome + ',' + opt(r.epsilon) + ',' + std::to_string(r.updates) + ',';
  s += opt(r.loss) + ',' + opt(r.policy_loss) + ',' + opt(r.value_loss) + ',' + opt(r.entropy) + ',';
  s += opt(r.approx_kl) + ',' + opt(r.clip_fraction);
  return s;
}

std::vector<MetricsRow> parse_metrics_csv(const std::string& text, const std::string& source) {
  std::istringstream is(text);
  std::string line;
  int lineno = 0;
  std::vector<MetricsRow> rows;
  auto fail = [&](const std::string& why) {
    return FormatError(source + ":" + std::to_string(lineno) + ": " + why);
  };
  while (std::getline(is, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (lineno == 1) {
      if (line != metrics_header()) throw fail("unexpected header");
      continue;
    }
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::size_t start = 0;
    while (true) {
      const auto comma = line.find(',', start);
      f.push_back(line.substr(start, comma == std::string::npos ? std::string::npos : comma - start));
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
    if (f.size() != kNumColumns) {
      throw fail("expected " + std::to_string(kNumColumns) + " fields, got " + std::to_string(f.size()));
    }
    auto real = [&](std::size_t i) {
      double v = 0.0;
      auto r = std::from_chars(f[i].data(), f[i].data() + f[i].size(), v);
      if (f[i].empty() || r.ec != std::errc() || r.ptr != f[i].data() + f[i].size()) {
        throw fail("bad number in column " + std::string(kColumns[i]));
      }
      return v;
    };
    auto integer = [&](std::size_t i) {
      std::int64_t v = 0;
      auto r = std::from_chars(f[i].data(), f[i].data() + f[i].size(), v);
      if (f[i].empty() || r.ec != std::errc() || r.ptr != f[i].data() + f[i].size()) {
        throw fail("bad integer in column " + std::string(kColumns[i]));
      }
      return v;
    };
    auto maybe = [&](std::size_t i) -> std::optional<double> {
      if (f[i].empty()) return std::nullopt;
      return real(i);
    };
    MetricsRow r;
    r.trial = static_cast<int>(integer(0));
    r.episode = static_cast<int>(integer(1));
    r.env_step = integer(2);
    r.episode_return = real(3);
    r.episode_length = static_cast<int>(integer(4));
    r.mean_step_reward = real(5);
    r.outcome = f[6];
    if (r.outcome != "goal" && r.outcome != "truncated" && r.outcome != "partial") throw fail("bad outcome");
    r.epsilon = maybe(7);
    r.updates = static_cast<int>(integer(8));
    r.loss = maybe(9);
    r.policy_loss = maybe(10);
    r.value_loss = maybe(11);
    r.entropy = maybe(12);
    r.approx_kl = maybe(13);
    r.clip_fraction = maybe(14);
    rows.push_back(std::move(r));
  }
  if (lineno == 0) throw FormatError(source + ": empty file");
  return rows;
}

std::vector<MetricsRow> read_metrics_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_metrics_csv(ss.str(), path.string());
}

}  // namespace armrl::harness
