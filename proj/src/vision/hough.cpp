#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <tuple>
#include <mutex>
#include <numbers>

#include "armrl/vision.hpp"

namespace armrl::vision {

namespace {

// Distinct integer offsets on the circle of radius r, in angular order.
const std::vector<Eigen::Vector2i>& circle_offsets(int r) {
  static std::array<std::vector<Eigen::Vector2i>, kMaxRadius + 1> table;
  static std::once_flag once;
  std::call_once(once, [] {
    for (int rad = 1; rad <= kMaxRadius; ++rad) {
      auto& out = table[static_cast<std::size_t>(rad)];
      const int samples = static_cast<int>(std::ceil(4.0 * std::numbers::pi * rad));
      for (int k = 0; k < samples; ++k) {
        const double theta = 2.0 * std::numbers::pi * k / samples;
        const Eigen::Vector2i o(static_cast<int>(std::lround(rad * std::cos(theta))),
                                static_cast<int>(std::lround(rad * std::sin(theta))));
        if (std::find(out.begin(), out.end(), o) == out.end()) out.push_back(o);
      }
    }
  });
  return table.at(static_cast<std::size_t>(r));
}

// For each radius and each sub-bin position of an edge pixel, the distinct
// accumulator bins its vote circle crosses, as linear offsets into a grid of
// row stride `stride`.
struct BinDeltas {
  std::vector<std::vector<std::vector<int>>> table;  // [r][parity] -> offsets
};

const BinDeltas& bin_deltas(int scale, int stride, int r_max) {
  static std::mutex mu;
  static std::map<std::tuple<int, int, int>, BinDeltas> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto [it, inserted] = cache.try_emplace({scale, stride, r_max});
  if (!inserted) return it->second;
  BinDeltas& bd = it->second;
  bd.table.resize(static_cast<std::size_t>(r_max) + 1);
  auto floor_div = [scale](int v) { return v >= 0 ? v / scale : -((-v + scale - 1) / scale); };
  for (int r = 1; r <= r_max; ++r) {
    auto& per_parity = bd.table[static_cast<std::size_t>(r)];
    per_parity.resize(static_cast<std::size_t>(scale) * scale);
    for (int py = 0; py < scale; ++py) {
      for (int px = 0; px < scale; ++px) {
        auto& out = per_parity[static_cast<std::size_t>(py * scale + px)];
        for (const auto& o : circle_offsets(r)) {
          const int d = floor_div(py + o.y()) * stride + floor_div(px + o.x());
          if (std::find(out.begin(), out.end(), d) == out.end()) out.push_back(d);
        }
      }
    }
  }
  return bd;
}

struct Candidate {
  int votes;
  int r;
  int bx;
  int by;
};

// Boundary pixels of a disc of radius R sit at centre distance in (R-1, R];
// this band scores hypothesis (c, r) against that shell.
constexpr double kShellOffset = 0.5;
constexpr double kShellHalfWidth = 0.75;

struct Fit {
  int score = 0;
  double sq_residual = 0.0;
  double mean_dist = 0.0;
};

Fit score_circle(const std::vector<Eigen::Vector2i>& edges, double cx, double cy, int r) {
  Fit f;
  const double shell = r - kShellOffset;
  double sum = 0.0;
  for (const auto& e : edges) {
    const double dx = e.x() - cx, dy = e.y() - cy;
    const double d = std::sqrt(dx * dx + dy * dy);
    const double res = d - shell;
    if (std::abs(res) <= kShellHalfWidth) {
      ++f.score;
      f.sq_residual += res * res;
      sum += d;
    }
  }
  if (f.score > 0) f.mean_dist = sum / f.score;
  return f;
}

}  // namespace

std::vector<Eigen::Vector2i> boundary_pixels(const BinaryMask& mask, int edge_threshold) {
  std::vector<Eigen::Vector2i> edges;
  const int w = mask.width(), h = mask.height();
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (!mask.get(x, y)) continue;
      int outside = 0;
      if (x > 0 && !mask.get(x - 1, y)) ++outside;
      if (x + 1 < w && !mask.get(x + 1, y)) ++outside;
      if (y > 0 && !mask.get(x, y - 1)) ++outside;
      if (y + 1 < h && !mask.get(x, y + 1)) ++outside;
      if (outside >= edge_threshold) edges.emplace_back(x, y);
    }
  }
  return edges;
}

int ideal_boundary_count(int r) {
  static std::array<int, kMaxRadius + 1> table{};
  static std::once_flag once;
  std::call_once(once, [] {
    for (int rad = 1; rad <= kMaxRadius; ++rad) {
      const int size = 2 * rad + 3;
      BinaryMask disc(size, size);
      for (int y = 0; y < size; ++y) {
        for (int x = 0; x < size; ++x) {
          const int dx = x - rad - 1, dy = y - rad - 1;
          disc.set(x, y, dx * dx + dy * dy <= rad * rad);
        }
      }
      table[static_cast<std::size_t>(rad)] = static_cast<int>(boundary_pixels(disc, 1).size());
    }
  });
  return table.at(static_cast<std::size_t>(r));
}

std::vector<Detection> hough_circles(const BinaryMask& mask, const HoughConfig& cfg, int r_min, int r_max) {
  const std::vector<Eigen::Vector2i> edges = boundary_pixels(mask, cfg.edge_threshold);
  if (edges.empty()) return {};

  r_min = std::max(r_min, 1);
  r_max = std::min(r_max, kMaxRadius);
  const int w = mask.width(), h = mask.height();
  const int s = std::max(cfg.accumulator_scale, 1);
  const int gw = (w + s - 1) / s, gh = (h + s - 1) / s;
  // The grid is padded so votes for off-frame centres need no bounds checks.
  const int pad = r_max / s + 2;
  const int gwp = gw + 2 * pad, ghp = gh + 2 * pad;
  const BinDeltas& deltas = bin_deltas(s, gwp, r_max);

  std::vector<int> acc(static_cast<std::size_t>(gwp) * ghp, 0);
  std::vector<int> base(edges.size());
  std::vector<int> parity(edges.size());
  int bx_lo = gw, bx_hi = 0, by_lo = gh, by_hi = 0;
  for (std::size_t i = 0; i < edges.size(); ++i) {
    const int ex = edges[i].x(), ey = edges[i].y();
    base[i] = (ey / s + pad) * gwp + ex / s + pad;
    parity[i] = (ey % s) * s + ex % s;
    bx_lo = std::min(bx_lo, ex / s);
    bx_hi = std::max(bx_hi, ex / s);
    by_lo = std::min(by_lo, ey / s);
    by_hi = std::max(by_hi, ey / s);
  }

  std::vector<Candidate> candidates;
  int* grid = acc.data();
  for (int r = r_min; r <= r_max; ++r) {
    for (std::size_t i = 0; i < edges.size(); ++i) {
      int* origin = grid + base[i];
      for (const int d : deltas.table[static_cast<std::size_t>(r)][static_cast<std::size_t>(parity[i])]) ++origin[d];
    }
    // Every vote for radius r lies within reach + 1 bins of the edge bbox.
    const int reach = r / s + 2;
    const double needed = cfg.vote_threshold * ideal_boundary_count(r);
    for (int by = by_lo - reach; by <= by_hi + reach; ++by) {
      int* row = grid + (by + pad) * gwp + pad;
      for (int bx = bx_lo - reach; bx <= bx_hi + reach; ++bx) {
        int& v = row[bx];
        if (v == 0) continue;
        if (v >= needed && bx >= 0 && by >= 0 && bx < gw && by < gh) candidates.push_back({v, r, bx, by});
        v = 0;
      }
    }
  }

  std::sort(candidates.begin(), candidates.end(), [](const Candidate& a, const Candidate& b) {
    if (a.votes != b.votes) return a.votes > b.votes;
    if (a.r != b.r) return a.r < b.r;
    if (a.by != b.by) return a.by < b.by;
    return a.bx < b.bx;
  });

  const double half_bin = 0.5 * (s - 1);
  const double min_d2 = cfg.min_center_dist * cfg.min_center_dist;
  std::vector<Eigen::Vector2d> kept_centers;
  std::vector<Detection> out;
  for (const Candidate& c : candidates) {
    const Eigen::Vector2d coarse(c.bx * s + half_bin, c.by * s + half_bin);
    const bool suppressed = std::any_of(kept_centers.begin(), kept_centers.end(), [&](const Eigen::Vector2d& k) {
      return (k - coarse).squaredNorm() < min_d2;
    });
    if (suppressed) continue;
    kept_centers.push_back(coarse);

    // Local refinement at unit resolution around the coarse bin.
    Fit best;
    int best_x = 0, best_y = 0, best_r = c.r;
    bool have = false;
    for (int y = c.by * s - 2; y <= c.by * s + s + 1; ++y) {
      if (y < 0 || y >= h) continue;
      for (int x = c.bx * s - 2; x <= c.bx * s + s + 1; ++x) {
        if (x < 0 || x >= w) continue;
        for (int r = std::max(r_min, c.r - 2); r <= std::min(r_max, c.r + 2); ++r) {
          const Fit f = score_circle(edges, x, y, r);
          if (!have || f.score > best.score || (f.score == best.score && f.sq_residual < best.sq_residual)) {
            best = f;
            best_x = x;
            best_y = y;
            best_r = r;
            have = true;
          }
        }
      }
    }
    if (!have || best.score < cfg.vote_threshold * ideal_boundary_count(best_r)) continue;
    Detection d;
    d.center = Eigen::Vector2d(best_x, best_y);
    d.radius = std::clamp(best.mean_dist + kShellOffset, static_cast<double>(r_min), static_cast<double>(r_max));
    d.votes = best.score;
    out.push_back(d);
  }
  std::stable_sort(out.begin(), out.end(), [](const Detection& a, const Detection& b) { return a.votes > b.votes; });
  return out;
}

std::optional<Detection> detect_target(const Image& img, const ChannelCutoffs& cutoffs, const HoughConfig& cfg) {
  const auto detections = hough_circles(isolate_target(img, cutoffs), cfg);
  if (detections.empty()) return std::nullopt;
  return detections.front();
}

}  // namespace armrl::vision
