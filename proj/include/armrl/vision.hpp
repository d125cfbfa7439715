#pragma once

#include <Eigen/Dense>

#include <optional>
#include <vector>

#include "armrl/image.hpp"

namespace armrl::vision {

/// Per-channel cutoffs: a pixel survives a channel threshold iff its
/// intensity is >= the cutoff ("nearly total presence").
struct ChannelCutoffs {
  int red = 200;
  int green = 200;
  int blue = 200;
};

/// The four detection hyperparameters.
struct HoughConfig {
  int accumulator_scale = 2;      // centre bin size of the coarse vote grid, px
  double min_center_dist = 40.0;  // non-maximum suppression radius, px
  int edge_threshold = 1;         // min. 4-neighbours outside the mask for an edge pixel
  double vote_threshold = 0.5;    // fraction of an ideal disc's boundary pixel count
};

inline constexpr int kMinRadius = 10;
inline constexpr int kMaxRadius = 40;

struct Detection {
  Eigen::Vector2d center = Eigen::Vector2d::Zero();
  double radius = 0.0;
  int votes = 0;
};

BinaryMask threshold_channel(const Image& img, Channel channel, int cutoff);

/// red AND NOT green AND NOT blue, each thresholded.
BinaryMask isolate_target(const Image& img, const ChannelCutoffs& cutoffs);

/// Mask pixels with at least `edge_threshold` unset in-frame 4-neighbours.
std::vector<Eigen::Vector2i> boundary_pixels(const BinaryMask& mask, int edge_threshold);

/// Number of boundary pixels of an ideal rasterised disc of radius r.
int ideal_boundary_count(int r);

/// Circle Hough transform over the mask boundary. Returns detections above
/// threshold after non-maximum suppression, strongest first.
std::vector<Detection> hough_circles(const BinaryMask& mask, const HoughConfig& cfg,
                                     int r_min = kMinRadius, int r_max = kMaxRadius);

std::optional<Detection> detect_target(const Image& img, const ChannelCutoffs& cutoffs,
                                       const HoughConfig& cfg);

}  // namespace armrl::vision
