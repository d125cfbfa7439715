#include <cstddef>

#include "armrl/vision.hpp"

namespace armrl::vision {

// Loops go through local pointers: byte stores may alias vector internals and
// would otherwise force a reload per element.

BinaryMask threshold_channel(const Image& img, Channel channel, int cutoff) {
  BinaryMask mask(img.width(), img.height());
  const std::uint8_t* src = img.data().data() + static_cast<std::size_t>(channel);
  std::uint8_t* dst = mask.bits().data();
  const std::size_t n = mask.bits().size();
  for (std::size_t i = 0; i < n; ++i) dst[i] = src[3 * i] >= cutoff ? 1 : 0;
  return mask;
}

BinaryMask isolate_target(const Image& img, const ChannelCutoffs& cutoffs) {
  BinaryMask mask(img.width(), img.height());
  const std::uint8_t* src = img.data().data();
  std::uint8_t* dst = mask.bits().data();
  const std::size_t n = mask.bits().size();
  for (std::size_t i = 0; i < n; ++i) {
    const std::uint8_t* p = src + 3 * i;
    dst[i] = (p[0] >= cutoffs.red && p[1] < cutoffs.green && p[2] < cutoffs.blue) ? 1 : 0;
  }
  return mask;
}

}  // namespace armrl::vision
