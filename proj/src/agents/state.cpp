#include <cstring>

#include "armrl/agents.hpp"
#include "armrl/error.hpp"

namespace armrl::agents {

StatePtr pack(const env::Observation& obs) {
  auto state = std::make_shared<State>();
  if (const auto* f = std::get_if<env::FeatureVector>(&obs)) {
    state->features = *f;
    return state;
  }
  const Image& img = std::get<Image>(obs);
  const int w = img.width() / kDownsample, h = img.height() / kDownsample;
  state->pixels.resize(static_cast<std::size_t>(3) * w * h);
  const std::uint8_t* src = img.data().data();
  const int row = img.width() * 3;
  constexpr int kArea = kDownsample * kDownsample;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      int acc[3] = {0, 0, 0};
      for (int dy = 0; dy < kDownsample; ++dy) {
        const std::uint8_t* p = src + (y * kDownsample + dy) * row + x * kDownsample * 3;
        for (int dx = 0; dx < kDownsample; ++dx, p += 3) {
          acc[0] += p[0];
          acc[1] += p[1];
          acc[2] += p[2];
        }
      }
      for (int c = 0; c < 3; ++c) {
        state->pixels[(static_cast<std::size_t>(c) * h + y) * w + x] =
            static_cast<std::uint8_t>((acc[c] + kArea / 2) / kArea);
      }
    }
  }
  return state;
}

nn::Shape input_shape(env::ObservationMode mode) {
  if (mode == env::ObservationMode::kFeatures) return {env::kFeatureSize};
  return {3, scene::CameraModel::kHeight / kDownsample, scene::CameraModel::kWidth / kDownsample};
}

nn::Tensor to_batch(const std::vector<const State*>& states, const nn::Shape& shape) {
  const std::size_t per = nn::shape_size(shape);
  nn::Shape full{static_cast<int>(states.size())};
  full.insert(full.end(), shape.begin(), shape.end());
  nn::Tensor out(full);
  double* dst = out.data();
  for (const State* s : states) {
    if (!s->features.empty()) {
      if (s->features.size() != per) throw ShapeError("feature state does not match network input");
      std::memcpy(dst, s->features.data(), per * sizeof(double));
    } else {
      if (s->pixels.size() != per) throw ShapeError("image state does not match network input");
      for (std::size_t i = 0; i < per; ++i) dst[i] = s->pixels[i] * (1.0 / 255.0);
    }
    dst += per;
  }
  return out;
}

nn::Tensor to_batch(const State& state, const nn::Shape& shape) { return to_batch(std::vector<const State*>{&state}, shape); }

ReplayBuffer::ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
  if (capacity == 0) throw ConfigError("replay buffer capacity must be positive");
  items_.reserve(capacity);
}

void ReplayBuffer::push(Transition t) {
  if (items_.size() < capacity_) {
    items_.push_back(std::move(t));
  } else {
    items_[head_] = std::move(t);
    head_ = (head_ + 1) % capacity_;
  }
}

const Transition& ReplayBuffer::at(std::size_t i) const {
  if (i >= items_.size()) throw UsageError("replay index out of range");
  return items_[(head_ + i) % items_.size()];
}

std::vector<std::size_t> ReplayBuffer::sample_indices(std::size_t n, Rng& rng) const {
  if (items_.empty()) throw UsageError("sampling an empty replay buffer");
  std::vector<std::size_t> idx(n);
  for (auto& i : idx) i = uniform_index(rng, items_.size());
  return idx;
}

std::vector<const Transition*> ReplayBuffer::sample(std::size_t n, Rng& rng) const {
  std::vector<const Transition*> out;
  out.reserve(n);
  for (std::size_t i : sample_indices(n, rng)) out.push_back(&at(i));
  return out;
}

int sample_categorical(const double* log_probs, int n, Rng& rng) {
  const double u = uniform01(rng);
  double c = 0.0;
  for (int i = 0; i < n; ++i) {
    c += std::exp(log_probs[i]);
    if (u < c) return i;
  }
  // Rounding left the cumulative sum a hair under 1.
  for (int i = n - 1; i > 0; --i) {
    if (std::isfinite(log_probs[i])) return i;
  }
  return 0;
}

}  // namespace armrl::agents
