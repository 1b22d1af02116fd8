#include "crew/learner/replay.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

namespace crew::learner {

FrameStore::FrameStore(int channels, int height, int width, std::size_t capacity)
    : channels_(channels), height_(height), width_(width), capacity_(capacity) {
  if (capacity == 0) throw std::invalid_argument("FrameStore: capacity must be positive");
  pixels_.resize(frame_size() * capacity);
}

FrameId FrameStore::push(const env::ObservationFrame& frame) {
  if (frame.channels != channels_ || frame.height != height_ || frame.width != width_) {
    throw std::invalid_argument("FrameStore: frame shape does not match the store");
  }
  const FrameId id = next_++;
  std::uint8_t* dst = pixels_.data() + (id % capacity_) * frame_size();
  for (std::size_t i = 0; i < frame_size(); ++i) {
    dst[i] = static_cast<std::uint8_t>(std::lround(std::clamp(frame.pixels[i], 0.0f, 1.0f) * 255.0f));
  }
  return id;
}

const std::uint8_t* FrameStore::data(FrameId id) const {
  if (!contains(id)) throw std::out_of_range("FrameStore: frame " + std::to_string(id) + " is not resident");
  return pixels_.data() + (id % capacity_) * frame_size();
}

void FrameStacker::push(FrameId id) {
  if (ids_.empty()) {
    reset(id);
    return;
  }
  ids_.erase(ids_.begin());
  ids_.push_back(id);
}

nn::FeatureMap<float> assemble(const FrameStore& store, std::span<const StackRef> stacks, double shift_fraction,
                               Rng* rng) {
  if (stacks.empty()) throw std::invalid_argument("assemble: empty batch");
  const int k = static_cast<int>(stacks.front().size());
  const int c = store.channels();
  const int h = store.height();
  const int w = store.width();
  const int n = static_cast<int>(stacks.size());
  nn::FeatureMap<float> out(k * c, n, h, w);
  const int max_dy = static_cast<int>(std::lround(shift_fraction * h));
  const int max_dx = static_cast<int>(std::lround(shift_fraction * w));
  constexpr float kScale = 1.0f / 255.0f;
  for (int b = 0; b < n; ++b) {
    const StackRef& s = stacks[static_cast<std::size_t>(b)];
    if (static_cast<int>(s.size()) != k) throw std::invalid_argument("assemble: inconsistent stack depth");
    int dy = 0, dx = 0;
    if (rng && shift_fraction > 0.0) {
      dy = rng->uniform_int(0, max_dy);
      dx = rng->uniform_int(0, max_dx);
    }
    for (int f = 0; f < k; ++f) {
      const std::uint8_t* src = store.data(s[static_cast<std::size_t>(f)]);
      for (int ch = 0; ch < c; ++ch) {
        const std::uint8_t* plane = src + static_cast<std::size_t>(ch) * h * w;
        float* dst = out.data.data() + ((static_cast<std::size_t>(f * c + ch) * n + b) * h) * w;
        for (int y = 0; y < h; ++y) {
          const std::uint8_t* row = plane + static_cast<std::size_t>(std::min(y + dy, h - 1)) * w;
          float* out_row = dst + static_cast<std::size_t>(y) * w;
          const int body = w - dx;
          for (int x = 0; x < body; ++x) out_row[x] = row[x + dx] * kScale;
          const float edge = row[w - 1] * kScale;
          for (int x = body; x < w; ++x) out_row[x] = edge;
        }
      }
    }
  }
  return out;
}

void ReplayBuffer::push(Transition t) {
  if (items_.size() < capacity_) {
    items_.push_back(std::move(t));
  } else {
    items_[head_] = std::move(t);
    head_ = (head_ + 1) % capacity_;
  }
}

std::vector<const Transition*> ReplayBuffer::sample(std::size_t n, Rng& rng) const {
  if (items_.empty()) throw std::logic_error("ReplayBuffer: sampling from an empty buffer");
  std::vector<const Transition*> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) out.push_back(&items_[rng.uniform_index(items_.size())]);
  return out;
}

void LabeledMemory::add(LabeledExperience e) {
  if (items_.size() < capacity_) {
    items_.push_back(std::move(e));
  } else {
    items_[head_] = std::move(e);
    head_ = (head_ + 1) % capacity_;
  }
}

std::vector<const LabeledExperience*> LabeledMemory::sample(std::size_t n, Rng& rng) const {
  const std::size_t m = std::min(n, items_.size());
  std::vector<std::size_t> idx(items_.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::vector<const LabeledExperience*> out;
  out.reserve(m);
  for (std::size_t i = 0; i < m; ++i) {
    const std::size_t j = i + rng.uniform_index(idx.size() - i);
    std::swap(idx[i], idx[j]);
    out.push_back(&items_[idx[i]]);
  }
  return out;
}

}  // namespace crew::learner
