#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "crew/common/rng.hpp"
#include "crew/env/render.hpp"
#include "crew/nn/tensor.hpp"

namespace crew::learner {

using FrameId = std::uint64_t;
// Frame ids of one stacked observation, oldest first.
using StackRef = std::vector<FrameId>;

// Ring buffer of 8-bit quantized frames addressed by increasing ids.
class FrameStore {
 public:
  FrameStore(int channels, int height, int width, std::size_t capacity);

  FrameId push(const env::ObservationFrame& frame);
  bool contains(FrameId id) const { return id < next_ && next_ - id <= capacity_; }
  // Throws std::out_of_range for evicted or unknown ids.
  const std::uint8_t* data(FrameId id) const;

  int channels() const { return channels_; }
  int height() const { return height_; }
  int width() const { return width_; }
  std::size_t frame_size() const { return static_cast<std::size_t>(channels_) * height_ * width_; }
  std::size_t capacity() const { return capacity_; }

 private:
  int channels_, height_, width_;
  std::size_t capacity_;
  FrameId next_ = 0;
  std::vector<std::uint8_t> pixels_;
};

// Keeps the last k frame ids of the current episode; the first frame is
// repeated to fill the stack at episode start.
class FrameStacker {
 public:
  explicit FrameStacker(int k) : k_(k) {}
  void reset(FrameId first) { ids_.assign(static_cast<std::size_t>(k_), first); }
  void push(FrameId id);
  const StackRef& current() const { return ids_; }
  int depth() const { return k_; }

 private:
  int k_;
  StackRef ids_;
};

// Builds a (k * C, N, H, W) batch scaled to [0, 1]. With shift_fraction > 0,
// each sample is translated by a random non-negative offset of up to
// round(shift_fraction * size) pixels per axis, edges replicated.
nn::FeatureMap<float> assemble(const FrameStore& store, std::span<const StackRef> stacks, double shift_fraction,
                               Rng* rng);

struct Transition {
  StackRef obs;
  std::vector<float> action;
  float reward = 0.0f;
  StackRef next_obs;
  bool terminal = false;
};

// Fixed-capacity transition ring with uniform sampling with replacement.
class ReplayBuffer {
 public:
  explicit ReplayBuffer(std::size_t capacity) : capacity_(capacity) {}
  void push(Transition t);
  std::size_t size() const { return items_.size(); }
  std::vector<const Transition*> sample(std::size_t n, Rng& rng) const;

 private:
  std::size_t capacity_;
  std::size_t head_ = 0;
  std::vector<Transition> items_;
};

// A step labeled by a feedback event.
struct LabeledExperience {
  StackRef obs;
  std::vector<float> action;
  float y = 0.0f;
};

// The set D of Alg. 1: all labeled experiences so far, capacity-bounded.
class LabeledMemory {
 public:
  explicit LabeledMemory(std::size_t capacity) : capacity_(capacity) {}
  void add(LabeledExperience e);
  std::size_t size() const { return items_.size(); }
  bool empty() const { return items_.empty(); }
  // min(n, size) distinct items chosen uniformly.
  std::vector<const LabeledExperience*> sample(std::size_t n, Rng& rng) const;
  // Drops items matching pred, keeping the rest in insertion order.
  template <typename Pred>
  std::size_t remove_if(Pred pred) {
    std::vector<LabeledExperience> kept;
    kept.reserve(items_.size());
    for (std::size_t i = 0; i < items_.size(); ++i) {
      auto& e = items_[(head_ + i) % items_.size()];
      if (!pred(e)) kept.push_back(std::move(e));
    }
    const std::size_t removed = items_.size() - kept.size();
    items_ = std::move(kept);
    head_ = 0;
    return removed;
  }

 private:
  std::size_t capacity_;
  std::size_t head_ = 0;
  std::vector<LabeledExperience> items_;
};

}  // namespace crew::learner
