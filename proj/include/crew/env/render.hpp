#pragma once

#include <cstdint>
#include <vector>

#include "crew/env/world.hpp"

namespace crew::env {

// Planar channel-major pixels (c, y, x), each in [0, 1]. Image row 0 is the
// arena's y = 0 edge.
struct ObservationFrame {
  ViewKind view = ViewKind::TopDownFull;
  int channels = 3;
  int width = 0;
  int height = 0;
  std::vector<float> pixels;
  // Arena blocks touched by any field-of-view disc; accumulated view only.
  std::vector<std::uint8_t> visited_mask;

  float at(int c, int y, int x) const {
    return pixels[(static_cast<std::size_t>(c) * height + y) * width + x];
  }
  bool operator==(const ObservationFrame&) const = default;
};

inline constexpr float kShadow = 0.0f;

// Deterministic rasterization of one agent's view. Bowling renders the lane
// in grayscale and accepts only TopDownFull. Throws std::invalid_argument for
// an unknown agent or an unsupported view.
ObservationFrame render_view(const WorldState& state, int agent_id, ViewKind view, int width, int height);

// World point sampled by pixel (x, y) in the top-down views.
Vec2 pixel_center_world(const Arena& arena, int x, int y, int width, int height);

}  // namespace crew::env
