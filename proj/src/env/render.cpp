#include "crew/env/render.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <stdexcept>
#include <string>

namespace crew::env {

namespace {

using Rgb = std::array<float, 3>;

constexpr Rgb kFloor{0.85f, 0.85f, 0.85f};
constexpr Rgb kWall{0.35f, 0.35f, 0.35f};
constexpr Rgb kTreasure{1.0f, 0.8f, 0.0f};
constexpr Rgb kSolo{0.1f, 0.3f, 1.0f};
constexpr Rgb kSeeker{0.9f, 0.1f, 0.1f};
constexpr Rgb kHider{0.1f, 0.75f, 0.2f};
constexpr double kTreasureRadius = 0.35;

Rgb team_color(Team t) {
  switch (t) {
    case Team::Seeker: return kSeeker;
    case Team::Hider: return kHider;
    case Team::Solo: return kSolo;
  }
  return kSolo;
}

Rgb scene_color(const WorldState& s, Vec2 p) {
  Rgb c = s.arena->is_wall_at(p) ? kWall : kFloor;
  if (s.task() == TaskKind::FindTreasure && distance(p, s.treasure) < kTreasureRadius) c = kTreasure;
  for (const auto& a : s.agents) {
    if (a.active && distance(p, a.pos) < s.config.agent_radius) c = team_color(a.team);
  }
  return c;
}

ObservationFrame blank(ViewKind view, int channels, int width, int height, float fill) {
  ObservationFrame f;
  f.view = view;
  f.channels = channels;
  f.width = width;
  f.height = height;
  f.pixels.assign(static_cast<std::size_t>(channels) * width * height, fill);
  return f;
}

void put(ObservationFrame& f, int x, int y, const Rgb& c) {
  const std::size_t plane = static_cast<std::size_t>(f.width) * f.height;
  const std::size_t at = static_cast<std::size_t>(y) * f.width + x;
  for (int ch = 0; ch < f.channels; ++ch) f.pixels[ch * plane + at] = c[static_cast<std::size_t>(ch)];
}

ObservationFrame render_lane(const WorldState& s, int width, int height) {
  const BowlingParams& p = s.config.bowling;
  ObservationFrame f = blank(ViewKind::TopDownFull, 1, width, height, 0.6f);
  auto to_pixel = [&](Vec2 lane) {
    return Vec2{(lane.x / p.lane_width + 0.5) * width, (1.0 - lane.y / p.lane_length) * height};
  };
  auto dot = [&](Vec2 center_px, double radius_px, float value) {
    const int x0 = std::max(0, static_cast<int>(std::floor(center_px.x - radius_px)));
    const int x1 = std::min(width - 1, static_cast<int>(std::ceil(center_px.x + radius_px)));
    const int y0 = std::max(0, static_cast<int>(std::floor(center_px.y - radius_px)));
    const int y1 = std::min(height - 1, static_cast<int>(std::ceil(center_px.y + radius_px)));
    for (int y = y0; y <= y1; ++y) {
      for (int x = x0; x <= x1; ++x) {
        if (std::hypot(x + 0.5 - center_px.x, y + 0.5 - center_px.y) <= radius_px) {
          f.pixels[static_cast<std::size_t>(y) * width + x] = value;
        }
      }
    }
  };
  for (const Vec2& q : s.ball.trace) dot(to_pixel(q), 0.5, 0.3f);
  for (const Pin& pin : s.pins) {
    if (pin.standing) dot(to_pixel(pin.pos), 1.5, 1.0f);
  }
  if (!s.ball.trace.empty()) dot(to_pixel(s.ball.pos), 2.0, 0.05f);
  return f;
}

}  // namespace

Vec2 pixel_center_world(const Arena& arena, int x, int y, int width, int height) {
  return {(x + 0.5) * arena.width() / width, (y + 0.5) * arena.height() / height};
}

ObservationFrame render_view(const WorldState& s, int agent_id, ViewKind view, int width, int height) {
  if (!s.has_agent(agent_id)) throw std::invalid_argument("render_view: unknown agent id " + std::to_string(agent_id));
  if (width <= 0 || height <= 0) throw std::invalid_argument("render_view: non-positive frame size");
  if (s.task() == TaskKind::Bowling) {
    if (view != ViewKind::TopDownFull) {
      throw std::invalid_argument("render_view: bowling supports only the fixed lane view (top_down_full)");
    }
    return render_lane(s, width, height);
  }

  const Arena& arena = *s.arena;
  const AgentState& viewer = s.agent(agent_id);

  if (view == ViewKind::TopDownFull) {
    ObservationFrame f = blank(view, 3, width, height, kShadow);
    for (int y = 0; y < height; ++y) {
      for (int x = 0; x < width; ++x) put(f, x, y, scene_color(s, pixel_center_world(arena, x, y, width, height)));
    }
    return f;
  }

  if (view == ViewKind::TopDownEgocentric) {
    ObservationFrame f = blank(view, 3, width, height, kShadow);
    const double e = s.config.egocentric_half_extent;
    const Vec2 fwd{std::cos(viewer.heading), std::sin(viewer.heading)};
    const Vec2 right{-std::sin(viewer.heading), std::cos(viewer.heading)};
    for (int y = 0; y < height; ++y) {
      for (int x = 0; x < width; ++x) {
        const double u = ((x + 0.5) / width * 2.0 - 1.0) * e;
        const double v = ((y + 0.5) / height * 2.0 - 1.0) * e;
        put(f, x, y, scene_color(s, viewer.pos + right * u + fwd * (-v)));
      }
    }
    return f;
  }

  // Accumulated view: reveal the union of historical field-of-view discs.
  ObservationFrame f = blank(view, 3, width, height, kShadow);
  const double r = s.config.fov_radius;
  const double sx = width / arena.width();
  const double sy = height / arena.height();
  std::vector<std::uint8_t> revealed(static_cast<std::size_t>(width) * height, 0);
  for (const Vec2& q : viewer.fov_history) {
    const int x0 = std::max(0, static_cast<int>(std::floor((q.x - r) * sx)) - 1);
    const int x1 = std::min(width - 1, static_cast<int>(std::ceil((q.x + r) * sx)) + 1);
    const int y0 = std::max(0, static_cast<int>(std::floor((q.y - r) * sy)) - 1);
    const int y1 = std::min(height - 1, static_cast<int>(std::ceil((q.y + r) * sy)) + 1);
    for (int y = y0; y <= y1; ++y) {
      for (int x = x0; x <= x1; ++x) {
        if (distance(pixel_center_world(arena, x, y, width, height), q) <= r) {
          revealed[static_cast<std::size_t>(y) * width + x] = 1;
        }
      }
    }
  }
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      if (revealed[static_cast<std::size_t>(y) * width + x]) {
        put(f, x, y, scene_color(s, pixel_center_world(arena, x, y, width, height)));
      }
    }
  }
  f.visited_mask.assign(static_cast<std::size_t>(arena.blocks_w() * arena.blocks_h()), 0);
  for (int by = 0; by < arena.blocks_h(); ++by) {
    for (int bx = 0; bx < arena.blocks_w(); ++bx) {
      for (const Vec2& q : viewer.fov_history) {
        const double gx = std::max({bx - q.x, 0.0, q.x - (bx + 1.0)});
        const double gy = std::max({by - q.y, 0.0, q.y - (by + 1.0)});
        if (gx * gx + gy * gy <= r * r) {
          f.visited_mask[static_cast<std::size_t>(arena.block_index({bx, by}))] = 1;
          break;
        }
      }
    }
  }
  return f;
}

}  // namespace crew::env
