#include <doctest.h>

#include <cmath>

#include "crew/env/render.hpp"

using namespace crew::env;

namespace {

WorldState walked_state(std::uint64_t seed, int steps) {
  const TaskConfig c = default_task_config(TaskKind::FindTreasure);
  WorldState s = reset(c, seed);
  crew::Rng rng(seed);
  for (int i = 0; i < steps && !s.done; ++i) {
    step(s, {{0, ActionCommand{{rng.uniform(-1, 1), rng.uniform(-1, 1)}}}}, c.decision_dt());
  }
  return s;
}

}  // namespace

TEST_CASE("frame layout") {
  const WorldState s = walked_state(1, 3);
  const ObservationFrame f = render_view(s, 0, ViewKind::TopDownFull, 40, 30);
  CHECK(f.channels == 3);
  CHECK(f.pixels.size() == 3u * 40 * 30);
  for (float v : f.pixels) {
    CHECK(v >= 0.0f);
    CHECK(v <= 1.0f);
  }
  CHECK(f == render_view(s, 0, ViewKind::TopDownFull, 40, 30));
}

TEST_CASE("accumulated view reveals exactly the union of field-of-view discs") {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const WorldState s = walked_state(seed, 25);
    const auto& hist = s.agents[0].fov_history;
    const double r = s.config.fov_radius;
    const int n = 100;
    const ObservationFrame acc = render_view(s, 0, ViewKind::TopDownAccumulated, n, n);
    const ObservationFrame full = render_view(s, 0, ViewKind::TopDownFull, n, n);
    const double w = s.arena->width();
    const double h = s.arena->height();
    for (int y = 0; y < n; ++y) {
      for (int x = 0; x < n; ++x) {
        const double px = (x + 0.5) * w / n;
        const double py = (y + 0.5) * h / n;
        bool seen = false;
        for (const Vec2& q : hist) seen = seen || std::hypot(px - q.x, py - q.y) <= r;
        for (int c = 0; c < 3; ++c) {
          if (seen) {
            REQUIRE(acc.at(c, y, x) == full.at(c, y, x));
          } else {
            REQUIRE(acc.at(c, y, x) == kShadow);
          }
        }
      }
    }
    // Visited blocks: any point of the block within r of a history point.
    for (int by = 0; by < s.arena->blocks_h(); ++by) {
      for (int bx = 0; bx < s.arena->blocks_w(); ++bx) {
        double best = 1e9;
        for (const Vec2& q : hist) {
          const double cx = std::clamp(q.x, double(bx), bx + 1.0);
          const double cy = std::clamp(q.y, double(by), by + 1.0);
          best = std::min(best, std::hypot(q.x - cx, q.y - cy));
        }
        CHECK(acc.visited_mask[static_cast<std::size_t>(s.arena->block_index({bx, by}))] == (best <= r ? 1 : 0));
      }
    }
  }
}

TEST_CASE("egocentric view centers on the agent") {
  const WorldState s = walked_state(2, 4);
  const ObservationFrame f = render_view(s, 0, ViewKind::TopDownEgocentric, 41, 41);
  CHECK(f.at(0, 20, 20) == doctest::Approx(0.1f));
  CHECK(f.at(2, 20, 20) == doctest::Approx(1.0f));
}

TEST_CASE("bowling lane view and view validation") {
  const WorldState s = reset(default_task_config(TaskKind::Bowling), 0);
  const ObservationFrame f = render_view(s, 0, ViewKind::TopDownFull, 100, 100);
  CHECK(f.channels == 1);
  CHECK(f.pixels.size() == 100u * 100);
  CHECK_THROWS_AS(render_view(s, 0, ViewKind::TopDownAccumulated, 100, 100), std::invalid_argument);
  CHECK_THROWS_AS(render_view(s, 3, ViewKind::TopDownFull, 100, 100), std::invalid_argument);
  CHECK_THROWS_AS(render_view(s, 0, ViewKind::TopDownFull, 0, 100), std::invalid_argument);
}
