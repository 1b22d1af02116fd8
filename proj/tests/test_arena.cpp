#include <doctest.h>

#include "crew/common/rng.hpp"
#include "crew/env/arena.hpp"

using namespace crew::env;
using crew::procgen::Dir;
using crew::procgen::MazeGrid;

TEST_CASE("block raster follows maze edges and the pillar rule") {
  MazeGrid m(2, 2);
  m.set_wall({0, 0}, Dir::East, false);
  const Arena a(m);
  CHECK(a.blocks_w() == 5);
  CHECK(a.blocks_h() == 5);
  CHECK_FALSE(a.is_wall(1, 1));
  CHECK_FALSE(a.is_wall(2, 1));  // opened edge
  CHECK(a.is_wall(1, 2));        // south edge of (0,0) still closed
  CHECK(a.is_wall(2, 2));        // pillar next to closed edges
  CHECK(a.is_wall(0, 0));
  CHECK(a.is_wall(-1, 3));  // outside counts as wall

  MazeGrid open(2, 2);
  open.set_wall({0, 0}, Dir::East, false);
  open.set_wall({0, 1}, Dir::East, false);
  open.set_wall({0, 0}, Dir::South, false);
  open.set_wall({1, 0}, Dir::South, false);
  const Arena room(open);
  CHECK_FALSE(room.is_wall(2, 2));
  CHECK(room.open_blocks().size() == 9);
}

TEST_CASE("geodesic distance and next step") {
  MazeGrid m(3, 1);
  m.set_wall({0, 0}, Dir::East, false);
  m.set_wall({1, 0}, Dir::East, false);
  const Arena a(m);
  CHECK(a.geodesic_distance(a.cell_center({0, 0}), a.cell_center({2, 0})) == 4);
  CHECK(a.next_step_toward({1, 1}, {5, 1}) == Block{2, 1});
  CHECK(a.next_step_toward({3, 1}, {3, 1}) == Block{3, 1});
}

TEST_CASE("line of sight is blocked by walls") {
  MazeGrid m(2, 1);
  const Arena closed(m);
  CHECK_FALSE(closed.line_of_sight({1.5, 1.5}, {3.5, 1.5}));
  m.set_wall({0, 0}, Dir::East, false);
  const Arena open(m);
  CHECK(open.line_of_sight({1.5, 1.5}, {3.5, 1.5}));
  CHECK(open.line_of_sight({1.2, 1.2}, {1.8, 1.8}));
}

TEST_CASE("resolve_move slides along walls") {
  MazeGrid m(2, 1);
  m.set_wall({0, 0}, Dir::East, false);
  const Arena a(m);
  // Corridor y in [1, 2]; moving diagonally into the north wall keeps the x motion.
  const Vec2 p = a.resolve_move({1.5, 1.5}, {0.5, -0.5}, 0.3);
  CHECK(p.x == doctest::Approx(2.0));
  CHECK(p.y == doctest::Approx(1.3));
  CHECK_FALSE(a.disc_overlaps_wall(p, 0.3 - 1e-7));
  // Head-on into the east wall stops at contact.
  const Vec2 q = a.resolve_move({3.5, 1.5}, {2.0, 0.0}, 0.3);
  CHECK(q.x == doctest::Approx(3.7));
}

TEST_CASE("no tunneling under random motion") {
  crew::Rng rng(1234);
  constexpr double r = 0.3;
  long steps = 0;
  for (int maze_i = 0; maze_i < 20; ++maze_i) {
    const Arena a(crew::procgen::generate_maze(6, 6, static_cast<std::uint64_t>(maze_i), 0.3));
    const auto open = a.open_blocks();
    Vec2 pos = a.block_center(open[rng.uniform_index(open.size())]);
    for (int i = 0; i < 6000; ++i) {
      // Up to twice the largest per-substep displacement used by the env.
      const double len = rng.uniform(0.0, 0.35);
      const double th = rng.uniform(0.0, 6.283185307179586);
      const Vec2 next = a.resolve_move(pos, {len * std::cos(th), len * std::sin(th)}, r);
      REQUIRE_FALSE(a.disc_overlaps_wall(next, r - 1e-7));
      REQUIRE(crew::env::distance(pos, next) <= len + 1e-12);
      pos = next;
      ++steps;
    }
  }
  CHECK(steps >= 100000);
}

TEST_CASE("wall clearance") {
  MazeGrid m(1, 1);
  const Arena a(m);
  CHECK(a.wall_clearance({1.5, 1.5}, 5.0) == doctest::Approx(0.5));
  CHECK(a.wall_clearance({1.5, 1.5}, 0.2) == doctest::Approx(0.2));
}
