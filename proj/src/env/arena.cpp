#include "crew/env/arena.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>

namespace crew::env {

namespace {

constexpr double kContactSlack = 1e-9;
constexpr int kNeighborDx[] = {0, 1, 0, -1};
constexpr int kNeighborDy[] = {-1, 0, 1, 0};

// Distance from value v to the interval [lo, hi].
double interval_gap(double v, double lo, double hi) {
  if (v < lo) return lo - v;
  if (v > hi) return v - hi;
  return 0.0;
}

}  // namespace

Arena::Arena(procgen::MazeGrid maze)
    : maze_(std::move(maze)), blocks_w_(2 * maze_.width() + 1), blocks_h_(2 * maze_.height() + 1) {
  using procgen::Dir;
  walls_.assign(static_cast<std::size_t>(blocks_w_ * blocks_h_), 1);
  auto set_open = [&](int bx, int by) { walls_[static_cast<std::size_t>(by * blocks_w_ + bx)] = 0; };
  for (int y = 0; y < maze_.height(); ++y) {
    for (int x = 0; x < maze_.width(); ++x) {
      set_open(2 * x + 1, 2 * y + 1);
      if (!maze_.has_wall({x, y}, Dir::East)) set_open(2 * x + 2, 2 * y + 1);
      if (!maze_.has_wall({x, y}, Dir::South)) set_open(2 * x + 1, 2 * y + 2);
    }
  }
  // Interior corners open only when all four edges meeting there are open.
  for (int y = 0; y + 1 < maze_.height(); ++y) {
    for (int x = 0; x + 1 < maze_.width(); ++x) {
      const bool any_wall = maze_.has_wall({x, y}, Dir::East) || maze_.has_wall({x, y}, Dir::South) ||
                            maze_.has_wall({x + 1, y + 1}, Dir::North) ||
                            maze_.has_wall({x + 1, y + 1}, Dir::West);
      if (!any_wall) set_open(2 * x + 2, 2 * y + 2);
    }
  }
}

bool Arena::is_wall(int bx, int by) const {
  if (bx < 0 || by < 0 || bx >= blocks_w_ || by >= blocks_h_) return true;
  return walls_[static_cast<std::size_t>(by * blocks_w_ + bx)] != 0;
}

bool Arena::is_wall_at(Vec2 p) const {
  return is_wall(static_cast<int>(std::floor(p.x)), static_cast<int>(std::floor(p.y)));
}

Block Arena::block_of(Vec2 p) const {
  return {static_cast<int>(std::floor(p.x)), static_cast<int>(std::floor(p.y))};
}

std::vector<Block> Arena::open_blocks() const {
  std::vector<Block> out;
  for (int by = 0; by < blocks_h_; ++by) {
    for (int bx = 0; bx < blocks_w_; ++bx) {
      if (!is_wall(bx, by)) out.push_back({bx, by});
    }
  }
  return out;
}

bool Arena::disc_overlaps_wall(Vec2 c, double r) const {
  const int x0 = static_cast<int>(std::floor(c.x - r));
  const int x1 = static_cast<int>(std::floor(c.x + r));
  const int y0 = static_cast<int>(std::floor(c.y - r));
  const int y1 = static_cast<int>(std::floor(c.y + r));
  for (int by = y0; by <= y1; ++by) {
    for (int bx = x0; bx <= x1; ++bx) {
      if (!is_wall(bx, by)) continue;
      const double gx = interval_gap(c.x, bx, bx + 1.0);
      const double gy = interval_gap(c.y, by, by + 1.0);
      if (gx * gx + gy * gy < r * r) return true;
    }
  }
  return false;
}

Vec2 Arena::resolve_move(Vec2 pos, Vec2 delta, double r) const {
  Vec2 p = pos;
  if (delta.x != 0.0) {
    double nx = p.x + delta.x;
    const int x0 = static_cast<int>(std::floor(std::min(p.x, nx) - r));
    const int x1 = static_cast<int>(std::floor(std::max(p.x, nx) + r));
    const int y0 = static_cast<int>(std::floor(p.y - r));
    const int y1 = static_cast<int>(std::floor(p.y + r));
    for (int by = y0; by <= y1; ++by) {
      const double gy = interval_gap(p.y, by, by + 1.0);
      if (gy >= r) continue;
      const double half = std::sqrt(r * r - gy * gy);
      for (int bx = x0; bx <= x1; ++bx) {
        if (!is_wall(bx, by)) continue;
        if (delta.x > 0.0 && bx >= p.x) nx = std::min(nx, bx - half - kContactSlack);
        if (delta.x < 0.0 && bx + 1.0 <= p.x) nx = std::max(nx, bx + 1.0 + half + kContactSlack);
      }
    }
    p.x = delta.x > 0.0 ? std::max(nx, p.x) : std::min(nx, p.x);
  }
  if (delta.y != 0.0) {
    double ny = p.y + delta.y;
    const int y0 = static_cast<int>(std::floor(std::min(p.y, ny) - r));
    const int y1 = static_cast<int>(std::floor(std::max(p.y, ny) + r));
    const int x0 = static_cast<int>(std::floor(p.x - r));
    const int x1 = static_cast<int>(std::floor(p.x + r));
    for (int bx = x0; bx <= x1; ++bx) {
      const double gx = interval_gap(p.x, bx, bx + 1.0);
      if (gx >= r) continue;
      const double half = std::sqrt(r * r - gx * gx);
      for (int by = y0; by <= y1; ++by) {
        if (!is_wall(bx, by)) continue;
        if (delta.y > 0.0 && by >= p.y) ny = std::min(ny, by - half - kContactSlack);
        if (delta.y < 0.0 && by + 1.0 <= p.y) ny = std::max(ny, by + 1.0 + half + kContactSlack);
      }
    }
    p.y = delta.y > 0.0 ? std::max(ny, p.y) : std::min(ny, p.y);
  }
  return p;
}

bool Arena::line_of_sight(Vec2 a, Vec2 b) const {
  int x = static_cast<int>(std::floor(a.x));
  int y = static_cast<int>(std::floor(a.y));
  const int ex = static_cast<int>(std::floor(b.x));
  const int ey = static_cast<int>(std::floor(b.y));
  if (is_wall(x, y) || is_wall(ex, ey)) return false;
  const double dx = b.x - a.x;
  const double dy = b.y - a.y;
  const int sx = dx > 0 ? 1 : -1;
  const int sy = dy > 0 ? 1 : -1;
  constexpr double inf = std::numeric_limits<double>::infinity();
  const double tdx = dx != 0.0 ? 1.0 / std::abs(dx) : inf;
  const double tdy = dy != 0.0 ? 1.0 / std::abs(dy) : inf;
  double tx = dx != 0.0 ? (dx > 0 ? (x + 1.0 - a.x) : (a.x - x)) * tdx : inf;
  double ty = dy != 0.0 ? (dy > 0 ? (y + 1.0 - a.y) : (a.y - y)) * tdy : inf;
  const int max_iter = std::abs(ex - x) + std::abs(ey - y) + 2;
  for (int i = 0; i < max_iter && (x != ex || y != ey); ++i) {
    if (tx < ty) {
      x += sx;
      tx += tdx;
    } else if (ty < tx) {
      y += sy;
      ty += tdy;
    } else {
      // Passing exactly through a corner: blocked if either side is a wall.
      if (is_wall(x + sx, y) || is_wall(x, y + sy)) return false;
      x += sx;
      y += sy;
      tx += tdx;
      ty += tdy;
    }
    if (is_wall(x, y)) return false;
  }
  return true;
}

double Arena::wall_clearance(Vec2 p, double max_range) const {
  double best = max_range;
  const int x0 = static_cast<int>(std::floor(p.x - max_range));
  const int x1 = static_cast<int>(std::floor(p.x + max_range));
  const int y0 = static_cast<int>(std::floor(p.y - max_range));
  const int y1 = static_cast<int>(std::floor(p.y + max_range));
  for (int by = y0; by <= y1; ++by) {
    for (int bx = x0; bx <= x1; ++bx) {
      if (!is_wall(bx, by)) continue;
      const double gx = interval_gap(p.x, bx, bx + 1.0);
      const double gy = interval_gap(p.y, by, by + 1.0);
      best = std::min(best, std::hypot(gx, gy));
    }
  }
  return best;
}

std::vector<int> Arena::geodesic_from(Block from) const {
  std::vector<int> dist(static_cast<std::size_t>(blocks_w_ * blocks_h_), -1);
  if (is_wall(from)) return dist;
  std::deque<Block> queue{from};
  dist[static_cast<std::size_t>(block_index(from))] = 0;
  while (!queue.empty()) {
    const Block b = queue.front();
    queue.pop_front();
    const int d = dist[static_cast<std::size_t>(block_index(b))];
    for (int k = 0; k < 4; ++k) {
      const Block n{b.x + kNeighborDx[k], b.y + kNeighborDy[k]};
      if (is_wall(n)) continue;
      auto& dn = dist[static_cast<std::size_t>(block_index(n))];
      if (dn < 0) {
        dn = d + 1;
        queue.push_back(n);
      }
    }
  }
  return dist;
}

int Arena::geodesic_distance(Vec2 a, Vec2 b) const {
  const Block bb = block_of(b);
  if (is_wall(bb)) return -1;
  return geodesic_from(block_of(a))[static_cast<std::size_t>(block_index(bb))];
}

Block Arena::next_step_toward(Block from, Block to) const {
  if (from == to || is_wall(to)) return to;
  const auto dist = geodesic_from(to);
  const int d = is_wall(from) ? -1 : dist[static_cast<std::size_t>(block_index(from))];
  if (d <= 0) return to;
  for (int k = 0; k < 4; ++k) {
    const Block n{from.x + kNeighborDx[k], from.y + kNeighborDy[k]};
    if (!is_wall(n) && dist[static_cast<std::size_t>(block_index(n))] == d - 1) return n;
  }
  return to;
}

}  // namespace crew::env
