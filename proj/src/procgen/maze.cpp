#include "crew/procgen/maze.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <sstream>
#include <stdexcept>

#include "crew/common/rng.hpp"

namespace crew::procgen {

namespace {

constexpr Dir kDirs[] = {Dir::North, Dir::East, Dir::South, Dir::West};

int dir_bit(Dir d) { return 1 << static_cast<int>(d); }

int hex_value(char ch) {
  if (ch >= '0' && ch <= '9') return ch - '0';
  if (ch >= 'a' && ch <= 'f') return ch - 'a' + 10;
  if (ch >= 'A' && ch <= 'F') return ch - 'A' + 10;
  return -1;
}

}  // namespace

Cell step(Cell c, Dir d) {
  switch (d) {
    case Dir::North: return {c.x, c.y - 1};
    case Dir::East: return {c.x + 1, c.y};
    case Dir::South: return {c.x, c.y + 1};
    case Dir::West: return {c.x - 1, c.y};
  }
  return c;
}

MazeGrid::MazeGrid(int width, int height) : width_(width), height_(height) {
  if (width < 1 || height < 1) {
    throw std::invalid_argument("maze dimensions must be positive, got " + std::to_string(width) +
                                "x" + std::to_string(height));
  }
  east_.assign(static_cast<std::size_t>((width - 1) * height), 1);
  south_.assign(static_cast<std::size_t>(width * (height - 1)), 1);
}

bool MazeGrid::has_wall(Cell c, Dir d) const {
  const Cell n = step(c, d);
  if (!contains(c) || !contains(n)) return true;
  switch (d) {
    case Dir::East: return east_[c.y * (width_ - 1) + c.x] != 0;
    case Dir::West: return east_[n.y * (width_ - 1) + n.x] != 0;
    case Dir::South: return south_[c.y * width_ + c.x] != 0;
    case Dir::North: return south_[n.y * width_ + n.x] != 0;
  }
  return true;
}

void MazeGrid::set_wall(Cell c, Dir d, bool wall) {
  const Cell n = step(c, d);
  if (!contains(c) || !contains(n)) {
    if (wall) return;
    throw std::invalid_argument("cannot open the outer maze boundary");
  }
  const std::uint8_t v = wall ? 1 : 0;
  switch (d) {
    case Dir::East: east_[c.y * (width_ - 1) + c.x] = v; break;
    case Dir::West: east_[n.y * (width_ - 1) + n.x] = v; break;
    case Dir::South: south_[c.y * width_ + c.x] = v; break;
    case Dir::North: south_[n.y * width_ + n.x] = v; break;
  }
}

std::vector<Cell> MazeGrid::open_neighbors(Cell c) const {
  std::vector<Cell> out;
  for (Dir d : kDirs) {
    if (!has_wall(c, d)) out.push_back(step(c, d));
  }
  return out;
}

std::vector<Cell> MazeGrid::open_cells() const {
  std::vector<Cell> out;
  out.reserve(static_cast<std::size_t>(cell_count()));
  for (int i = 0; i < cell_count(); ++i) out.push_back(cell_at(i));
  return out;
}

int MazeGrid::interior_wall_count() const {
  int n = 0;
  for (auto w : east_) n += w;
  for (auto w : south_) n += w;
  return n;
}

std::string MazeGrid::serialize() const {
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out = "maze " + std::to_string(width_) + " " + std::to_string(height_) + "\n";
  for (int y = 0; y < height_; ++y) {
    for (int x = 0; x < width_; ++x) {
      int bits = 0;
      for (Dir d : kDirs) {
        if (has_wall({x, y}, d)) bits |= dir_bit(d);
      }
      out.push_back(kHex[bits]);
    }
    out.push_back('\n');
  }
  return out;
}

MazeGrid MazeGrid::parse(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::string tag;
  int w = 0;
  int h = 0;
  if (!(in >> tag >> w >> h) || tag != "maze") {
    throw std::invalid_argument("maze text: expected header 'maze <w> <h>'");
  }
  MazeGrid maze(w, h);
  std::vector<int> bits(static_cast<std::size_t>(w * h));
  for (int y = 0; y < h; ++y) {
    std::string row;
    if (!(in >> row) || static_cast<int>(row.size()) != w) {
      throw std::invalid_argument("maze text: row " + std::to_string(y) + " must have " +
                                  std::to_string(w) + " hex digits");
    }
    for (int x = 0; x < w; ++x) {
      const int v = hex_value(row[static_cast<std::size_t>(x)]);
      if (v < 0) throw std::invalid_argument("maze text: bad hex digit in row " + std::to_string(y));
      bits[static_cast<std::size_t>(y * w + x)] = v;
    }
  }
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const Cell c{x, y};
      for (Dir d : kDirs) {
        const bool wall = (bits[static_cast<std::size_t>(y * w + x)] & dir_bit(d)) != 0;
        const Cell n = step(c, d);
        if (!maze.contains(n)) {
          if (!wall) throw std::invalid_argument("maze text: outer boundary must be walled");
          continue;
        }
        const Dir back = static_cast<Dir>((static_cast<int>(d) + 2) % 4);
        const bool other = (bits[static_cast<std::size_t>(n.y * w + n.x)] & dir_bit(back)) != 0;
        if (wall != other) {
          throw std::invalid_argument("maze text: cells (" + std::to_string(x) + "," +
                                      std::to_string(y) + ") and neighbor disagree on shared wall");
        }
        maze.set_wall(c, d, wall);
      }
    }
  }
  return maze;
}

MazeGrid generate_maze(int width, int height, std::uint64_t seed, double braid_fraction) {
  if (braid_fraction < 0.0 || braid_fraction > 1.0) {
    throw std::invalid_argument("braid_fraction must lie in [0, 1]");
  }
  MazeGrid maze(width, height);
  Rng rng(seed);

  std::vector<std::uint8_t> visited(static_cast<std::size_t>(maze.cell_count()), 0);
  const Cell start{static_cast<int>(rng.uniform_index(static_cast<std::uint64_t>(width))),
                   static_cast<int>(rng.uniform_index(static_cast<std::uint64_t>(height)))};
  std::vector<Cell> stack{start};
  visited[static_cast<std::size_t>(maze.index(start))] = 1;
  while (!stack.empty()) {
    const Cell c = stack.back();
    Dir options[4];
    int n = 0;
    for (Dir d : kDirs) {
      const Cell nb = step(c, d);
      if (maze.contains(nb) && !visited[static_cast<std::size_t>(maze.index(nb))]) options[n++] = d;
    }
    if (n == 0) {
      stack.pop_back();
      continue;
    }
    const Dir d = options[rng.uniform_index(static_cast<std::uint64_t>(n))];
    const Cell nb = step(c, d);
    maze.set_wall(c, d, false);
    visited[static_cast<std::size_t>(maze.index(nb))] = 1;
    stack.push_back(nb);
  }

  // Remaining interior walls, enumerated as (cell, East|South) pairs.
  std::vector<std::pair<Cell, Dir>> walls;
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      if (x + 1 < width && maze.has_wall({x, y}, Dir::East)) walls.push_back({{x, y}, Dir::East});
      if (y + 1 < height && maze.has_wall({x, y}, Dir::South)) walls.push_back({{x, y}, Dir::South});
    }
  }
  const auto removals = static_cast<std::size_t>(
      std::lround(braid_fraction * static_cast<double>(walls.size())));
  for (std::size_t i = 0; i < removals; ++i) {
    const auto pick = i + rng.uniform_index(walls.size() - i);
    std::swap(walls[i], walls[pick]);
    maze.set_wall(walls[i].first, walls[i].second, false);
  }
  return maze;
}

std::vector<int> bfs_distances(const MazeGrid& maze, Cell from) {
  std::vector<int> dist(static_cast<std::size_t>(maze.cell_count()), -1);
  if (!maze.contains(from)) return dist;
  std::deque<Cell> queue{from};
  dist[static_cast<std::size_t>(maze.index(from))] = 0;
  while (!queue.empty()) {
    const Cell c = queue.front();
    queue.pop_front();
    const int dc = dist[static_cast<std::size_t>(maze.index(c))];
    for (const Cell nb : maze.open_neighbors(c)) {
      auto& dn = dist[static_cast<std::size_t>(maze.index(nb))];
      if (dn < 0) {
        dn = dc + 1;
        queue.push_back(nb);
      }
    }
  }
  return dist;
}

bool is_connected(const MazeGrid& maze) {
  const auto dist = bfs_distances(maze, {0, 0});
  return std::none_of(dist.begin(), dist.end(), [](int d) { return d < 0; });
}

std::vector<Cell> sample_spawns(const MazeGrid& maze, int n, std::uint64_t seed, int min_separation) {
  if (n < 0) throw std::invalid_argument("sample_spawns: negative count");
  if (n > maze.cell_count()) {
    throw std::invalid_argument("sample_spawns: requested " + std::to_string(n) +
                                " spawns but the maze has only " +
                                std::to_string(maze.cell_count()) + " open cells");
  }
  constexpr int kMaxAttempts = 256;
  Rng rng(seed);
  std::vector<std::vector<int>> dist_cache(static_cast<std::size_t>(maze.cell_count()));
  auto distances = [&](Cell c) -> const std::vector<int>& {
    auto& slot = dist_cache[static_cast<std::size_t>(maze.index(c))];
    if (slot.empty()) slot = bfs_distances(maze, c);
    return slot;
  };

  for (int attempt = 0; attempt < kMaxAttempts; ++attempt) {
    std::vector<Cell> chosen;
    std::vector<int> order(static_cast<std::size_t>(maze.cell_count()));
    for (int i = 0; i < maze.cell_count(); ++i) order[static_cast<std::size_t>(i)] = i;
    // Incremental Fisher-Yates: take candidates in random order until n fit.
    for (std::size_t i = 0; i < order.size() && static_cast<int>(chosen.size()) < n; ++i) {
      const auto pick = i + rng.uniform_index(order.size() - i);
      std::swap(order[i], order[pick]);
      const Cell candidate = maze.cell_at(order[i]);
      const auto& dist = distances(candidate);
      bool ok = true;
      for (const Cell& other : chosen) {
        const int d = dist[static_cast<std::size_t>(maze.index(other))];
        if (d < 0 || d < min_separation) {
          ok = false;
          break;
        }
      }
      if (ok) chosen.push_back(candidate);
    }
    if (static_cast<int>(chosen.size()) == n) return chosen;
  }
  throw std::runtime_error("sample_spawns: could not place " + std::to_string(n) +
                           " spawns with pairwise path distance >= " +
                           std::to_string(min_separation) + " after " +
                           std::to_string(kMaxAttempts) + " attempts");
}

}  // namespace crew::procgen
