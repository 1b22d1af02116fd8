#pragma once

#include <compare>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace crew::procgen {

// Rows grow southward: North is y - 1.
enum class Dir : std::uint8_t { North = 0, East = 1, South = 2, West = 3 };

struct Cell {
  int x = 0;
  int y = 0;
  auto operator<=>(const Cell&) const = default;
};

Cell step(Cell c, Dir d);

// Perfect-or-braided maze over a width x height grid of cells. Walls live on
// the edges between adjacent cells; the outer boundary is always walled.
class MazeGrid {
 public:
  MazeGrid(int width, int height);  // every interior wall present

  int width() const { return width_; }
  int height() const { return height_; }
  int cell_count() const { return width_ * height_; }

  bool contains(Cell c) const { return c.x >= 0 && c.y >= 0 && c.x < width_ && c.y < height_; }
  bool has_wall(Cell c, Dir d) const;
  // Throws std::invalid_argument when asked to open the outer boundary.
  void set_wall(Cell c, Dir d, bool wall);

  std::vector<Cell> open_neighbors(Cell c) const;
  // Every cell is walkable; walls are edges only.
  std::vector<Cell> open_cells() const;
  int interior_wall_count() const;

  int index(Cell c) const { return c.y * width_ + c.x; }
  Cell cell_at(int index) const { return {index % width_, index / width_}; }

  // Text format, one line per row after a header:
  //   maze <w> <h>
  //   <w hex digits>   digit = wall bits N=1 E=2 S=4 W=8
  std::string serialize() const;
  // Throws std::invalid_argument on malformed or inconsistent input.
  static MazeGrid parse(std::string_view text);

  bool operator==(const MazeGrid&) const = default;

 private:
  int width_;
  int height_;
  std::vector<std::uint8_t> east_;   // wall between (x, y) and (x + 1, y)
  std::vector<std::uint8_t> south_;  // wall between (x, y) and (x, y + 1)
};

// Randomized depth-first spanning-tree carving, followed by removal of
// round(braid_fraction * remaining interior walls) extra walls to form loops.
// Throws std::invalid_argument for non-positive dimensions or a braid
// fraction outside [0, 1].
MazeGrid generate_maze(int width, int height, std::uint64_t seed, double braid_fraction = 0.15);

// Path distance in cells from `from` to every cell; -1 where unreachable.
std::vector<int> bfs_distances(const MazeGrid& maze, Cell from);
bool is_connected(const MazeGrid& maze);

// n distinct cells with pairwise path distance >= min_separation. Throws
// std::invalid_argument when n exceeds the cell count and std::runtime_error
// when the separation cannot be met within the retry budget.
std::vector<Cell> sample_spawns(const MazeGrid& maze, int n, std::uint64_t seed, int min_separation);

}  // namespace crew::procgen
