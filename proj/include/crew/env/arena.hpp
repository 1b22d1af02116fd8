#pragma once

#include <vector>

#include "crew/env/geometry.hpp"
#include "crew/procgen/maze.hpp"

namespace crew::env {

struct Block {
  int x = 0;
  int y = 0;
  bool operator==(const Block&) const = default;
};

// Occupancy raster of a maze: (2w + 1) x (2h + 1) unit blocks. Maze cell
// (x, y) maps to block (2x + 1, 2y + 1); the block between two cells is a
// wall iff the maze edge is. A corner block is a wall iff any of the four
// edges meeting there is, so fully opened regions form real rooms.
// World coordinates are meters with one block per meter.
class Arena {
 public:
  explicit Arena(procgen::MazeGrid maze);

  const procgen::MazeGrid& maze() const { return maze_; }
  int blocks_w() const { return blocks_w_; }
  int blocks_h() const { return blocks_h_; }
  double width() const { return blocks_w_; }
  double height() const { return blocks_h_; }

  bool is_wall(int bx, int by) const;
  bool is_wall(Block b) const { return is_wall(b.x, b.y); }
  bool is_wall_at(Vec2 p) const;
  Block block_of(Vec2 p) const;
  Vec2 block_center(Block b) const { return {b.x + 0.5, b.y + 0.5}; }
  Vec2 cell_center(procgen::Cell c) const { return {2.0 * c.x + 1.5, 2.0 * c.y + 1.5}; }
  int block_index(Block b) const { return b.y * blocks_w_ + b.x; }
  std::vector<Block> open_blocks() const;

  bool disc_overlaps_wall(Vec2 center, double radius) const;
  // Moves a disc by delta, x then y, clamping at first contact with a wall so
  // the disc slides along it. Never moves backward along either axis.
  Vec2 resolve_move(Vec2 pos, Vec2 delta, double radius) const;
  // True iff the segment between a and b crosses no wall block.
  bool line_of_sight(Vec2 a, Vec2 b) const;
  // Distance from p to the nearest wall block (capped at max_range).
  double wall_clearance(Vec2 p, double max_range) const;

  // 4-connected BFS distance over open blocks; -1 where unreachable.
  std::vector<int> geodesic_from(Block from) const;
  int geodesic_distance(Vec2 a, Vec2 b) const;
  // Next block along a shortest path from `from` toward `to` (or `to` itself).
  Block next_step_toward(Block from, Block to) const;

  bool operator==(const Arena& o) const { return maze_ == o.maze_; }

 private:
  procgen::MazeGrid maze_;
  int blocks_w_;
  int blocks_h_;
  std::vector<std::uint8_t> walls_;
};

}  // namespace crew::env
