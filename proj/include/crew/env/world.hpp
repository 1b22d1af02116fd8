#pragma once

#include <array>
#include <map>
#include <memory>
#include <vector>

#include "crew/common/rng.hpp"
#include "crew/env/arena.hpp"
#include "crew/env/task_config.hpp"

namespace crew::env {

enum class Team { Seeker, Hider, Solo };

// Continuous action with every component in [-1, 1]. Navigation tasks use a
// target point (x, y) affinely mapped onto the arena; Bowling uses
// (release position, length before steer, steer direction).
struct ActionCommand {
  std::vector<double> values;
  bool operator==(const ActionCommand&) const = default;
};

struct AgentState {
  int id = 0;
  Team team = Team::Solo;
  bool scripted = false;  // driven by hider_policy rather than an external controller
  bool active = true;     // caught hiders become inactive
  Vec2 pos;
  double heading = 0.0;
  // Positions at which a field-of-view disc was taken (spawn + every decision step).
  std::vector<Vec2> fov_history;
  Vec2 waypoint;
  bool has_waypoint = false;

  bool operator==(const AgentState&) const = default;
};

struct Pin {
  Vec2 pos;
  bool standing = true;
  bool operator==(const Pin&) const = default;
};

struct BallState {
  Vec2 pos;
  Vec2 velocity;
  double release_x = 0.0;
  double straight_length = 0.0;
  double curvature = 0.0;
  std::vector<Vec2> trace;  // path of the last roll, for rendering
  bool operator==(const BallState&) const = default;
};

struct WorldState {
  TaskConfig config;
  std::shared_ptr<const Arena> arena;  // null for Bowling
  std::vector<AgentState> agents;
  Vec2 treasure;
  std::array<Pin, 10> pins{};
  BallState ball;
  int roll_index = 0;
  int last_roll_pins = 0;
  int total_pins = 0;
  double elapsed = 0.0;
  int episode_step = 0;
  bool done = false;
  bool success = false;
  Rng rng;

  TaskKind task() const { return config.task; }
  const AgentState& agent(int id) const;
  AgentState& agent(int id);
  bool has_agent(int id) const;
  // Agents that need an external action each step.
  std::vector<int> controllable_agents() const;
  double v_max() const;

  bool operator==(const WorldState& o) const;
};

struct StepInfo {
  bool success = false;
  int pins_hit_this_roll = 0;
  bool caught = false;
};

struct StepResult {
  std::map<int, double> rewards;
  bool done = false;
  StepInfo info;
};

// Throws std::invalid_argument for invalid configs, including a fixed maze
// that is not connected.
WorldState reset(const TaskConfig& config, std::uint64_t seed);

// Advances one decision step in place. Throws std::invalid_argument when an
// action is missing, has the wrong dimensionality or contains NaN, or when dt
// differs from the configured decision interval.
StepResult step(WorldState& state, const std::map<int, ActionCommand>& actions, double dt);

// Affine maps between normalized actions and arena points.
Vec2 decode_target(const WorldState& state, const ActionCommand& action);
ActionCommand encode_target(const WorldState& state, Vec2 target);

struct HiderDecision {
  ActionCommand command;
  bool fleeing = false;
  Vec2 waypoint;
  bool has_waypoint = false;
  Rng rng_after;
};

// Flee from visible seekers within flee_radius (best of n_candidates evenly
// spaced directions by distance gain minus wall-proximity penalty); otherwise
// follow shortest paths between seeded random waypoints. Pure in `state`.
HiderDecision hider_policy(const WorldState& state, int hider_id);

// Rolls a ball through a rack. Exposed for tests and the lane renderer.
struct RollOutcome {
  std::array<bool, 10> knocked{};
  int count = 0;
  std::vector<Vec2> trace;
  Vec2 final_pos;
};
Vec2 bowling_path_point(const BowlingParams& p, double release_x, double straight_length,
                        double curvature, double s);
RollOutcome simulate_roll(const BowlingParams& p, const std::array<Pin, 10>& rack,
                          const ActionCommand& action);
std::array<Pin, 10> standard_rack(const BowlingParams& p);

}  // namespace crew::env
