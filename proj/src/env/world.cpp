#include "crew/env/world.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <numbers>
#include <stdexcept>
#include <string>

namespace crew::env {

namespace {

constexpr double kTimeSlack = 1e-9;

double clip_unit(double v) { return std::clamp(v, -1.0, 1.0); }

ActionCommand validated(const ActionCommand& action, std::size_t dim, int agent_id) {
  if (action.values.size() != dim) {
    throw std::invalid_argument("agent " + std::to_string(agent_id) + ": action has " +
                                std::to_string(action.values.size()) + " components, expected " +
                                std::to_string(dim));
  }
  ActionCommand out;
  out.values.reserve(dim);
  for (double v : action.values) {
    if (std::isnan(v)) {
      throw std::invalid_argument("agent " + std::to_string(agent_id) + ": action contains NaN");
    }
    out.values.push_back(clip_unit(v));
  }
  return out;
}

std::vector<Team> team_layout(const TaskConfig& c) {
  switch (c.task) {
    case TaskKind::Bowling:
    case TaskKind::FindTreasure: return {Team::Solo};
    case TaskKind::HideSeek1v1: return {Team::Seeker, Team::Hider};
    case TaskKind::HideSeekNvN: {
      std::vector<Team> teams(static_cast<std::size_t>(c.n_seekers), Team::Seeker);
      teams.insert(teams.end(), static_cast<std::size_t>(c.n_hiders), Team::Hider);
      return teams;
    }
  }
  return {};
}

void knock_with_chain(const BowlingParams& p, const std::array<Pin, 10>& rack, std::size_t first,
                      std::array<bool, 10>& knocked) {
  std::deque<std::size_t> queue{first};
  knocked[first] = true;
  while (!queue.empty()) {
    const auto i = queue.front();
    queue.pop_front();
    for (std::size_t j = 0; j < rack.size(); ++j) {
      if (knocked[j] || !rack[j].standing) continue;
      // A falling pin only topples pins further down the lane.
      if (rack[j].pos.y <= rack[i].pos.y + 1e-9) continue;
      if (distance(rack[i].pos, rack[j].pos) <= p.chain_radius) {
        knocked[j] = true;
        queue.push_back(j);
      }
    }
  }
}

}  // namespace

const AgentState& WorldState::agent(int id) const {
  for (const auto& a : agents) {
    if (a.id == id) return a;
  }
  throw std::invalid_argument("unknown agent id " + std::to_string(id));
}

AgentState& WorldState::agent(int id) {
  return const_cast<AgentState&>(static_cast<const WorldState&>(*this).agent(id));
}

bool WorldState::has_agent(int id) const {
  return std::any_of(agents.begin(), agents.end(), [id](const AgentState& a) { return a.id == id; });
}

std::vector<int> WorldState::controllable_agents() const {
  std::vector<int> ids;
  for (const auto& a : agents) {
    if (!a.scripted && a.active) ids.push_back(a.id);
  }
  return ids;
}

double WorldState::v_max() const {
  if (!arena) return 0.0;
  return std::max(arena->width(), arena->height()) / config.crossing_time_s;
}

bool WorldState::operator==(const WorldState& o) const {
  const bool arenas_equal = (arena == o.arena) || (arena && o.arena && *arena == *o.arena);
  return arenas_equal && agents == o.agents && treasure == o.treasure && pins == o.pins &&
         ball == o.ball && roll_index == o.roll_index && last_roll_pins == o.last_roll_pins &&
         total_pins == o.total_pins && elapsed == o.elapsed && episode_step == o.episode_step &&
         done == o.done && success == o.success && rng == o.rng && config.seed == o.config.seed;
}

std::array<Pin, 10> standard_rack(const BowlingParams& p) {
  std::array<Pin, 10> rack{};
  std::size_t k = 0;
  const double row_dy = p.pin_spacing * std::sqrt(3.0) / 2.0;
  for (int row = 0; row < 4; ++row) {
    for (int i = 0; i <= row; ++i) {
      rack[k++] = Pin{{(i - row / 2.0) * p.pin_spacing, p.head_pin_y + row * row_dy}, true};
    }
  }
  return rack;
}

Vec2 bowling_path_point(const BowlingParams&, double release_x, double straight_length, double curvature,
                        double s) {
  if (s <= straight_length) return {release_x, s};
  const double u = s - straight_length;
  if (std::abs(curvature) < 1e-12) return {release_x, straight_length + u};
  const double phi = curvature * u;
  return {release_x + (1.0 - std::cos(phi)) / curvature, straight_length + std::sin(phi) / curvature};
}

RollOutcome simulate_roll(const BowlingParams& p, const std::array<Pin, 10>& rack, const ActionCommand& action) {
  const double release_x = clip_unit(action.values.at(0)) * (p.lane_width / 2.0 - p.ball_radius);
  const double straight = (clip_unit(action.values.at(1)) + 1.0) / 2.0 * p.lane_length;
  const double curvature = clip_unit(action.values.at(2)) * p.max_curvature;
  const double ds = p.ball_speed * p.substep_s;
  const double max_s = 3.0 * p.lane_length;
  const double reach = p.ball_radius + p.pin_radius;

  RollOutcome out;
  Vec2 prev = bowling_path_point(p, release_x, straight, curvature, 0.0);
  out.trace.push_back(prev);
  for (double s = ds; s <= max_s + ds; s += ds) {
    const Vec2 cur = bowling_path_point(p, release_x, straight, curvature, std::min(s, max_s));
    for (std::size_t i = 0; i < rack.size(); ++i) {
      if (!rack[i].standing || out.knocked[i]) continue;
      if (segment_distance(rack[i].pos, prev, cur) < reach) knock_with_chain(p, rack, i, out.knocked);
    }
    out.trace.push_back(cur);
    prev = cur;
    if (cur.y > p.lane_length || std::abs(cur.x) > p.lane_width / 2.0 || s >= max_s) break;
  }
  out.final_pos = prev;
  out.count = static_cast<int>(std::count(out.knocked.begin(), out.knocked.end(), true));
  return out;
}

WorldState reset(const TaskConfig& config, std::uint64_t seed) {
  config.validate();
  WorldState s;
  s.config = config;
  s.config.seed = seed;
  s.rng = Rng(mix_seed(seed, 0x5EEDULL));

  const auto teams = team_layout(config);
  if (config.task == TaskKind::Bowling) {
    AgentState bowler;
    bowler.id = 0;
    bowler.team = Team::Solo;
    s.agents.push_back(bowler);
    s.pins = standard_rack(config.bowling);
    s.ball = BallState{};
    return s;
  }

  procgen::MazeGrid maze = config.maze_text
                               ? procgen::MazeGrid::parse(*config.maze_text)
                               : procgen::generate_maze(config.maze_w, config.maze_h, mix_seed(seed, 1),
                                                        config.braid_fraction);
  if (!procgen::is_connected(maze)) {
    const auto dist = procgen::bfs_distances(maze, {0, 0});
    const auto unreachable = std::count(dist.begin(), dist.end(), -1);
    throw std::invalid_argument("maze is not connected: " + std::to_string(unreachable) + " of " +
                                std::to_string(maze.cell_count()) + " cells unreachable from (0,0)");
  }
  if (maze.width() < 2 || maze.height() < 2) {
    throw std::invalid_argument("navigation tasks need a maze of at least 2x2 cells");
  }
  s.arena = std::make_shared<const Arena>(maze);

  const int entities = static_cast<int>(teams.size()) + (config.task == TaskKind::FindTreasure ? 1 : 0);
  const auto spawns = procgen::sample_spawns(maze, entities, mix_seed(seed, 2), config.min_spawn_separation);
  for (std::size_t i = 0; i < teams.size(); ++i) {
    AgentState a;
    a.id = static_cast<int>(i);
    a.team = teams[i];
    a.scripted = teams[i] == Team::Hider;
    a.pos = s.arena->cell_center(spawns[i]);
    a.fov_history.push_back(a.pos);
    s.agents.push_back(a);
  }
  if (config.task == TaskKind::FindTreasure) s.treasure = s.arena->cell_center(spawns.back());
  return s;
}

Vec2 decode_target(const WorldState& state, const ActionCommand& action) {
  const double w = state.arena ? state.arena->width() : 1.0;
  const double h = state.arena ? state.arena->height() : 1.0;
  return {(clip_unit(action.values.at(0)) + 1.0) / 2.0 * w, (clip_unit(action.values.at(1)) + 1.0) / 2.0 * h};
}

ActionCommand encode_target(const WorldState& state, Vec2 target) {
  const double w = state.arena ? state.arena->width() : 1.0;
  const double h = state.arena ? state.arena->height() : 1.0;
  return ActionCommand{{clip_unit(2.0 * target.x / w - 1.0), clip_unit(2.0 * target.y / h - 1.0)}};
}

HiderDecision hider_policy(const WorldState& state, int hider_id) {
  const AgentState& hider = state.agent(hider_id);
  if (hider.team != Team::Hider || !state.arena) {
    throw std::invalid_argument("agent " + std::to_string(hider_id) + " is not a hide-and-seek hider");
  }
  const Arena& arena = *state.arena;
  const TaskConfig& cfg = state.config;

  std::vector<Vec2> visible;
  for (const auto& a : state.agents) {
    if (a.team != Team::Seeker || !a.active) continue;
    if (distance(a.pos, hider.pos) <= cfg.flee_radius && arena.line_of_sight(hider.pos, a.pos)) {
      visible.push_back(a.pos);
    }
  }

  HiderDecision out;
  out.rng_after = state.rng;
  out.waypoint = hider.waypoint;
  out.has_waypoint = hider.has_waypoint;

  if (!visible.empty()) {
    auto nearest = [&](Vec2 p) {
      double best = std::numeric_limits<double>::infinity();
      for (const Vec2& sk : visible) best = std::min(best, distance(p, sk));
      return best;
    };
    const double step_len = state.v_max() * cfg.decision_dt();
    const double base = nearest(hider.pos);
    constexpr double kClearanceMargin = 1.0;
    double best_score = -std::numeric_limits<double>::infinity();
    Vec2 best_dir{1.0, 0.0};
    for (int k = 0; k < cfg.n_candidates; ++k) {
      const double theta = 2.0 * std::numbers::pi * k / cfg.n_candidates;
      const Vec2 dir{std::cos(theta), std::sin(theta)};
      const Vec2 probe = hider.pos + dir * step_len;
      const bool blocked = arena.disc_overlaps_wall(probe, cfg.agent_radius) || !arena.line_of_sight(hider.pos, probe);
      const double clearance = arena.wall_clearance(probe, kClearanceMargin);
      const double penalty = blocked ? 1e3 : step_len * std::max(0.0, 1.0 - clearance / kClearanceMargin);
      const double score = (nearest(probe) - base) - penalty;
      if (score > best_score + 1e-12) {
        best_score = score;
        best_dir = dir;
      }
    }
    constexpr double kLookahead = 2.0;
    Vec2 target = hider.pos + best_dir * kLookahead;
    target.x = std::clamp(target.x, 0.0, arena.width());
    target.y = std::clamp(target.y, 0.0, arena.height());
    out.command = encode_target(state, target);
    out.fleeing = true;
    return out;
  }

  if (!out.has_waypoint || distance(hider.pos, out.waypoint) < 0.5) {
    const auto& maze = arena.maze();
    const auto idx = static_cast<int>(out.rng_after.uniform_index(static_cast<std::uint64_t>(maze.cell_count())));
    out.waypoint = arena.cell_center(maze.cell_at(idx));
    out.has_waypoint = true;
  }
  const Block here = arena.block_of(hider.pos);
  const Block next = arena.next_step_toward(here, arena.block_of(out.waypoint));
  const Vec2 target = next == here ? out.waypoint : arena.block_center(next);
  out.command = encode_target(state, target);
  return out;
}

namespace {

StepResult step_bowling(WorldState& state, const std::map<int, ActionCommand>& actions) {
  const auto it = actions.find(0);
  if (it == actions.end()) throw std::invalid_argument("bowling: missing action for agent 0");
  for (const auto& [id, _] : actions) {
    if (id != 0) throw std::invalid_argument("bowling: unknown agent id " + std::to_string(id));
  }
  const ActionCommand action = validated(it->second, 3, 0);
  const BowlingParams& p = state.config.bowling;

  std::array<Pin, 10> rack = standard_rack(p);
  const RollOutcome roll = simulate_roll(p, rack, action);
  for (std::size_t i = 0; i < rack.size(); ++i) rack[i].standing = !roll.knocked[i];
  state.pins = rack;
  state.ball.release_x = roll.trace.front().x;
  state.ball.straight_length = (clip_unit(action.values[1]) + 1.0) / 2.0 * p.lane_length;
  state.ball.curvature = clip_unit(action.values[2]) * p.max_curvature;
  state.ball.pos = roll.final_pos;
  state.ball.velocity = {};
  state.ball.trace = roll.trace;
  state.last_roll_pins = roll.count;
  state.total_pins += roll.count;
  state.roll_index += 1;
  state.episode_step += 1;
  state.elapsed = state.episode_step / state.config.decision_hz;
  state.done = state.roll_index >= 10;
  state.success = state.done;

  StepResult r;
  r.rewards[0] = roll.count;
  r.done = state.done;
  r.info.pins_hit_this_roll = roll.count;
  r.info.success = roll.count == 10;
  return r;
}

StepResult step_navigation(WorldState& state, const std::map<int, ActionCommand>& actions) {
  const TaskConfig& cfg = state.config;
  const Arena& arena = *state.arena;

  for (const auto& [id, _] : actions) {
    if (!state.has_agent(id)) throw std::invalid_argument("unknown agent id " + std::to_string(id));
  }
  std::map<int, Vec2> targets;
  for (const auto& a : state.agents) {
    if (!a.active) continue;
    const auto it = actions.find(a.id);
    if (it != actions.end()) {
      targets[a.id] = decode_target(state, validated(it->second, 2, a.id));
    } else if (!a.scripted) {
      throw std::invalid_argument("missing action for agent " + std::to_string(a.id));
    }
  }
  // Scripted hiders decide on the pre-step state; explicit actions override them.
  for (auto& a : state.agents) {
    if (!a.active || !a.scripted || targets.count(a.id)) continue;
    const HiderDecision d = hider_policy(state, a.id);
    targets[a.id] = decode_target(state, d.command);
    a.waypoint = d.waypoint;
    a.has_waypoint = d.has_waypoint;
    state.rng = d.rng_after;
  }

  const int substeps = cfg.substeps_per_decision();
  const double sub_dt = cfg.decision_dt() / substeps;
  const double max_move = state.v_max() * sub_dt;
  std::vector<Vec2> start_pos;
  for (const auto& a : state.agents) start_pos.push_back(a.pos);

  std::map<int, int> catches;  // seeker id -> hiders caught this step
  std::vector<int> caught_now;
  bool found = false;
  for (int k = 0; k < substeps && !found; ++k) {
    for (auto& a : state.agents) {
      if (!a.active) continue;
      const Vec2 delta = targets.at(a.id) - a.pos;
      const double dist = delta.norm();
      if (dist < 1e-12) continue;
      const Vec2 move = delta * std::min(1.0, max_move / dist);
      a.pos = arena.resolve_move(a.pos, move, cfg.agent_radius);
    }
    if (cfg.task == TaskKind::FindTreasure) {
      found = distance(state.agents[0].pos, state.treasure) < cfg.capture_radius;
    } else {
      for (auto& h : state.agents) {
        if (h.team != Team::Hider || !h.active) continue;
        for (const auto& sk : state.agents) {
          if (sk.team != Team::Seeker || !sk.active) continue;
          if (distance(sk.pos, h.pos) < cfg.capture_radius) {
            h.active = false;
            catches[sk.id] += 1;
            caught_now.push_back(h.id);
            break;
          }
        }
      }
      const bool any_hider = std::any_of(state.agents.begin(), state.agents.end(),
                                         [](const AgentState& a) { return a.team == Team::Hider && a.active; });
      found = !any_hider;
    }
  }

  for (std::size_t i = 0; i < state.agents.size(); ++i) {
    auto& a = state.agents[i];
    const Vec2 moved = a.pos - start_pos[i];
    if (moved.norm() > 1e-12) a.heading = std::atan2(moved.y, moved.x);
    if (a.active && (a.fov_history.empty() || !(a.fov_history.back() == a.pos))) a.fov_history.push_back(a.pos);
  }

  state.episode_step += 1;
  state.elapsed = std::min(cfg.time_limit_s, state.episode_step / cfg.decision_hz);
  const bool timed_out = state.episode_step >= cfg.decision_steps_limit();

  StepResult r;
  switch (cfg.task) {
    case TaskKind::FindTreasure:
      r.rewards[0] = -1.0 + (found ? 10.0 : 0.0);
      break;
    case TaskKind::HideSeek1v1: {
      const bool caught = !caught_now.empty();
      r.rewards[0] = -1.0 + (caught ? 10.0 : 0.0);
      r.rewards[1] = caught ? -10.0 : 1.0;
      break;
    }
    case TaskKind::HideSeekNvN: {
      const auto& t = cfg.nvn;
      double seeker_sum = 0.0;
      double hider_sum = 0.0;
      for (const auto& a : state.agents) {
        double v = 0.0;
        if (a.team == Team::Seeker) {
          v = t.seeker_per_step + t.seeker_per_catch * (catches.count(a.id) ? catches.at(a.id) : 0);
          seeker_sum += v;
        } else {
          const bool caught = std::find(caught_now.begin(), caught_now.end(), a.id) != caught_now.end();
          if (caught) v = t.hider_per_caught;
          else if (a.active) v = t.hider_per_survival_step;
          hider_sum += v;
        }
        r.rewards[a.id] = v;
      }
      if (t.team_shared) {
        for (const auto& a : state.agents) r.rewards[a.id] = a.team == Team::Seeker ? seeker_sum : hider_sum;
      }
      break;
    }
    case TaskKind::Bowling: break;
  }
  r.info.success = found;
  r.info.caught = !caught_now.empty();
  state.success = found;
  state.done = found || timed_out;
  r.done = state.done;
  return r;
}

}  // namespace

StepResult step(WorldState& state, const std::map<int, ActionCommand>& actions, double dt) {
  if (std::abs(dt - state.config.decision_dt()) > kTimeSlack) {
    throw std::invalid_argument("step: dt " + std::to_string(dt) + " differs from the decision interval " +
                                std::to_string(state.config.decision_dt()));
  }
  if (state.done) throw std::logic_error("step: episode already finished; call reset");
  if (state.task() == TaskKind::Bowling) return step_bowling(state, actions);
  return step_navigation(state, actions);
}

}  // namespace crew::env
