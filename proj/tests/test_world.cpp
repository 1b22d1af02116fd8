#include <doctest.h>

#include <cmath>
#include <set>

#include "crew/env/world.hpp"

using namespace crew::env;

namespace {

ActionCommand random_action(crew::Rng& rng, int dim) {
  ActionCommand a;
  for (int i = 0; i < dim; ++i) a.values.push_back(rng.uniform(-1.0, 1.0));
  return a;
}

std::map<int, ActionCommand> random_actions(const WorldState& s, crew::Rng& rng) {
  std::map<int, ActionCommand> out;
  for (int id : s.controllable_agents()) out[id] = random_action(rng, s.config.action_dim());
  return out;
}

// Pins knocked by a ball sampled every millimeter-scale substep; a contact
// is a sampled center within reach. Chains follow the same down-lane rule.
struct OracleRoll {
  std::array<bool, 10> knocked{};
  std::array<double, 10> min_gap{};
};

OracleRoll oracle_roll(const BowlingParams& p, const ActionCommand& a) {
  const auto rack = standard_rack(p);
  const double rx = std::clamp(a.values[0], -1.0, 1.0) * (p.lane_width / 2 - p.ball_radius);
  const double straight = (std::clamp(a.values[1], -1.0, 1.0) + 1.0) / 2.0 * p.lane_length;
  const double k = std::clamp(a.values[2], -1.0, 1.0) * p.max_curvature;
  const double reach = p.ball_radius + p.pin_radius;
  OracleRoll out;
  out.min_gap.fill(1e9);
  std::array<bool, 10> direct{};
  const double ds = p.ball_speed * 0.001;
  for (double s = 0.0; s <= 3 * p.lane_length; s += ds) {
    double x, y;
    if (s <= straight) {
      x = rx;
      y = s;
    } else if (std::abs(k) < 1e-12) {
      x = rx;
      y = s;
    } else {
      const double phi = k * (s - straight);
      x = rx + (1 - std::cos(phi)) / k;
      y = straight + std::sin(phi) / k;
    }
    for (int i = 0; i < 10; ++i) {
      const double d = std::hypot(x - rack[i].pos.x, y - rack[i].pos.y);
      out.min_gap[i] = std::min(out.min_gap[i], std::abs(d - reach));
      if (d < reach) direct[i] = true;
    }
    if (y > p.lane_length || std::abs(x) > p.lane_width / 2) break;
  }
  out.knocked = direct;
  for (bool changed = true; changed;) {
    changed = false;
    for (int i = 0; i < 10; ++i) {
      if (!out.knocked[i]) continue;
      for (int j = 0; j < 10; ++j) {
        if (out.knocked[j] || rack[j].pos.y <= rack[i].pos.y) continue;
        if (std::hypot(rack[i].pos.x - rack[j].pos.x, rack[i].pos.y - rack[j].pos.y) <= p.chain_radius) {
          out.knocked[j] = true;
          changed = true;
        }
      }
    }
  }
  return out;
}

}  // namespace

TEST_CASE("constants derived from the task config") {
  const TaskConfig c = default_task_config(TaskKind::FindTreasure);
  CHECK(c.decision_steps_limit() == 150);
  CHECK(c.substeps_per_decision() == 5);
  const WorldState s = reset(c, 3);
  CHECK(s.v_max() == doctest::Approx(17.0 / 3.0));
  CHECK(s.agents.size() == 1);
  CHECK(s.controllable_agents() == std::vector<int>{0});
}

TEST_CASE("reset and step are deterministic per seed") {
  for (TaskKind t : {TaskKind::FindTreasure, TaskKind::HideSeek1v1, TaskKind::HideSeekNvN, TaskKind::Bowling}) {
    TaskConfig c = default_task_config(t);
    WorldState a = reset(c, 77);
    WorldState b = reset(c, 77);
    REQUIRE(a == b);
    crew::Rng ra(5), rb(5);
    for (int i = 0; i < 40 && !a.done; ++i) {
      const auto ra_act = random_actions(a, ra);
      const auto rb_act = random_actions(b, rb);
      const auto x = step(a, ra_act, c.decision_dt());
      const auto y = step(b, rb_act, c.decision_dt());
      REQUIRE(x.rewards == y.rewards);
      REQUIRE(a == b);
    }
  }
  const TaskConfig c = default_task_config(TaskKind::FindTreasure);
  CHECK_FALSE(reset(c, 1).arena->maze() == reset(c, 2).arena->maze());
}

TEST_CASE("find treasure reward accounting") {
  const TaskConfig c = default_task_config(TaskKind::FindTreasure);
  crew::Rng rng(9);
  int successes = 0;
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    WorldState s = reset(c, seed);
    double total = 0.0;
    int steps = 0;
    while (!s.done) {
      // Head straight for the treasure half of the time.
      std::map<int, ActionCommand> act;
      act[0] = rng.uniform01() < 0.5 ? encode_target(s, s.treasure) : random_action(rng, 2);
      total += step(s, act, c.decision_dt()).rewards.at(0);
      ++steps;
    }
    CHECK(steps <= 150);
    if (s.success) ++successes;
    CHECK(total == doctest::Approx(-steps + (s.success ? 10.0 : 0.0)));
    if (!s.success) CHECK(steps == 150);
  }
  CHECK(successes > 0);
}

TEST_CASE("per-step displacement is bounded by v_max") {
  const TaskConfig c = default_task_config(TaskKind::FindTreasure);
  WorldState s = reset(c, 4);
  crew::Rng rng(2);
  for (int i = 0; i < 100 && !s.done; ++i) {
    const Vec2 before = s.agents[0].pos;
    step(s, random_actions(s, rng), c.decision_dt());
    CHECK(distance(before, s.agents[0].pos) <= s.v_max() * c.decision_dt() + 1e-9);
    CHECK_FALSE(s.arena->disc_overlaps_wall(s.agents[0].pos, c.agent_radius - 1e-7));
  }
}

TEST_CASE("step validates inputs before mutating state") {
  const TaskConfig c = default_task_config(TaskKind::FindTreasure);
  WorldState s = reset(c, 1);
  const WorldState before = s;
  CHECK_THROWS_AS(step(s, {}, c.decision_dt()), std::invalid_argument);
  CHECK_THROWS_AS(step(s, {{0, ActionCommand{{0.1}}}}, c.decision_dt()), std::invalid_argument);
  CHECK_THROWS_AS(step(s, {{0, ActionCommand{{NAN, 0.0}}}}, c.decision_dt()), std::invalid_argument);
  CHECK_THROWS_AS(step(s, {{0, ActionCommand{{0.0, 0.0}}}}, 0.05), std::invalid_argument);
  CHECK_THROWS_AS(step(s, {{7, ActionCommand{{0.0, 0.0}}}, {0, ActionCommand{{0.0, 0.0}}}}, c.decision_dt()),
                  std::invalid_argument);
  CHECK(s == before);
  s.done = true;
  CHECK_THROWS_AS(step(s, {{0, ActionCommand{{0.0, 0.0}}}}, c.decision_dt()), std::logic_error);
}

TEST_CASE("out-of-range actions are clipped") {
  const TaskConfig c = default_task_config(TaskKind::FindTreasure);
  WorldState a = reset(c, 8);
  WorldState b = reset(c, 8);
  step(a, {{0, ActionCommand{{5.0, -3.0}}}}, c.decision_dt());
  step(b, {{0, ActionCommand{{1.0, -1.0}}}}, c.decision_dt());
  CHECK(a == b);
}

TEST_CASE("target decoding is affine and invertible") {
  const WorldState s = reset(default_task_config(TaskKind::FindTreasure), 1);
  const Vec2 center = decode_target(s, ActionCommand{{0.0, 0.0}});
  CHECK(center.x == doctest::Approx(s.arena->width() / 2));
  CHECK(center.y == doctest::Approx(s.arena->height() / 2));
  const Vec2 p{3.25, 11.5};
  const Vec2 q = decode_target(s, encode_target(s, p));
  CHECK(q.x == doctest::Approx(p.x));
  CHECK(q.y == doctest::Approx(p.y));
}

TEST_CASE("invalid config and disconnected fixed maze are rejected") {
  TaskConfig c = default_task_config(TaskKind::FindTreasure);
  c.capture_radius = -1;
  CHECK_THROWS_AS(reset(c, 0), std::invalid_argument);
  c = default_task_config(TaskKind::FindTreasure);
  c.maze_text = "maze 2 2\nfb\nd6\n";  // (0,0) sealed off
  try {
    reset(c, 0);
    FAIL("expected a throw");
  } catch (const std::invalid_argument& e) {
    CHECK(std::string(e.what()).find("not connected") != std::string::npos);
  }
}

TEST_CASE("hider flees a visible seeker and the policy is pure") {
  TaskConfig c = default_task_config(TaskKind::HideSeek1v1);
  c.maze_w = 4;
  c.maze_h = 4;
  c.braid_fraction = 1.0;  // open room
  WorldState s = reset(c, 3);
  s.agents[0].pos = {4.5, 4.5};
  s.agents[1].pos = {5.5, 4.5};
  const WorldState before = s;
  const HiderDecision d = hider_policy(s, 1);
  CHECK(s == before);
  CHECK(d.fleeing);
  const Vec2 target = decode_target(s, d.command);
  CHECK(target.x > s.agents[1].pos.x);
  const double d0 = distance(s.agents[0].pos, s.agents[1].pos);
  step(s, {{0, encode_target(s, s.agents[0].pos)}}, c.decision_dt());
  CHECK(distance(s.agents[0].pos, s.agents[1].pos) > d0);
}

TEST_CASE("hider wanders when no seeker is visible") {
  TaskConfig c = default_task_config(TaskKind::HideSeek1v1);
  WorldState s = reset(c, 12);
  s.agents[0].pos = s.arena->cell_center({0, 0});
  s.agents[1].pos = s.arena->cell_center({7, 7});
  const HiderDecision d = hider_policy(s, 1);
  CHECK_FALSE(d.fleeing);
  CHECK(d.has_waypoint);
  CHECK_FALSE(d.rng_after == s.rng);
  CHECK(hider_policy(s, 1).command == d.command);
  CHECK_THROWS_AS(hider_policy(s, 0), std::invalid_argument);
}

TEST_CASE("1v1 catch rewards") {
  TaskConfig c = default_task_config(TaskKind::HideSeek1v1);
  WorldState s = reset(c, 5);
  s.agents[1].pos = s.agents[0].pos + Vec2{0.2, 0.0};
  const StepResult r = step(s, {{0, encode_target(s, s.agents[0].pos)}}, c.decision_dt());
  CHECK(r.info.caught);
  CHECK(r.done);
  CHECK(r.rewards.at(0) == 9.0);
  CHECK(r.rewards.at(1) == -10.0);
}

TEST_CASE("NvN reward table and team sharing") {
  TaskConfig c = default_task_config(TaskKind::HideSeekNvN);
  c.n_seekers = 2;
  c.n_hiders = 2;
  c.min_spawn_separation = 3;
  WorldState s = reset(c, 21);
  REQUIRE(s.agents.size() == 4);
  // Hider 2 sits on seeker 0; hider 3 is far away.
  s.agents[2].pos = s.agents[0].pos;
  std::map<int, ActionCommand> act{{0, encode_target(s, s.agents[0].pos)}, {1, encode_target(s, s.agents[1].pos)}};
  WorldState shared = s;
  const StepResult r = step(s, act, c.decision_dt());
  CHECK(r.rewards.at(0) == -1.0 + 10.0);
  CHECK(r.rewards.at(1) == -1.0);
  CHECK(r.rewards.at(2) == -10.0);
  CHECK(r.rewards.at(3) == 1.0);
  CHECK_FALSE(r.done);
  CHECK(s.controllable_agents() == std::vector<int>{0, 1});

  shared.config.nvn.team_shared = true;
  const StepResult t = step(shared, act, c.decision_dt());
  CHECK(t.rewards.at(0) == 8.0);
  CHECK(t.rewards.at(1) == 8.0);
  CHECK(t.rewards.at(2) == -9.0);
  CHECK(t.rewards.at(3) == -9.0);
}

TEST_CASE("bowling episode is ten rolls with pin rewards") {
  const TaskConfig c = default_task_config(TaskKind::Bowling);
  WorldState s = reset(c, 0);
  crew::Rng rng(3);
  int rolls = 0;
  double total = 0.0;
  while (!s.done) {
    const StepResult r = step(s, {{0, random_action(rng, 3)}}, c.decision_dt());
    total += r.rewards.at(0);
    CHECK(r.rewards.at(0) == s.last_roll_pins);
    ++rolls;
  }
  CHECK(rolls == 10);
  CHECK(total == s.total_pins);
  CHECK_THROWS_AS(step(s, {{0, ActionCommand{{0, 0, 0}}}}, c.decision_dt()), std::logic_error);
  WorldState t = reset(c, 0);
  CHECK_THROWS_AS(step(t, {{0, ActionCommand{{0, 0}}}}, c.decision_dt()), std::invalid_argument);
}

TEST_CASE("bowling roll matches a fine-step oracle") {
  const BowlingParams p;
  crew::Rng rng(17);
  int ambiguous = 0;
  int total_pins = 0;
  for (int trial = 0; trial < 300; ++trial) {
    const ActionCommand a = random_action(rng, 3);
    const RollOutcome got = simulate_roll(p, standard_rack(p), a);
    const OracleRoll want = oracle_roll(p, a);
    for (int i = 0; i < 10; ++i) {
      if (got.knocked[i] != want.knocked[i]) {
        // Only grazing contacts, decided below the oracle's sampling resolution, may differ.
        CHECK(want.min_gap[i] < 1e-4);
        ++ambiguous;
      }
    }
    total_pins += got.count;
  }
  CHECK(ambiguous <= 3);
  CHECK(total_pins > 0);
}

TEST_CASE("bowling extremes") {
  const BowlingParams p;
  const auto rack = standard_rack(p);
  CHECK(simulate_roll(p, rack, ActionCommand{{0.0, 1.0, 0.0}}).count == 10);
  CHECK(simulate_roll(p, rack, ActionCommand{{1.0, -1.0, 1.0}}).count == 0);
  CHECK(simulate_roll(p, rack, ActionCommand{{-1.0, -1.0, -1.0}}).count == 0);
}
