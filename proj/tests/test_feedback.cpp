#include <doctest.h>

#include <chrono>

#include "credit_oracle.hpp"
#include "crew/feedback/feedback.hpp"

using namespace crew::feedback;
using crew::env::TaskKind;
using crew::testing::brute_force;
using crew::testing::random_log;
using crew::testing::same;


TEST_CASE("credit assignment equals the brute-force oracle") {
  crew::Rng rng(2024);
  const auto start = std::chrono::steady_clock::now();
  long labels = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const auto log = random_log(rng, rng.uniform_int(0, 200));
    const CreditWindow w = trial % 2 ? CreditWindow{0.2, 4.0} : CreditWindow{0.2, 1.0};
    const int m = rng.uniform_int(1, 200);
    const double t_max = log.empty() ? 10.0 : log.back().t_end + 5.0;
    for (int j = 0; j < m; ++j) {
      double t = rng.uniform(0.0, t_max);
      // Land exactly on a window edge now and then.
      if (!log.empty() && rng.uniform01() < 0.2) {
        const auto& e = log[rng.uniform_index(log.size())];
        t = e.t_end + (rng.uniform01() < 0.5 ? w.lower : w.upper);
      }
      const FeedbackEvent y = make_event(rng.uniform01() < 0.5 ? 1.0 : -1.0, t, FeedbackSource::Simulated, 0);
      const auto got = assign_credit(y, log, w);
      REQUIRE(same(got, brute_force(y, log, w)));
      labels += static_cast<long>(got.size());
    }
  }
  CHECK(labels > 0);
  CHECK(std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count() < 10.0);
}

TEST_CASE("window edges are inclusive") {
  std::vector<Experience> log{{0, {}, 0.0, 1.0}, {1, {}, 1.0, 2.0}, {2, {}, 2.0, 3.0}};
  const CreditWindow w{0.2, 1.0};
  const auto a = assign_credit(make_event(1.0, 3.2, FeedbackSource::Simulated, 0), log, w);
  REQUIRE(a.size() == 1);
  CHECK(a[0].log_index == 2);
  const auto b = assign_credit(make_event(-1.0, 3.0, FeedbackSource::Simulated, 0), log, w);
  REQUIRE(b.size() == 1);
  CHECK(b[0].log_index == 1);
  CHECK(b[0].y == -1.0);
  CHECK(assign_credit(make_event(1.0, 0.5, FeedbackSource::Simulated, 0), log, w).empty());
  CHECK(assign_credit(make_event(1.0, 1.0, FeedbackSource::Simulated, 0), {}, w).empty());
}

TEST_CASE("window defaults and validation") {
  CHECK(default_window(TaskKind::Bowling).upper == 4.0);
  CHECK(default_window(TaskKind::FindTreasure).upper == 1.0);
  CHECK(default_window(TaskKind::HideSeek1v1).lower == 0.2);
  CHECK_THROWS_AS((CreditWindow{1.0, 0.5}.validate()), std::invalid_argument);
  CHECK_THROWS_AS((CreditWindow{-0.1, 0.5}.validate()), std::invalid_argument);
  CHECK_NOTHROW((CreditWindow{0.2, 4.0}.validate()));
}

TEST_CASE("events are clamped to the unit interval") {
  CHECK(make_event(3.0, 0.0, FeedbackSource::HumanDiscrete, 0).value == 1.0);
  CHECK(make_event(-2.0, 0.0, FeedbackSource::HumanDiscrete, 0).value == -1.0);
  CHECK(parse_feedback_source(to_string(FeedbackSource::HumanContinuous)) == FeedbackSource::HumanContinuous);
  CHECK_THROWS_AS(parse_feedback_source("psychic"), std::invalid_argument);
}

TEST_CASE("simulated feedback judges progress toward the treasure") {
  using namespace crew::env;
  const TaskConfig c = default_task_config(TaskKind::FindTreasure);
  const WorldState s = reset(c, 6);
  const Arena& a = *s.arena;
  // Step toward and away from the treasure along the shortest path.
  WorldState toward = s;
  const Block next = a.next_step_toward(a.block_of(s.agents[0].pos), a.block_of(s.treasure));
  toward.agents[0].pos = a.block_center(next);
  toward.elapsed = 0.1;
  const auto pos = simulated_feedback(TaskKind::FindTreasure, s, toward, 0.3, 0, 5.0);
  REQUIRE(pos.has_value());
  CHECK(pos->value == 1.0);
  CHECK(pos->t_feedback == doctest::Approx(5.4));
  const auto neg = simulated_feedback(TaskKind::FindTreasure, toward, s, 0.3);
  REQUIRE(neg.has_value());
  CHECK(neg->value == -1.0);
  CHECK_FALSE(simulated_feedback(TaskKind::FindTreasure, s, s).has_value());
}

TEST_CASE("simulated feedback for hide and seek and bowling") {
  using namespace crew::env;
  TaskConfig c = default_task_config(TaskKind::HideSeek1v1);
  const WorldState s = reset(c, 4);
  const Arena& a = *s.arena;
  WorldState closer = s;
  closer.agents[0].pos = a.block_center(a.next_step_toward(a.block_of(s.agents[0].pos), a.block_of(s.agents[1].pos)));
  CHECK(simulated_feedback(TaskKind::HideSeek1v1, s, closer)->value == 1.0);

  const TaskConfig b = default_task_config(TaskKind::Bowling);
  WorldState r0 = reset(b, 0);
  WorldState r1 = r0;
  r1.roll_index = 1;
  r1.last_roll_pins = 7;
  CHECK(simulated_feedback(TaskKind::Bowling, r0, r1)->value == 1.0);
  r1.last_roll_pins = 2;
  CHECK(simulated_feedback(TaskKind::Bowling, r0, r1)->value == -1.0);
  CHECK_FALSE(simulated_feedback(TaskKind::Bowling, r1, r1).has_value());
}

TEST_CASE("shape_reward") {
  CHECK(shape_reward(-1.0, 1.0, 1.0) == 0.0);
  CHECK(shape_reward(2.0, -1.0, 0.5) == 1.5);
  CHECK_THROWS_AS(shape_reward(0.0, 1.0, 0.0), std::invalid_argument);
}

TEST_CASE("feedback queue orders, releases and bounds") {
  FeedbackQueue q(3);
  q.push(make_event(1, 2.0, FeedbackSource::Simulated, 0));
  q.push(make_event(-1, 1.0, FeedbackSource::Simulated, 0));
  q.push(make_event(1, 3.0, FeedbackSource::Simulated, 0));
  const auto early = q.release_until(2.0);
  REQUIRE(early.size() == 2);
  CHECK(early[0].t_feedback == 1.0);
  CHECK(early[1].t_feedback == 2.0);
  for (int i = 0; i < 5; ++i) q.push(make_event(1, 10.0 + i, FeedbackSource::Simulated, 0));
  CHECK(q.size() == 3);
  CHECK(q.dropped() == 3);
  CHECK(q.release_until(100.0).front().t_feedback == 12.0);
}

TEST_CASE("continuous pane sampler") {
  CHECK(ContinuousFeedbackSampler::pane_value(0.0) == 1.0);
  CHECK(ContinuousFeedbackSampler::pane_value(0.5) == 0.0);
  CHECK(ContinuousFeedbackSampler::pane_value(1.0) == -1.0);
  ContinuousFeedbackSampler s(10.0);
  CHECK(s.sample(0.0, 0.25, 1).has_value());
  CHECK_FALSE(s.sample(0.05, 0.25, 1).has_value());
  const auto e = s.sample(0.1, 0.25, 1);
  REQUIRE(e.has_value());
  CHECK(e->value == 0.5);
  CHECK(e->source == FeedbackSource::HumanContinuous);
  CHECK(e->target_agent == 1);
}
