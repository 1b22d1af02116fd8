#include "crew/feedback/feedback.hpp"

#include <algorithm>
#include <limits>
#include <stdexcept>

namespace crew::feedback {

std::string to_string(FeedbackSource s) {
  switch (s) {
    case FeedbackSource::HumanDiscrete: return "human_discrete";
    case FeedbackSource::HumanContinuous: return "human_continuous";
    case FeedbackSource::Simulated: return "simulated";
  }
  return "unknown";
}

FeedbackSource parse_feedback_source(const std::string& s) {
  for (auto v : {FeedbackSource::HumanDiscrete, FeedbackSource::HumanContinuous, FeedbackSource::Simulated}) {
    if (to_string(v) == s) return v;
  }
  throw std::invalid_argument("unknown feedback source '" + s + "'");
}

FeedbackEvent make_event(double value, double t, FeedbackSource source, int target_agent) {
  return FeedbackEvent{std::clamp(value, -1.0, 1.0), t, source, target_agent};
}

void CreditWindow::validate() const {
  if (!(lower >= 0.0 && lower < upper)) {
    throw std::invalid_argument("credit window must satisfy 0 <= lower < upper");
  }
}

CreditWindow default_window(env::TaskKind task) {
  if (task == env::TaskKind::Bowling) return {0.2, 4.0};
  return {0.2, 1.0};
}

std::vector<CreditLabel> assign_credit(const FeedbackEvent& y, std::span<const Experience> log,
                                       const CreditWindow& w) {
  // Delta = t_feedback - t_end in [lower, upper]  <=>  t_end in [t - upper, t - lower].
  // The search bounds are widened slightly; membership is decided on delta itself.
  constexpr double kSlack = 1e-9;
  const double lo = y.t_feedback - w.upper - kSlack;
  const double hi = y.t_feedback - w.lower + kSlack;
  auto it = std::lower_bound(log.begin(), log.end(), lo,
                             [](const Experience& e, double v) { return e.t_end < v; });
  std::vector<CreditLabel> out;
  for (; it != log.end() && it->t_end <= hi; ++it) {
    const double delta = y.t_feedback - it->t_end;
    if (delta >= w.lower && delta <= w.upper) {
      out.push_back({static_cast<std::size_t>(it - log.begin()), y.value, 1.0});
    }
  }
  return out;
}

int progress_distance(const env::WorldState& s, int agent_id) {
  if (!s.arena) return -1;
  const auto& me = s.agent(agent_id);
  if (s.task() == env::TaskKind::FindTreasure) {
    return s.success ? 0 : s.arena->geodesic_distance(me.pos, s.treasure);
  }
  const auto dist = s.arena->geodesic_from(s.arena->block_of(me.pos));
  int best = std::numeric_limits<int>::max();
  for (const auto& a : s.agents) {
    if (a.team != env::Team::Hider || !a.active) continue;
    const int d = dist[static_cast<std::size_t>(s.arena->block_index(s.arena->block_of(a.pos)))];
    if (d >= 0) best = std::min(best, d);
  }
  return best == std::numeric_limits<int>::max() ? 0 : best;
}

std::optional<FeedbackEvent> simulated_feedback(env::TaskKind task, const env::WorldState& prev,
                                                const env::WorldState& next, double reaction_delay,
                                                int target_agent, double clock_origin) {
  const double t = clock_origin + next.elapsed + reaction_delay;
  if (task == env::TaskKind::Bowling) {
    if (next.roll_index == 0 || next.roll_index == prev.roll_index) return std::nullopt;
    return make_event(next.last_roll_pins >= 5 ? 1.0 : -1.0, t, FeedbackSource::Simulated, target_agent);
  }
  const int before = progress_distance(prev, target_agent);
  const int after = progress_distance(next, target_agent);
  if (before < 0 || after < 0 || before == after) return std::nullopt;
  return make_event(after < before ? 1.0 : -1.0, t, FeedbackSource::Simulated, target_agent);
}

double shape_reward(double env_reward, double feedback_value, double scale) {
  if (!(scale > 0.0)) throw std::invalid_argument("shape_reward: scale must be positive");
  return env_reward + scale * feedback_value;
}

void FeedbackQueue::push(const FeedbackEvent& e) {
  std::lock_guard lock(mutex_);
  const auto pos = std::upper_bound(events_.begin(), events_.end(), e.t_feedback,
                                    [](double t, const FeedbackEvent& x) { return t < x.t_feedback; });
  events_.insert(pos, e);
  while (events_.size() > capacity_) {
    events_.pop_front();
    ++dropped_;
  }
}

std::vector<FeedbackEvent> FeedbackQueue::release_until(double now) {
  std::lock_guard lock(mutex_);
  std::vector<FeedbackEvent> out;
  while (!events_.empty() && events_.front().t_feedback <= now) {
    out.push_back(events_.front());
    events_.pop_front();
  }
  return out;
}

std::size_t FeedbackQueue::size() const {
  std::lock_guard lock(mutex_);
  return events_.size();
}

std::size_t FeedbackQueue::dropped() const {
  std::lock_guard lock(mutex_);
  return dropped_;
}

double ContinuousFeedbackSampler::pane_value(double fraction_from_top) {
  return std::clamp(1.0 - 2.0 * fraction_from_top, -1.0, 1.0);
}

std::optional<FeedbackEvent> ContinuousFeedbackSampler::sample(double t, double fraction_from_top, int target_agent) {
  if (last_t_ && t - *last_t_ < period_ - 1e-9) return std::nullopt;
  last_t_ = t;
  return make_event(pane_value(fraction_from_top), t, FeedbackSource::HumanContinuous, target_agent);
}

}  // namespace crew::feedback
