#pragma once

#include <cstdint>
#include <deque>
#include <mutex>
#include <optional>
#include <span>
#include <vector>

#include "crew/env/world.hpp"

namespace crew::feedback {

enum class FeedbackSource { HumanDiscrete, HumanContinuous, Simulated };

std::string to_string(FeedbackSource s);
FeedbackSource parse_feedback_source(const std::string& s);

// Scalar judgment on the unified session clock. Values are clamped to [-1, 1].
struct FeedbackEvent {
  double value = 0.0;
  double t_feedback = 0.0;
  FeedbackSource source = FeedbackSource::Simulated;
  int target_agent = 0;
  bool operator==(const FeedbackEvent&) const = default;
};

FeedbackEvent make_event(double value, double t, FeedbackSource source, int target_agent);

// One decision step as seen by credit assignment. `step` identifies the
// stored observation stack and action in the learner's buffers.
struct Experience {
  std::uint64_t step = 0;
  std::vector<float> action;
  double t_start = 0.0;
  double t_end = 0.0;
};

struct CreditWindow {
  double lower = 0.2;
  double upper = 1.0;
  // Throws std::invalid_argument unless 0 <= lower < upper.
  void validate() const;
};

// Window values per task from the hyperparameter table.
CreditWindow default_window(env::TaskKind task);

struct CreditLabel {
  std::size_t log_index = 0;  // position in the experience log
  double y = 0.0;
  double weight = 1.0;
};

// Experiences with (t_feedback - t_end) in [lower, upper], both ends closed,
// each labeled with y.value at weight 1. `log` must be ordered by t_end.
std::vector<CreditLabel> assign_credit(const FeedbackEvent& y, std::span<const Experience> log,
                                       const CreditWindow& w);

// Heuristic surrogate for a human trainer. Navigation tasks judge the sign of
// the change in geodesic distance (agent to treasure, or seeker to nearest
// hider); Bowling judges a finished roll (>= 5 pins is positive). The event
// is stamped at clock_origin + next.elapsed + reaction_delay, where
// clock_origin is the session time at which the episode started.
std::optional<FeedbackEvent> simulated_feedback(env::TaskKind task, const env::WorldState& prev,
                                                const env::WorldState& next, double reaction_delay = 0.3,
                                                int target_agent = 0, double clock_origin = 0.0);

// Geodesic block distance used by simulated_feedback; -1 if undefined.
int progress_distance(const env::WorldState& state, int agent_id);

// Dense reward shaping for the heuristic baseline.
double shape_reward(double env_reward, double feedback_value, double scale);

// Bounded, time-ordered queue shared between feedback producers (network,
// simulated trainer) and the learner. Producers never block on consumers;
// when full, the oldest pending event is dropped.
class FeedbackQueue {
 public:
  explicit FeedbackQueue(std::size_t capacity = 4096) : capacity_(capacity) {}

  void push(const FeedbackEvent& e);
  // Removes and returns every event with t_feedback <= now.
  std::vector<FeedbackEvent> release_until(double now);
  std::size_t size() const;
  std::size_t dropped() const;

 private:
  mutable std::mutex mutex_;
  std::deque<FeedbackEvent> events_;
  std::size_t capacity_;
  std::size_t dropped_ = 0;
};

// Samples a hover pane position at a fixed rate while hovered, producing
// HumanContinuous events. Position 0 is the top edge (+1), 1 the bottom (-1).
class ContinuousFeedbackSampler {
 public:
  explicit ContinuousFeedbackSampler(double rate_hz = 10.0) : period_(1.0 / rate_hz) {}
  std::optional<FeedbackEvent> sample(double t, double pane_fraction_from_top, int target_agent);
  static double pane_value(double fraction_from_top);

 private:
  double period_;
  std::optional<double> last_t_;
};

}  // namespace crew::feedback
