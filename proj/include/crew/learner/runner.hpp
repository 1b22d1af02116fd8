#pragma once

#include <memory>
#include <vector>

#include "crew/feedback/feedback.hpp"
#include "crew/learner/agents.hpp"
#include "crew/learner/replay.hpp"

namespace crew::learner {

struct RunnerStats {
  long steps = 0;
  long updates = 0;
  long feedback_events = 0;
  // Alg. 1 accounting: j counts released events, k counts H/A updates.
  long feedback_rounds = 0;
  long skipped_empty = 0;  // events whose credit window held no experience
  long periodic_rounds = 0;
  long periodic_noops = 0;  // i mod b == 0 while D was empty
  // Off-policy accounting.
  long update_rounds = 0;
};

// Drives one learner for one controllable agent: frame stacking, the
// experience log used for credit assignment, replay, and the update schedule.
// For TAMER, each observe() closes step i and then applies lines 6-21 of
// Alg. 1; for DDPG/SAC/heuristic, every frames_per_batch steps triggers
// round(frames_per_batch * updates_per_frame) updates.
class AgentRunner {
 public:
  AgentRunner(std::unique_ptr<Learner> learner, feedback::CreditWindow window, std::uint64_t seed);

  void begin_episode(const env::ObservationFrame& first);
  // Action for the current stack, recorded as a_i with t_i = t_now.
  std::vector<float> act(double t_now, bool explore = true);
  // Replaces the open step's action with the one actually executed
  // (teleoperation). Throws std::logic_error without an open step.
  void override_action(std::vector<float> a);
  // Closes the step opened by act() with the next frame and t_{i+1}.
  void observe(const env::ObservationFrame& next, double reward, bool terminal, double t_next);
  void push_feedback(const feedback::FeedbackEvent& e) { queue_.push(e); }
  // Runs the updates owed for frames collected since the last round.
  void flush();

  Learner& learner() { return *learner_; }
  std::unique_ptr<Learner> release_learner() { return std::move(learner_); }
  const RunnerStats& stats() const { return stats_; }
  std::size_t labeled_size() const { return labeled_.size(); }
  Rng& rng() { return rng_; }

 private:
  void tamer_step(double t_next);
  void rl_round(long frames);
  void tamer_update(const std::vector<const LabeledExperience*>& batch);

  std::unique_ptr<Learner> learner_;
  AgentConfig cfg_;
  feedback::CreditWindow window_;
  Rng rng_;
  std::unique_ptr<FrameStore> store_;
  FrameStacker stacker_;
  feedback::FeedbackQueue queue_;

  // Open step.
  bool pending_ = false;
  StackRef pending_obs_;
  std::vector<float> pending_action_;
  double pending_t_ = 0.0;

  // Experience log for credit assignment, aligned entry by entry.
  std::vector<feedback::Experience> log_;
  std::vector<StackRef> log_obs_;

  LabeledMemory labeled_;
  ReplayBuffer replay_;
  long frames_since_round_ = 0;
  RunnerStats stats_;
};

}  // namespace crew::learner
