#include "crew/learner/runner.hpp"

#include <cmath>
#include <stdexcept>

namespace crew::learner {

namespace {

// Log entries older than this, relative to the newest step, can no longer be
// credited by any event that is still on time.
constexpr double kLogHorizonSlack = 10.0;
constexpr std::size_t kLogTrimBatch = 1024;

nn::Matrix<float> action_matrix(const std::vector<const std::vector<float>*>& actions, int dim) {
  nn::Matrix<float> m(static_cast<int>(actions.size()), dim);
  for (std::size_t i = 0; i < actions.size(); ++i) {
    if (static_cast<int>(actions[i]->size()) != dim) throw std::logic_error("runner: action dimension mismatch");
    std::copy(actions[i]->begin(), actions[i]->end(), m.data.begin() + static_cast<std::ptrdiff_t>(i * dim));
  }
  return m;
}

}  // namespace

AgentRunner::AgentRunner(std::unique_ptr<Learner> learner, feedback::CreditWindow window, std::uint64_t seed)
    : learner_(std::move(learner)),
      cfg_(learner_->config()),
      window_(window),
      rng_(seed),
      stacker_(cfg_.frame_stack),
      labeled_(cfg_.label_capacity),
      replay_(cfg_.replay_capacity) {
  window_.validate();
}

void AgentRunner::begin_episode(const env::ObservationFrame& first) {
  if (!store_) {
    const auto cap = static_cast<std::size_t>(1.25 * static_cast<double>(cfg_.replay_capacity)) + 1000;
    store_ = std::make_unique<FrameStore>(first.channels, first.height, first.width, cap);
    if (first.channels * cfg_.frame_stack != cfg_.encoder.in_channels || first.height != cfg_.encoder.height ||
        first.width != cfg_.encoder.width) {
      throw std::invalid_argument("runner: observation shape does not match the encoder");
    }
  }
  stacker_.reset(store_->push(first));
  pending_ = false;
}

std::vector<float> AgentRunner::act(double t_now, bool explore) {
  if (!store_) throw std::logic_error("runner: act before begin_episode");
  const StackRef& s = stacker_.current();
  const nn::FeatureMap<float> obs = assemble(*store_, std::span<const StackRef>(&s, 1), 0.0, nullptr);
  std::vector<float> a = learner_->act(obs, explore, rng_);
  pending_ = true;
  pending_obs_ = s;
  pending_action_ = a;
  pending_t_ = t_now;
  return a;
}

void AgentRunner::override_action(std::vector<float> a) {
  if (!pending_) throw std::logic_error("runner: override_action without an open step");
  if (a.size() != pending_action_.size()) throw std::invalid_argument("runner: override action has the wrong size");
  pending_action_ = std::move(a);
}

void AgentRunner::observe(const env::ObservationFrame& next, double reward, bool terminal, double t_next) {
  if (!pending_) throw std::logic_error("runner: observe without a preceding act");
  pending_ = false;
  stacker_.push(store_->push(next));
  ++stats_.steps;

  if (cfg_.algo == Algo::Tamer) {
    log_.push_back({static_cast<std::uint64_t>(stats_.steps), pending_action_, pending_t_, t_next});
    log_obs_.push_back(pending_obs_);
    tamer_step(t_next);
    return;
  }
  replay_.push({pending_obs_, pending_action_, static_cast<float>(reward), stacker_.current(), terminal});
  if (++frames_since_round_ >= cfg_.frames_per_batch) {
    rl_round(frames_since_round_);
    frames_since_round_ = 0;
  }
}

void AgentRunner::tamer_step(double t_next) {
  // Lines 6-15: every event stamped at or before t_{i+1}.
  for (const auto& e : queue_.release_until(t_next)) {
    ++stats_.feedback_events;
    const auto credit = feedback::assign_credit(e, log_, window_);
    if (credit.empty()) {
      ++stats_.skipped_empty;
      continue;
    }
    std::vector<LabeledExperience> dj;
    dj.reserve(credit.size());
    for (const auto& c : credit) {
      dj.push_back({log_obs_[c.log_index], log_[c.log_index].action, static_cast<float>(c.y)});
    }
    std::vector<const LabeledExperience*> batch;
    for (const auto& x : dj) batch.push_back(&x);
    tamer_update(batch);
    ++stats_.feedback_rounds;
    for (auto& x : dj) labeled_.add(std::move(x));
  }

  // Lines 16-21.
  if (stats_.steps % cfg_.frames_per_batch == 0) {
    if (labeled_.empty()) {
      ++stats_.periodic_noops;
    } else {
      tamer_update(labeled_.sample(static_cast<std::size_t>(cfg_.batch_size), rng_));
      ++stats_.periodic_rounds;
    }
  }

  if (log_.size() >= 2 * kLogTrimBatch) {
    const double horizon = t_next - window_.upper - kLogHorizonSlack;
    std::size_t drop = 0;
    while (drop < log_.size() && log_[drop].t_end < horizon) ++drop;
    drop = std::min(drop, log_.size() - kLogTrimBatch);
    log_.erase(log_.begin(), log_.begin() + static_cast<std::ptrdiff_t>(drop));
    log_obs_.erase(log_obs_.begin(), log_obs_.begin() + static_cast<std::ptrdiff_t>(drop));
  }
}

void AgentRunner::tamer_update(const std::vector<const LabeledExperience*>& batch) {
  // Labels whose frames have left the store can no longer be replayed.
  auto evicted = [&](const LabeledExperience& e) {
    for (FrameId id : e.obs) {
      if (!store_->contains(id)) return true;
    }
    return false;
  };
  std::vector<const LabeledExperience*> live;
  for (const auto* e : batch) {
    if (!evicted(*e)) live.push_back(e);
  }
  if (live.size() != batch.size()) labeled_.remove_if(evicted);
  if (live.empty()) return;

  std::vector<StackRef> stacks;
  std::vector<const std::vector<float>*> actions;
  std::vector<float> y;
  for (const auto* e : live) {
    stacks.push_back(e->obs);
    actions.push_back(&e->action);
    y.push_back(e->y);
  }
  const auto obs = assemble(*store_, stacks, cfg_.shift_fraction, &rng_);
  static_cast<TamerLearner&>(*learner_).update(obs, action_matrix(actions, cfg_.action_dim), y);
  ++stats_.updates;
}

void AgentRunner::rl_round(long frames) {
  const long n = std::lround(static_cast<double>(frames) * cfg_.updates_per_frame);
  if (n <= 0 || replay_.size() == 0) return;
  ++stats_.update_rounds;
  for (long u = 0; u < n; ++u) {
    const auto picked = replay_.sample(static_cast<std::size_t>(cfg_.batch_size), rng_);
    std::vector<StackRef> obs, next;
    std::vector<const std::vector<float>*> actions;
    TransitionBatch b;
    for (const auto* t : picked) {
      obs.push_back(t->obs);
      next.push_back(t->next_obs);
      actions.push_back(&t->action);
      b.reward.push_back(t->reward);
      b.done.push_back(t->terminal ? 1.0f : 0.0f);
    }
    b.obs = assemble(*store_, obs, cfg_.shift_fraction, &rng_);
    b.next_obs = assemble(*store_, next, cfg_.shift_fraction, &rng_);
    b.action = action_matrix(actions, cfg_.action_dim);
    if (cfg_.algo == Algo::Sac) {
      static_cast<SacLearner&>(*learner_).update(b, rng_);
    } else {
      static_cast<DdpgLearner&>(*learner_).update(b);
    }
    ++stats_.updates;
  }
}

void AgentRunner::flush() {
  if (cfg_.algo == Algo::Tamer) return;
  if (frames_since_round_ > 0) rl_round(frames_since_round_);
  frames_since_round_ = 0;
}

}  // namespace crew::learner
