#pragma once

#include <atomic>
#include <condition_variable>
#include <deque>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "crew/env/render.hpp"
#include "crew/learner/runner.hpp"
#include "crew/net/protocol.hpp"
#include "crew/recorder/recorder.hpp"

namespace crew::net {

using ClientId = std::uint64_t;

// Outgoing queue of one connection. Sequence numbers are assigned on push.
// A new StateFrame replaces any unsent one (latest wins) and keeps its
// snapshot flag, so a slow reader never holds back the tick.
class Outbox {
 public:
  void send(const std::string& match_id, Message m);
  std::vector<Envelope> drain();
  std::size_t pending() const;
  std::size_t coalesced() const;
  void set_notify(std::function<void()> fn);

 private:
  mutable std::mutex mutex_;
  std::deque<Envelope> queue_;
  std::uint64_t seq_ = 0;
  std::size_t coalesced_ = 0;
  std::function<void()> notify_;
};

// Blocks of the arena and entity positions visible through `view` for one
// agent. Full view reveals everything.
struct Visibility {
  std::vector<std::uint8_t> blocks;
  std::function<bool(env::Vec2)> point;
};
Visibility visibility(const env::WorldState& s, std::optional<int> agent, env::ViewKind view);

struct MatchOptions {
  std::string match_id;
  env::TaskConfig task;
  std::uint64_t seed = 0;
  bool train = true;
  learner::Algo algo = learner::Algo::Tamer;
  std::optional<learner::AgentConfig> agent;
  bool sim_feedback = false;
  double feedback_period_s = 1.0;
  double reaction_delay_s = 0.3;
  // Trainer on its own thread; the tick uses the latest published action.
  bool threaded_trainer = false;
  std::shared_ptr<recorder::Recorder> recorder;
};

// Drives one controllable agent's learner.
class AgentDriver {
 public:
  virtual ~AgentDriver() = default;
  virtual void begin(const env::ObservationFrame& first, double t) = 0;
  virtual std::vector<float> action(double t) = 0;
  virtual void observe(const env::ObservationFrame& next, const std::vector<float>& executed, double reward,
                       bool terminal, double t) = 0;
  virtual void feedback(const feedback::FeedbackEvent& e) = 0;
  virtual learner::RunnerStats stats() const = 0;
};

std::unique_ptr<AgentDriver> make_driver(std::unique_ptr<learner::AgentRunner> runner, bool threaded);

// One isolated match. Not thread-safe: every call must come from the
// owning MatchHost's thread.
class MatchInstance {
 public:
  explicit MatchInstance(MatchOptions opt);
  ~MatchInstance();

  const std::string& id() const { return opt_.match_id; }
  MatchSummary summary() const;

  // Sends AssignRole(Viewer) then a snapshot StateFrame.
  void connect(ClientId c, std::shared_ptr<Outbox> out, std::string name);
  void disconnect(ClientId c);
  bool has_client(ClientId c) const { return clients_.contains(c); }
  // Client clock minus server clock; nullopt until estimated.
  void set_clock_offset(ClientId c, std::optional<double> offset);
  void handle(ClientId c, const Message& m, double server_now);
  // Applies queued actions, steps the world and broadcasts frames.
  void tick(double server_now);

  std::int64_t tick_count() const { return tick_; }
  int episode() const { return episode_; }
  const env::WorldState& world() const { return world_; }
  std::uint64_t state_hash() const;
  std::map<int, learner::RunnerStats> stats() const;
  std::optional<int> controller_of_agent(int agent) const;
  StateFrame frame_for(ClientId c, bool snapshot) const;

 private:
  struct Client {
    std::string name;
    std::shared_ptr<Outbox> out;
    Role role;
    std::optional<int> selected;
    std::optional<double> offset;
  };

  void error(Client& c, ErrorCode code, const std::string& text);
  void start_episode(double now);
  double to_server_time(const Client& c, double client_time, double now) const;
  std::optional<int> view_agent(const Client& c) const;

  MatchOptions opt_;
  env::WorldState world_;
  std::vector<int> agents_;
  std::map<int, std::unique_ptr<AgentDriver>> drivers_;
  std::map<ClientId, Client> clients_;
  std::map<int, ClientId> controller_;  // agent -> controlling client
  std::map<int, std::vector<double>> teleop_;
  std::map<int, env::WorldState> judge_reference_;
  double last_judgment_ = 0.0;
  double last_feedback_t_ = 0.0;
  std::map<std::string, double> last_external_t_;
  std::int64_t tick_ = 0;
  int episode_ = 0;
  double session_t_ = 0.0;
};

// Owns a MatchInstance and funnels every mutation through one thread. In
// manual mode (no start()), post() runs immediately and tick() is explicit.
class MatchHost {
 public:
  explicit MatchHost(MatchOptions opt);
  ~MatchHost();

  const std::string& id() const { return id_; }
  void post(std::function<void(MatchInstance&)> fn);
  // Ticks at decision_hz against `clock` (seconds) until stop().
  void start(std::function<double()> clock);
  void stop();
  // Manual mode only.
  void tick(double now);
  MatchSummary summary() const;
  MatchInstance& instance_unsafe() { return *match_; }

 private:
  void loop(std::function<double()> clock);

  std::string id_;
  std::unique_ptr<MatchInstance> match_;
  mutable std::mutex mutex_;
  std::condition_variable cv_;
  std::deque<std::function<void(MatchInstance&)>> queue_;
  MatchSummary summary_;
  std::thread thread_;
  std::atomic<bool> running_{false};
};

}  // namespace crew::net
