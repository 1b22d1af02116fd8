#pragma once

#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "crew/env/task_config.hpp"
#include "crew/learner/runner.hpp"
#include "crew/recorder/recorder.hpp"

namespace crew::learner {

inline constexpr int kNavigationEvalEpisodes = 100;
inline constexpr int kBowlingEvalRolls = 10;
inline constexpr double kCheckpointIntervalS = 120.0;

// "6000" is steps; "10m", "90s" are session time converted with decision_hz.
long parse_budget(const std::string& text, double decision_hz);

struct TrainOptions {
  Algo algo = Algo::Tamer;
  env::TaskConfig task;
  long budget_steps = 6000;
  std::uint64_t seed = 0;
  // Simulated trainer for TAMER; heuristic shaping always uses it.
  bool sim_feedback = true;
  double feedback_period_s = 1.0;
  double reaction_delay_s = 0.3;
  double heuristic_scale = 1.0;
  double checkpoint_interval_s = kCheckpointIntervalS;
  std::optional<AgentConfig> agent;  // overrides default_agent_config
  std::optional<feedback::CreditWindow> window;
  std::filesystem::path out_dir;  // empty: no files written
  // Streams "feedback", "steps" and "metrics" on the session clock.
  recorder::Recorder* recorder = nullptr;
  std::function<void(const nlohmann::json&)> on_record;
};

struct TrainResult {
  long steps = 0;
  long episodes = 0;
  long successes = 0;
  std::map<int, RunnerStats> stats;  // per controllable agent
  std::vector<std::filesystem::path> checkpoints;
  std::map<int, std::unique_ptr<Learner>> learners;
};

// Headless accelerated training: one AgentRunner per controllable agent,
// session time advancing by 1/decision_hz per step.
TrainResult train_headless(const TrainOptions& opt);

struct EvalResult {
  int episodes = 0;
  int successes = 0;
  double success_rate = 0.0;
  double mean_return = 0.0;
  double mean_steps = 0.0;
  int total_pins = 0;  // Bowling
  std::vector<double> returns;
};

using ScriptedPolicy = std::function<env::ActionCommand(const env::WorldState&, int agent_id)>;

// Greedy rollouts with episode seeds mix_seed(seed, e). Agents in `scripted`
// follow their policy; agents in neither map act uniformly at random. Bowling
// evaluates one game of 10 rolls. Throws std::invalid_argument when a
// learner's input shape does not match the task's observation.
EvalResult evaluate(std::map<int, Learner*> learners, const env::TaskConfig& task, int episodes, std::uint64_t seed,
                    const std::map<int, ScriptedPolicy>& scripted = {});

// Loads every agentN.ckpt in a checkpoint directory.
std::map<int, std::unique_ptr<Learner>> load_checkpoint_dir(const std::filesystem::path& dir);

}  // namespace crew::learner
