#include "crew/learner/train.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <regex>
#include <stdexcept>

#include "crew/env/render.hpp"

namespace crew::learner {

namespace fs = std::filesystem;

long parse_budget(const std::string& text, double decision_hz) {
  static const std::regex re(R"(^\s*([0-9]+(?:\.[0-9]+)?)\s*(steps|s|m|min|h)?\s*$)");
  std::smatch m;
  if (!std::regex_match(text, m, re)) {
    throw std::invalid_argument("budget '" + text + "': expected <n>, <n>steps, <n>s, <n>m or <n>h");
  }
  const double v = std::stod(m[1]);
  const std::string unit = m[2];
  double steps = v;
  if (unit == "s") steps = v * decision_hz;
  if (unit == "m" || unit == "min") steps = v * 60.0 * decision_hz;
  if (unit == "h") steps = v * 3600.0 * decision_hz;
  if (steps < 1.0) throw std::invalid_argument("budget '" + text + "' is less than one step");
  return std::lround(steps);
}

namespace {

std::vector<double> to_doubles(const std::vector<float>& a) { return {a.begin(), a.end()}; }

std::string step_dir_name(long step) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "step_%06ld", step);
  return buf;
}

class MetricsSink {
 public:
  MetricsSink(const fs::path& dir, std::function<void(const nlohmann::json&)> cb, recorder::Recorder* rec)
      : cb_(std::move(cb)), rec_(rec) {
    if (rec_) stream_ = rec_->ensure_stream("metrics", {{"fields", {{"type", "string"}}}});
    if (!dir.empty()) {
      fs::create_directories(dir);
      out_.open(dir / "metrics.jsonl", std::ios::app);
      if (!out_) throw std::runtime_error("cannot open " + (dir / "metrics.jsonl").string());
    }
  }
  void write(const nlohmann::json& j, double t) {
    if (rec_) rec_->append(stream_, t, j);
    if (out_.is_open()) {
      out_ << j.dump() << '\n';
      out_.flush();
    }
    if (cb_) cb_(j);
  }

 private:
  std::ofstream out_;
  std::function<void(const nlohmann::json&)> cb_;
  recorder::Recorder* rec_;
  recorder::StreamHandle stream_ = 0;
};

}  // namespace

TrainResult train_headless(const TrainOptions& opt) {
  opt.task.validate();
  if (opt.budget_steps <= 0) throw std::invalid_argument("train: budget must be positive");
  const auto t0 = std::chrono::steady_clock::now();
  auto wall = [&] { return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count(); };
  const double dt = opt.task.decision_dt();
  const int res = opt.task.resolution;
  const bool heuristic = opt.algo == Algo::Heuristic;
  const bool judge = opt.algo == Algo::Tamer && opt.sim_feedback;
  const long ckpt_every = std::max(1L, std::lround(opt.checkpoint_interval_s * opt.task.decision_hz));
  const feedback::CreditWindow window = opt.window.value_or(feedback::default_window(opt.task.task));

  MetricsSink sink(opt.out_dir, opt.on_record, opt.recorder);
  recorder::StreamHandle feedback_stream = 0, steps_stream = 0;
  if (opt.recorder) {
    feedback_stream = opt.recorder->ensure_stream(
        "feedback", {{"fields", {{"agent", "integer"}, {"value", "number"}, {"source", "string"}}}});
    steps_stream = opt.recorder->ensure_stream(
        "steps", {{"fields", {{"agent", "integer"}, {"action", "array"}, {"reward", "number"}}}},
        opt.task.decision_hz);
  }
  TrainResult result;

  std::uint64_t episode_seed = mix_seed(opt.seed, 0x7EA1);
  env::WorldState world = env::reset(opt.task, mix_seed(episode_seed, 0));
  const std::vector<int> ids = world.controllable_agents();
  std::map<int, std::unique_ptr<AgentRunner>> runners;
  for (int id : ids) {
    AgentConfig cfg = opt.agent.value_or(default_agent_config(opt.algo, opt.task));
    cfg.algo = opt.algo;
    cfg.seed = mix_seed(opt.seed, static_cast<std::uint64_t>(id) + 1);
    runners[id] = std::make_unique<AgentRunner>(make_learner(cfg), window, mix_seed(cfg.seed, 0x5EED));
  }

  auto checkpoint = [&](const std::string& name, long step) {
    if (opt.out_dir.empty()) return;
    const fs::path dir = opt.out_dir / "checkpoints" / name;
    fs::create_directories(dir);
    nlohmann::json meta = {{"step", step}, {"session_time_s", step * dt}, {"algo", to_string(opt.algo)},
                           {"task", env::to_string(opt.task.task)}, {"seed", opt.seed}, {"agents", nlohmann::json::object()}};
    for (auto& [id, r] : runners) {
      const auto file = dir / ("agent" + std::to_string(id) + ".ckpt");
      save_learner(r->learner(), file, {{"step", step}, {"rng", r->rng().serialize()}});
      meta["agents"][std::to_string(id)] = {{"file", file.filename().string()}, {"updates", r->stats().updates}};
    }
    std::ofstream(dir / "meta.json") << meta.dump(2) << '\n';
    result.checkpoints.push_back(dir);
    nlohmann::json rec = {{"type", "checkpoint"}, {"name", name}, {"step", step}, {"wall_s", wall()}};
    for (auto& [id, r] : runners) rec["updates"][std::to_string(id)] = r->stats().updates;
    sink.write(rec, static_cast<double>(step) * dt);
  };

  long step = 0;
  double clock = 0.0;
  long episode = 0;
  while (step < opt.budget_steps) {
    if (episode > 0) world = env::reset(opt.task, mix_seed(episode_seed, static_cast<std::uint64_t>(episode)));
    const double origin = clock;
    std::map<int, env::WorldState> reference;
    double last_judgment = clock;
    std::map<int, double> returns;
    for (int id : ids) {
      runners[id]->begin_episode(env::render_view(world, id, opt.task.view, res, res));
      if (judge) reference[id] = world;
    }
    while (!world.done && step < opt.budget_steps) {
      std::map<int, env::ActionCommand> actions;
      for (int id : ids) actions[id] = {to_doubles(runners[id]->act(clock, true))};
      std::optional<env::WorldState> prev;
      if (heuristic) prev = world;
      const env::StepResult sr = env::step(world, actions, dt);
      ++step;
      clock = static_cast<double>(step) * dt;
      const bool terminal = sr.done && world.success;
      const bool judge_now = judge && clock - last_judgment >= opt.feedback_period_s - 1e-9;
      for (int id : ids) {
        double r = sr.rewards.count(id) ? sr.rewards.at(id) : 0.0;
        returns[id] += r;
        if (heuristic) {
          const auto fb = feedback::simulated_feedback(opt.task.task, *prev, world, 0.0, id, origin);
          r = feedback::shape_reward(r, fb ? fb->value : 0.0, opt.heuristic_scale);
        }
        if (judge_now) {
          if (auto e = feedback::simulated_feedback(opt.task.task, reference[id], world, opt.reaction_delay_s, id,
                                                    origin)) {
            runners[id]->push_feedback(*e);
            if (opt.recorder) {
              opt.recorder->append(feedback_stream, e->t_feedback,
                                   {{"agent", id}, {"value", e->value}, {"source", feedback::to_string(e->source)}});
            }
          }
          reference[id] = world;
        }
        if (opt.recorder) {
          opt.recorder->append(steps_stream, clock,
                               {{"agent", id}, {"action", actions[id].values}, {"reward", r}, {"done", sr.done}});
        }
        runners[id]->observe(env::render_view(world, id, opt.task.view, res, res), r, terminal, clock);
      }
      if (judge_now) last_judgment = clock;
      if (step % ckpt_every == 0) checkpoint(step_dir_name(step), step);
    }
    ++episode;
    result.successes += world.success ? 1 : 0;
    nlohmann::json rec = {{"type", "episode"}, {"episode", episode - 1}, {"step", step},
                          {"episode_steps", world.episode_step}, {"success", world.success}, {"wall_s", wall()}};
    for (int id : ids) {
      rec["return"][std::to_string(id)] = returns[id];
      rec["updates"][std::to_string(id)] = runners[id]->stats().updates;
    }
    sink.write(rec, clock);
  }
  for (auto& [id, r] : runners) r->flush();
  checkpoint("final", step);

  result.steps = step;
  result.episodes = episode;
  nlohmann::json summary = {{"type", "summary"}, {"algo", to_string(opt.algo)}, {"task", env::to_string(opt.task.task)},
                            {"seed", opt.seed}, {"steps", step}, {"episodes", episode},
                            {"successes", result.successes}, {"wall_s", wall()}};
  for (auto& [id, r] : runners) {
    const RunnerStats& s = r->stats();
    result.stats[id] = s;
    summary["agents"][std::to_string(id)] = {
        {"updates", s.updates},           {"feedback_events", s.feedback_events}, {"feedback_rounds", s.feedback_rounds},
        {"skipped_empty", s.skipped_empty}, {"periodic_rounds", s.periodic_rounds}, {"periodic_noops", s.periodic_noops},
        {"update_rounds", s.update_rounds}};
  }
  sink.write(summary, clock);
  if (opt.recorder) opt.recorder->flush();
  for (auto& [id, r] : runners) result.learners[id] = r->release_learner();
  return result;
}

EvalResult evaluate(std::map<int, Learner*> learners, const env::TaskConfig& task, int episodes, std::uint64_t seed,
                    const std::map<int, ScriptedPolicy>& scripted) {
  task.validate();
  if (task.task == env::TaskKind::Bowling) episodes = 1;
  if (episodes <= 0) throw std::invalid_argument("evaluate: episodes must be positive");
  const double dt = task.decision_dt();
  const int res = task.resolution;
  EvalResult out;
  Rng rng(mix_seed(seed, 0xE7A1));
  for (int e = 0; e < episodes; ++e) {
    env::WorldState world = env::reset(task, mix_seed(seed, static_cast<std::uint64_t>(e)));
    const std::vector<int> ids = world.controllable_agents();
    std::map<int, FrameStacker> stackers;
    std::map<int, std::unique_ptr<FrameStore>> stores;
    for (int id : ids) {
      if (!learners.count(id)) continue;
      const auto frame = env::render_view(world, id, task.view, res, res);
      const int k = learners[id]->config().frame_stack;
      const auto& enc = learners[id]->config().encoder;
      if (enc.in_channels != frame.channels * k || enc.height != frame.height || enc.width != frame.width) {
        throw std::invalid_argument("checkpoint for agent " + std::to_string(id) + " expects " +
                                    std::to_string(enc.in_channels) + "x" + std::to_string(enc.height) + "x" +
                                    std::to_string(enc.width) + " input, task renders " +
                                    std::to_string(frame.channels * k) + "x" + std::to_string(frame.height) + "x" +
                                    std::to_string(frame.width));
      }
      stores[id] = std::make_unique<FrameStore>(frame.channels, frame.height, frame.width, static_cast<std::size_t>(k) + 1);
      stackers.emplace(id, FrameStacker(k));
      stackers.at(id).reset(stores[id]->push(frame));
    }
    double ret = 0.0;
    while (!world.done) {
      std::map<int, env::ActionCommand> actions;
      for (int id : ids) {
        if (auto it = scripted.find(id); it != scripted.end()) {
          actions[id] = it->second(world, id);
          continue;
        }
        if (!learners.count(id)) {
          std::vector<double> a(static_cast<std::size_t>(task.action_dim()));
          for (double& v : a) v = rng.uniform(-1.0, 1.0);
          actions[id] = {a};
          continue;
        }
        const StackRef& s = stackers.at(id).current();
        const auto obs = assemble(*stores[id], std::span<const StackRef>(&s, 1), 0.0, nullptr);
        actions[id] = {to_doubles(learners[id]->act(obs, false, rng))};
      }
      const env::StepResult sr = env::step(world, actions, dt);
      for (const auto& [id, r] : sr.rewards) {
        if (learners.count(id) || scripted.count(id) || (learners.empty() && scripted.empty())) ret += r;
      }
      for (int id : ids) {
        if (learners.count(id)) stackers.at(id).push(stores[id]->push(env::render_view(world, id, task.view, res, res)));
      }
    }
    ++out.episodes;
    out.successes += world.success ? 1 : 0;
    out.total_pins += world.total_pins;
    out.returns.push_back(ret);
    out.mean_steps += world.episode_step;
  }
  out.success_rate = static_cast<double>(out.successes) / out.episodes;
  double sum = 0.0;
  for (double r : out.returns) sum += r;
  out.mean_return = sum / out.episodes;
  out.mean_steps /= out.episodes;
  return out;
}

std::map<int, std::unique_ptr<Learner>> load_checkpoint_dir(const fs::path& dir) {
  static const std::regex re(R"(agent([0-9]+)\.ckpt)");
  std::map<int, std::unique_ptr<Learner>> out;
  if (!fs::is_directory(dir)) throw std::runtime_error("checkpoint directory " + dir.string() + " does not exist");
  for (const auto& entry : fs::directory_iterator(dir)) {
    std::smatch m;
    const std::string name = entry.path().filename().string();
    if (std::regex_match(name, m, re)) out[std::stoi(m[1])] = load_learner(entry.path());
  }
  if (out.empty()) throw std::runtime_error("no agent checkpoints in " + dir.string());
  return out;
}

}  // namespace crew::learner
