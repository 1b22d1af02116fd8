#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>

#include "crew/analysis/correlation.hpp"
#include "crew/analysis/study.hpp"
#include "crew/learner/train.hpp"
#include "crew/net/pipeline.hpp"
#include "crew/procgen/maze.hpp"
#include "log.hpp"

using namespace crew;
namespace fs = std::filesystem;

namespace {

nlohmann::json stats_json(const learner::RunnerStats& s) {
  return {{"steps", s.steps},
          {"updates", s.updates},
          {"feedback_events", s.feedback_events},
          {"feedback_rounds", s.feedback_rounds},
          {"skipped_empty", s.skipped_empty},
          {"periodic_rounds", s.periodic_rounds},
          {"periodic_noops", s.periodic_noops},
          {"update_rounds", s.update_rounds}};
}

nlohmann::json eval_json(const learner::EvalResult& e) {
  return {{"episodes", e.episodes},     {"successes", e.successes}, {"success_rate", e.success_rate},
          {"mean_return", e.mean_return}, {"mean_steps", e.mean_steps}, {"total_pins", e.total_pins}};
}

struct TrainArgs {
  std::string algo = "tamer";
  std::string task;
  std::string budget = "10m";
  bool sim_feedback = false;
  std::uint64_t seed = 0;
  std::string out;
};

nlohmann::json run_train(const TrainArgs& a) {
  learner::TrainOptions opt;
  opt.algo = learner::parse_algo(a.algo);
  opt.task = env::load_task_config(a.task);
  opt.budget_steps = learner::parse_budget(a.budget, opt.task.decision_hz);
  opt.seed = a.seed;
  opt.sim_feedback = a.sim_feedback;
  if (opt.algo == learner::Algo::Tamer && !a.sim_feedback) {
    spdlog::warn("TAMER without --sim-feedback receives no feedback headless and will not update");
  }
  const fs::path out = a.out.empty() ? fs::path("runs") / (a.algo + "_seed" + std::to_string(a.seed)) : fs::path(a.out);
  opt.out_dir = out;
  recorder::Recorder rec(out, {{"kind", "train"}, {"algo", a.algo}, {"task", env::to_json(opt.task)}, {"seed", a.seed}},
                         {});
  opt.recorder = &rec;
  opt.on_record = [](const nlohmann::json& j) {
    if (j.value("type", "") == "checkpoint") spdlog::info("checkpoint {} at step {}", j["name"].get<std::string>(), j["step"].get<long>());
    if (j.value("type", "") == "episode") spdlog::debug("{}", j.dump());
  };
  spdlog::info("training {} on {} for {} steps, seed {}", a.algo, env::to_string(opt.task.task), opt.budget_steps, a.seed);
  const auto r = learner::train_headless(opt);
  nlohmann::json report = {{"steps", r.steps}, {"episodes", r.episodes}, {"successes", r.successes}, {"out", out.string()}};
  for (const auto& [id, s] : r.stats) report["agents"][std::to_string(id)] = stats_json(s);
  std::ofstream(out / "train_report.json") << report.dump(2) << '\n';
  return report;
}

}  // namespace

int main(int argc, char** argv) {
  init_logging();
  CLI::App app{"crew: training, evaluation and analysis tools"};
  app.require_subcommand(1);

  TrainArgs ta;
  auto* train = app.add_subcommand("train", "Headless training run");
  train->add_option("--algo", ta.algo, "tamer | ddpg | sac | heuristic")->check(CLI::IsMember({"tamer", "ddpg", "sac", "heuristic"}));
  train->add_option("--task", ta.task, "Task config file")->required()->check(CLI::ExistingFile);
  train->add_option("--budget", ta.budget, "Steps (6000) or session time (10m, 90s, 1h)");
  train->add_flag("--sim-feedback", ta.sim_feedback, "Simulated trainer feedback");
  train->add_option("--seed", ta.seed);
  train->add_option("--out", ta.out, "Session directory (default runs/<algo>_seed<n>)");

  std::string ckpt, eval_task;
  int episodes = learner::kNavigationEvalEpisodes;
  std::uint64_t eval_seed = 0;
  auto* eval = app.add_subcommand("eval", "Evaluate a checkpoint directory");
  eval->add_option("--ckpt", ckpt, "Checkpoint directory")->required()->check(CLI::ExistingDirectory);
  eval->add_option("--task", eval_task, "Task config file")->required()->check(CLI::ExistingFile);
  eval->add_option("--episodes", episodes)->check(CLI::PositiveNumber);
  eval->add_option("--seed", eval_seed);

  std::vector<std::string> sessions;
  std::string report_path;
  auto* stats = app.add_subcommand("stats", "Cognitive-test correlation tables");
  stats->add_option("--session", sessions, "Session directory (repeatable)")->required()->check(CLI::ExistingDirectory);
  stats->add_option("--report", report_path, "Machine-readable report (default <first session>/stats.json)");

  std::string export_session, export_out;
  auto* exp = app.add_subcommand("export", "Write one TSV table per stream");
  exp->add_option("--session", export_session)->required()->check(CLI::ExistingDirectory);
  exp->add_option("--out", export_out)->required();

  std::string manifest;
  bool status_only = false;
  auto* pipe = app.add_subcommand("pipeline", "Run an experiment pipeline from its resume cursor");
  pipe->add_option("--manifest", manifest)->required()->check(CLI::ExistingFile);
  pipe->add_flag("--status", status_only, "Print progress without running");

  int maze_w = 8, maze_h = 8;
  std::uint64_t maze_seed = 0;
  double braid = 0.15;
  auto* maze = app.add_subcommand("maze", "Print a generated maze");
  maze->add_option("--width", maze_w)->check(CLI::PositiveNumber);
  maze->add_option("--height", maze_h)->check(CLI::PositiveNumber);
  maze->add_option("--seed", maze_seed);
  maze->add_option("--braid", braid)->check(CLI::Range(0.0, 1.0));

  CLI11_PARSE(app, argc, argv);

  try {
    if (*train) {
      std::cout << run_train(ta).dump(2) << '\n';
    } else if (*eval) {
      const auto task = env::load_task_config(eval_task);
      auto owned = learner::load_checkpoint_dir(ckpt);
      std::map<int, learner::Learner*> learners;
      for (auto& [id, l] : owned) learners[id] = l.get();
      const auto r = learner::evaluate(learners, task, episodes, eval_seed);
      std::cout << eval_json(r).dump(2) << '\n';
    } else if (*stats) {
      std::vector<recorder::SessionLog> logs;
      for (const auto& s : sessions) logs.push_back(recorder::load_session(s));
      const auto study = analysis::study_from_sessions(logs);
      const auto table = analysis::correlation_table(study.scores, study.performance);
      std::cout << analysis::format_grid(table) << '\n' << analysis::format_regressions(table);
      const fs::path out = report_path.empty() ? fs::path(sessions.front()) / "stats.json" : fs::path(report_path);
      std::ofstream(out) << analysis::to_json(table).dump(2) << '\n';
      spdlog::info("report written to {}", out.string());
    } else if (*exp) {
      for (const auto& p : recorder::export_tsv(recorder::load_session(export_session), export_out)) {
        std::cout << p.string() << '\n';
      }
    } else if (*pipe) {
      net::Pipeline p = net::Pipeline::load(manifest);
      std::cout << "step " << p.cursor() << " of " << p.steps().size() << '\n';
      if (status_only) return 0;
      p.run([&](const net::PipelineStep& s) {
        spdlog::info("step {}: {} {}", p.cursor(), net::to_string(s.kind), s.name);
        switch (s.kind) {
          case net::StepKind::TaskSession: {
            TrainArgs a;
            a.algo = s.params.value("algo", "tamer");
            a.task = (fs::path(manifest).parent_path() / s.params.at("task").get<std::string>()).string();
            a.budget = s.params.value("budget", "10m");
            a.sim_feedback = s.params.value("sim_feedback", true);
            a.seed = s.params.value("seed", std::uint64_t{0});
            a.out = s.params.value("out", "");
            run_train(a);
            break;
          }
          case net::StepKind::Media:
          case net::StepKind::CognitiveTest:
            // Presented by the browser client; headless runs only advance the cursor.
            spdlog::info("{} '{}' needs a participant client; marked complete", net::to_string(s.kind), s.name);
            break;
        }
      });
      std::cout << "pipeline finished\n";
    } else if (*maze) {
      std::cout << procgen::generate_maze(maze_w, maze_h, maze_seed, braid).serialize();
    }
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return 1;
  }
  return 0;
}
