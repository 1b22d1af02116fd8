#include "crew/env/task_config.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace crew::env {

std::string to_string(TaskKind t) {
  switch (t) {
    case TaskKind::Bowling: return "bowling";
    case TaskKind::FindTreasure: return "find_treasure";
    case TaskKind::HideSeek1v1: return "hide_seek_1v1";
    case TaskKind::HideSeekNvN: return "hide_seek_nvn";
  }
  return "unknown";
}

std::string to_string(ViewKind v) {
  switch (v) {
    case ViewKind::TopDownFull: return "top_down_full";
    case ViewKind::TopDownAccumulated: return "top_down_accumulated";
    case ViewKind::TopDownEgocentric: return "top_down_egocentric";
  }
  return "unknown";
}

TaskKind parse_task_kind(const std::string& s) {
  for (auto t : {TaskKind::Bowling, TaskKind::FindTreasure, TaskKind::HideSeek1v1, TaskKind::HideSeekNvN}) {
    if (to_string(t) == s) return t;
  }
  throw std::invalid_argument("unknown task '" + s + "'");
}

ViewKind parse_view_kind(const std::string& s) {
  for (auto v : {ViewKind::TopDownFull, ViewKind::TopDownAccumulated, ViewKind::TopDownEgocentric}) {
    if (to_string(v) == s) return v;
  }
  throw std::invalid_argument("unknown view '" + s + "'");
}

int TaskConfig::decision_steps_limit() const {
  return static_cast<int>(std::lround(time_limit_s * decision_hz));
}

int TaskConfig::substeps_per_decision() const {
  return std::max(1, static_cast<int>(std::lround(physics_hz / decision_hz)));
}

void TaskConfig::validate() const {
  auto require = [](bool ok, const char* key, const std::string& why) {
    if (!ok) throw std::invalid_argument(std::string("task config '") + key + "': " + why);
  };
  if (task != TaskKind::Bowling && !maze_text) {
    require(maze_w >= 2 && maze_h >= 2, "maze_w/maze_h", "navigation tasks need at least 2x2 cells");
  }
  require(time_limit_s > 0, "time_limit_s", "must be positive");
  require(decision_hz > 0, "decision_hz", "must be positive");
  require(physics_hz >= decision_hz, "physics_hz", "must be >= decision_hz");
  require(resolution >= 8, "resolution", "must be at least 8 pixels");
  require(braid_fraction >= 0 && braid_fraction <= 1, "braid_fraction", "must lie in [0, 1]");
  require(capture_radius > 0, "capture_radius", "must be positive");
  require(fov_radius > 0, "fov_radius", "must be positive");
  require(n_candidates >= 4, "n_candidates", "must be at least 4");
  require(agent_radius > 0 && agent_radius < 0.5, "agent_radius", "must lie in (0, 0.5)");
  require(crossing_time_s > 0, "crossing_time_s", "must be positive");
  require(min_spawn_separation >= 1, "min_spawn_separation", "must be at least 1");
  if (task == TaskKind::HideSeekNvN) {
    require(n_seekers >= 1 && n_hiders >= 1, "n_seekers/n_hiders", "need at least one of each");
  }
  require(bowling.substep_s > 0, "bowling.substep_s", "must be positive");
}

namespace {

template <typename T>
void read(const nlohmann::json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

}  // namespace

TaskConfig task_config_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw std::invalid_argument("task config must be a JSON object");
  if (!j.contains("task")) throw std::invalid_argument("task config is missing required key 'task'");
  TaskConfig c = default_task_config(parse_task_kind(j.at("task").get<std::string>()));
  read(j, "maze_w", c.maze_w);
  read(j, "maze_h", c.maze_h);
  read(j, "seed", c.seed);
  read(j, "time_limit_s", c.time_limit_s);
  read(j, "decision_hz", c.decision_hz);
  read(j, "physics_hz", c.physics_hz);
  if (j.contains("view")) c.view = parse_view_kind(j.at("view").get<std::string>());
  read(j, "resolution", c.resolution);
  read(j, "braid_fraction", c.braid_fraction);
  read(j, "capture_radius", c.capture_radius);
  read(j, "fov_radius", c.fov_radius);
  read(j, "flee_radius", c.flee_radius);
  read(j, "n_candidates", c.n_candidates);
  read(j, "agent_radius", c.agent_radius);
  read(j, "crossing_time_s", c.crossing_time_s);
  read(j, "egocentric_half_extent", c.egocentric_half_extent);
  read(j, "min_spawn_separation", c.min_spawn_separation);
  read(j, "n_seekers", c.n_seekers);
  read(j, "n_hiders", c.n_hiders);
  if (j.contains("maze")) c.maze_text = j.at("maze").get<std::string>();
  if (j.contains("rewards")) {
    const auto& r = j.at("rewards");
    read(r, "seeker_per_step", c.nvn.seeker_per_step);
    read(r, "seeker_per_catch", c.nvn.seeker_per_catch);
    read(r, "hider_per_survival_step", c.nvn.hider_per_survival_step);
    read(r, "hider_per_caught", c.nvn.hider_per_caught);
    read(r, "team_shared", c.nvn.team_shared);
  }
  if (j.contains("bowling")) {
    const auto& b = j.at("bowling");
    read(b, "lane_length", c.bowling.lane_length);
    read(b, "lane_width", c.bowling.lane_width);
    read(b, "ball_radius", c.bowling.ball_radius);
    read(b, "pin_radius", c.bowling.pin_radius);
    read(b, "pin_spacing", c.bowling.pin_spacing);
    read(b, "head_pin_y", c.bowling.head_pin_y);
    read(b, "ball_speed", c.bowling.ball_speed);
    read(b, "max_curvature", c.bowling.max_curvature);
    read(b, "chain_radius", c.bowling.chain_radius);
    read(b, "substep_s", c.bowling.substep_s);
  }
  c.validate();
  return c;
}

nlohmann::json to_json(const TaskConfig& c) {
  nlohmann::json j = {
      {"task", to_string(c.task)},
      {"maze_w", c.maze_w},
      {"maze_h", c.maze_h},
      {"seed", c.seed},
      {"time_limit_s", c.time_limit_s},
      {"decision_hz", c.decision_hz},
      {"physics_hz", c.physics_hz},
      {"view", to_string(c.view)},
      {"resolution", c.resolution},
      {"braid_fraction", c.braid_fraction},
      {"capture_radius", c.capture_radius},
      {"fov_radius", c.fov_radius},
      {"flee_radius", c.flee_radius},
      {"n_candidates", c.n_candidates},
      {"agent_radius", c.agent_radius},
      {"crossing_time_s", c.crossing_time_s},
      {"egocentric_half_extent", c.egocentric_half_extent},
      {"min_spawn_separation", c.min_spawn_separation},
      {"n_seekers", c.n_seekers},
      {"n_hiders", c.n_hiders},
      {"rewards",
       {{"seeker_per_step", c.nvn.seeker_per_step},
        {"seeker_per_catch", c.nvn.seeker_per_catch},
        {"hider_per_survival_step", c.nvn.hider_per_survival_step},
        {"hider_per_caught", c.nvn.hider_per_caught},
        {"team_shared", c.nvn.team_shared}}},
      {"bowling",
       {{"lane_length", c.bowling.lane_length},
        {"lane_width", c.bowling.lane_width},
        {"ball_radius", c.bowling.ball_radius},
        {"pin_radius", c.bowling.pin_radius},
        {"pin_spacing", c.bowling.pin_spacing},
        {"head_pin_y", c.bowling.head_pin_y},
        {"ball_speed", c.bowling.ball_speed},
        {"max_curvature", c.bowling.max_curvature},
        {"chain_radius", c.bowling.chain_radius},
        {"substep_s", c.bowling.substep_s}}},
  };
  if (c.maze_text) j["maze"] = *c.maze_text;
  return j;
}

TaskConfig load_task_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open task config " + path.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in, nullptr, true, /*ignore_comments=*/true);
  } catch (const nlohmann::json::parse_error& e) {
    throw std::runtime_error("task config " + path.string() + ": " + e.what());
  }
  return task_config_from_json(j);
}

TaskConfig default_task_config(TaskKind task) {
  TaskConfig c;
  c.task = task;
  if (task == TaskKind::Bowling) c.view = ViewKind::TopDownFull;
  if (task == TaskKind::HideSeekNvN) {
    c.n_seekers = 2;
    c.n_hiders = 2;
  }
  return c;
}

}  // namespace crew::env
