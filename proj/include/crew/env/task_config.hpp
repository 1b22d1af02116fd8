#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include <json.hpp>

namespace crew::env {

enum class TaskKind { Bowling, FindTreasure, HideSeek1v1, HideSeekNvN };
enum class ViewKind { TopDownFull, TopDownAccumulated, TopDownEgocentric };

std::string to_string(TaskKind t);
std::string to_string(ViewKind v);
TaskKind parse_task_kind(const std::string& s);
ViewKind parse_view_kind(const std::string& s);

// Per-event scalars for NvN hide-and-seek. With team_shared, every member of
// a team receives the team's summed reward.
struct NvnRewardTable {
  double seeker_per_step = -1.0;
  double seeker_per_catch = 10.0;
  double hider_per_survival_step = 1.0;
  double hider_per_caught = -10.0;
  bool team_shared = false;
};

// Lane coordinates: x across the lane (0 at center), y down the lane from the
// foul line. Lengths in meters, curvature in 1/m.
struct BowlingParams {
  double lane_length = 18.0;
  double lane_width = 1.1;
  double ball_radius = 0.11;
  double pin_radius = 0.06;
  double pin_spacing = 0.3;
  double head_pin_y = 16.5;
  double ball_speed = 6.0;
  double max_curvature = 0.25;
  double chain_radius = 0.32;
  double substep_s = 0.02;
};

struct TaskConfig {
  TaskKind task = TaskKind::FindTreasure;
  int maze_w = 8;
  int maze_h = 8;
  std::uint64_t seed = 0;
  double time_limit_s = 15.0;
  double decision_hz = 10.0;
  double physics_hz = 50.0;
  ViewKind view = ViewKind::TopDownAccumulated;
  int resolution = 100;
  double braid_fraction = 0.15;
  // Radii in arena cells (one cell = one meter).
  double capture_radius = 0.5;
  double fov_radius = 1.5;
  double flee_radius = 4.0;
  int n_candidates = 16;
  double agent_radius = 0.3;
  // v_max is chosen so the longer arena side is crossed in this many seconds.
  double crossing_time_s = 3.0;
  double egocentric_half_extent = 4.0;
  int min_spawn_separation = 1;
  int n_seekers = 1;
  int n_hiders = 1;
  NvnRewardTable nvn;
  BowlingParams bowling;
  // Optional fixed maze in MazeGrid text format; replaces generation.
  std::optional<std::string> maze_text;

  int decision_steps_limit() const;
  int substeps_per_decision() const;
  double decision_dt() const { return 1.0 / decision_hz; }
  int action_dim() const { return task == TaskKind::Bowling ? 3 : 2; }
  int channels() const { return task == TaskKind::Bowling ? 1 : 3; }
  // Throws std::invalid_argument naming the offending key.
  void validate() const;
};

TaskConfig task_config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const TaskConfig& c);
TaskConfig load_task_config(const std::filesystem::path& path);
TaskConfig default_task_config(TaskKind task);

}  // namespace crew::env
