#pragma once

#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace crew::net {

enum class StepKind { Media, CognitiveTest, TaskSession };
std::string to_string(StepKind k);
StepKind parse_step_kind(const std::string& s);

struct PipelineStep {
  StepKind kind = StepKind::Media;
  std::string name;
  nlohmann::json params = nlohmann::json::object();
};

// Ordered experiment steps plus a resume cursor (index of the next step to
// run). File form:
//   {"steps": [{"kind": "media" | "cognitive_test" | "task_session",
//               "name": string, "params": object}], "cursor": int}
class Pipeline {
 public:
  static Pipeline load(const std::filesystem::path& file);
  Pipeline(std::filesystem::path file, std::vector<PipelineStep> steps, std::size_t cursor = 0);

  const std::vector<PipelineStep>& steps() const { return steps_; }
  std::size_t cursor() const { return cursor_; }
  bool finished() const { return cursor_ >= steps_.size(); }
  std::optional<PipelineStep> next() const;
  // Marks the current step complete and persists the cursor atomically.
  void complete();
  void save() const;

  // Runs the remaining steps in order, persisting after each. A throwing
  // step leaves the cursor on it. Returns the number of steps run.
  std::size_t run(const std::function<void(const PipelineStep&)>& fn);

 private:
  std::filesystem::path file_;
  std::vector<PipelineStep> steps_;
  std::size_t cursor_ = 0;
};

nlohmann::json to_json(const PipelineStep& s);
PipelineStep step_from_json(const nlohmann::json& j);

}  // namespace crew::net
