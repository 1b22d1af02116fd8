#include "crew/net/pipeline.hpp"

#include <fstream>
#include <stdexcept>

namespace crew::net {

std::string to_string(StepKind k) {
  switch (k) {
    case StepKind::Media: return "media";
    case StepKind::CognitiveTest: return "cognitive_test";
    case StepKind::TaskSession: return "task_session";
  }
  return "media";
}

StepKind parse_step_kind(const std::string& s) {
  if (s == "media") return StepKind::Media;
  if (s == "cognitive_test") return StepKind::CognitiveTest;
  if (s == "task_session") return StepKind::TaskSession;
  throw std::invalid_argument("unknown pipeline step kind '" + s + "'");
}

nlohmann::json to_json(const PipelineStep& s) {
  return {{"kind", to_string(s.kind)}, {"name", s.name}, {"params", s.params}};
}

PipelineStep step_from_json(const nlohmann::json& j) {
  PipelineStep s;
  s.kind = parse_step_kind(j.at("kind").get<std::string>());
  s.name = j.value("name", std::string{});
  s.params = j.value("params", nlohmann::json::object());
  return s;
}

Pipeline::Pipeline(std::filesystem::path file, std::vector<PipelineStep> steps, std::size_t cursor)
    : file_(std::move(file)), steps_(std::move(steps)), cursor_(cursor) {
  if (cursor_ > steps_.size()) throw std::invalid_argument("pipeline cursor past the last step");
}

Pipeline Pipeline::load(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw std::runtime_error("cannot open pipeline " + file.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error("pipeline " + file.string() + ": " + e.what());
  }
  std::vector<PipelineStep> steps;
  for (const auto& s : j.at("steps")) steps.push_back(step_from_json(s));
  return Pipeline(file, std::move(steps), j.value("cursor", std::size_t{0}));
}

std::optional<PipelineStep> Pipeline::next() const {
  if (finished()) return std::nullopt;
  return steps_[cursor_];
}

void Pipeline::complete() {
  if (finished()) throw std::logic_error("pipeline already finished");
  ++cursor_;
  save();
}

void Pipeline::save() const {
  nlohmann::json j;
  j["steps"] = nlohmann::json::array();
  for (const auto& s : steps_) j["steps"].push_back(to_json(s));
  j["cursor"] = cursor_;
  const auto tmp = std::filesystem::path(file_.string() + ".tmp");
  {
    std::ofstream out(tmp, std::ios::trunc);
    out << j.dump(2) << '\n';
    out.flush();
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
  }
  std::filesystem::rename(tmp, file_);
}

std::size_t Pipeline::run(const std::function<void(const PipelineStep&)>& fn) {
  std::size_t n = 0;
  while (!finished()) {
    fn(steps_[cursor_]);
    complete();
    ++n;
  }
  return n;
}

}  // namespace crew::net
