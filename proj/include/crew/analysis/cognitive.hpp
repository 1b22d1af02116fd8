#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace crew::analysis {

enum class CognitiveTest { Eye, Reflex, Theory, Rotation, Fitness, Spatial };

std::string to_string(CognitiveTest t);
CognitiveTest parse_cognitive_test(const std::string& s);
const std::vector<CognitiveTest>& all_cognitive_tests();

// One trial as uploaded by the client. Only the fields of the trial's test
// are meaningful.
struct CognitiveTrial {
  double ball_x = 0.0;  // eye
  double target_x = 0.0;
  double response_time = 0.0;  // reflex, seconds
  bool failed = false;         // reflex: early click or timeout
  std::array<double, 2> predicted{};  // theory
  std::array<double, 2> actual{};
  bool correct = false;  // rotation, fitness, spatial
  bool operator==(const CognitiveTrial&) const = default;
};

nlohmann::json to_json(const CognitiveTrial& t);
CognitiveTrial cognitive_trial_from_json(const nlohmann::json& j);

struct CognitiveScore {
  std::string subject_id;
  CognitiveTest test = CognitiveTest::Eye;
  std::vector<CognitiveTrial> trials;
  std::optional<double> score;  // empty when no trial is valid
  int valid_trials = 0;
};

// eye: -mean |ball_x - target_x|; reflex: -mean response time over trials
// that did not fail; theory: -mean distance between predicted and actual;
// rotation, fitness, spatial: fraction correct.
CognitiveScore score_cognitive(CognitiveTest test, std::vector<CognitiveTrial> trials,
                               std::string subject_id = {});

}  // namespace crew::analysis
