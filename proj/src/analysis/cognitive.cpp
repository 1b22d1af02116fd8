#include "crew/analysis/cognitive.hpp"

#include <cmath>
#include <stdexcept>

namespace crew::analysis {

const std::vector<CognitiveTest>& all_cognitive_tests() {
  static const std::vector<CognitiveTest> all{CognitiveTest::Eye,      CognitiveTest::Reflex,
                                              CognitiveTest::Theory,   CognitiveTest::Rotation,
                                              CognitiveTest::Fitness,  CognitiveTest::Spatial};
  return all;
}

std::string to_string(CognitiveTest t) {
  switch (t) {
    case CognitiveTest::Eye: return "eye";
    case CognitiveTest::Reflex: return "reflex";
    case CognitiveTest::Theory: return "theory";
    case CognitiveTest::Rotation: return "rotation";
    case CognitiveTest::Fitness: return "fitness";
    case CognitiveTest::Spatial: return "spatial";
  }
  return "eye";
}

CognitiveTest parse_cognitive_test(const std::string& s) {
  for (CognitiveTest t : all_cognitive_tests()) {
    if (to_string(t) == s) return t;
  }
  throw std::invalid_argument("unknown cognitive test: " + s);
}

nlohmann::json to_json(const CognitiveTrial& t) {
  return {{"ball_x", t.ball_x},       {"target_x", t.target_x}, {"response_time", t.response_time},
          {"failed", t.failed},       {"predicted", t.predicted}, {"actual", t.actual},
          {"correct", t.correct}};
}

CognitiveTrial cognitive_trial_from_json(const nlohmann::json& j) {
  CognitiveTrial t;
  t.ball_x = j.value("ball_x", 0.0);
  t.target_x = j.value("target_x", 0.0);
  t.response_time = j.value("response_time", 0.0);
  t.failed = j.value("failed", false);
  if (j.contains("predicted")) t.predicted = j.at("predicted").get<std::array<double, 2>>();
  if (j.contains("actual")) t.actual = j.at("actual").get<std::array<double, 2>>();
  t.correct = j.value("correct", false);
  return t;
}

CognitiveScore score_cognitive(CognitiveTest test, std::vector<CognitiveTrial> trials, std::string subject_id) {
  CognitiveScore s;
  s.subject_id = std::move(subject_id);
  s.test = test;
  s.trials = std::move(trials);
  double sum = 0.0;
  int n = 0;
  for (const auto& t : s.trials) {
    switch (test) {
      case CognitiveTest::Eye:
        sum += std::abs(t.ball_x - t.target_x);
        ++n;
        break;
      case CognitiveTest::Reflex:
        if (!t.failed) {
          sum += t.response_time;
          ++n;
        }
        break;
      case CognitiveTest::Theory:
        sum += std::hypot(t.predicted[0] - t.actual[0], t.predicted[1] - t.actual[1]);
        ++n;
        break;
      case CognitiveTest::Rotation:
      case CognitiveTest::Fitness:
      case CognitiveTest::Spatial:
        sum += t.correct ? 1.0 : 0.0;
        ++n;
        break;
    }
  }
  s.valid_trials = n;
  if (n == 0) return s;
  const double mean = sum / n;
  const bool accuracy = test == CognitiveTest::Rotation || test == CognitiveTest::Fitness ||
                        test == CognitiveTest::Spatial;
  s.score = accuracy ? mean : -mean;
  return s;
}

}  // namespace crew::analysis
