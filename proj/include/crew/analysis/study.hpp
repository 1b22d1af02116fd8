#pragma once

#include <map>
#include <string>
#include <vector>

#include "crew/analysis/cognitive.hpp"
#include "crew/recorder/recorder.hpp"

namespace crew::analysis {

// Study inputs gathered from recorded sessions:
//   stream "cognitive":   {"subject": string, "test": string, "trial": CognitiveTrial}
//   stream "performance": {"subject": string, "task": string, "value": number}
// Repeated performance entries for one subject and task are averaged.
struct StudyData {
  std::vector<CognitiveScore> scores;
  std::map<std::string, std::map<std::string, double>> performance;
};

StudyData study_from_sessions(const std::vector<recorder::SessionLog>& sessions);

}  // namespace crew::analysis
