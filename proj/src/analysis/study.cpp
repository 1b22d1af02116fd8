#include "crew/analysis/study.hpp"

#include <stdexcept>

namespace crew::analysis {

StudyData study_from_sessions(const std::vector<recorder::SessionLog>& sessions) {
  std::map<std::pair<std::string, CognitiveTest>, std::vector<CognitiveTrial>> trials;
  std::map<std::string, std::map<std::string, std::pair<double, int>>> sums;
  for (const auto& s : sessions) {
    if (auto it = s.streams.find("cognitive"); it != s.streams.end()) {
      for (const auto& x : it->second.samples) {
        const auto& p = x.payload;
        trials[{p.at("subject").get<std::string>(), parse_cognitive_test(p.at("test").get<std::string>())}].push_back(
            cognitive_trial_from_json(p.at("trial")));
      }
    }
    if (auto it = s.streams.find("performance"); it != s.streams.end()) {
      for (const auto& x : it->second.samples) {
        const auto& p = x.payload;
        auto& acc = sums[p.at("subject").get<std::string>()][p.at("task").get<std::string>()];
        acc.first += p.at("value").get<double>();
        ++acc.second;
      }
    }
  }
  StudyData out;
  for (auto& [key, list] : trials) out.scores.push_back(score_cognitive(key.second, std::move(list), key.first));
  for (const auto& [subject, tasks] : sums) {
    for (const auto& [task, acc] : tasks) out.performance[subject][task] = acc.first / acc.second;
  }
  return out;
}

}  // namespace crew::analysis
