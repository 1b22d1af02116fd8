#pragma once

#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "crew/analysis/cognitive.hpp"
#include "crew/analysis/stats.hpp"

namespace crew::analysis {

struct CorrelationCell {
  std::string row;
  std::string column;
  Regression regression;
  std::string stars;  // "**" p < 0.01, "*" p < 0.05
  std::vector<std::string> subjects;
};

struct CorrelationTable {
  std::vector<std::string> rows;     // included tests, then "overall"
  std::vector<std::string> columns;  // tasks, then "total"
  std::vector<CorrelationCell> cells;  // row-major
  std::map<std::string, std::string> excluded;  // test -> reason
  std::map<std::string, std::vector<std::string>> outliers;  // row -> subject ids
  std::vector<std::string> subjects;

  const CorrelationCell& at(const std::string& row, const std::string& column) const;
};

std::string stars_for(double p);

// Per test: z-score over subjects, Tukey-filter the z-scores, then regress
// each task score (and their sum) on the kept z-scores. A test whose kept
// scores are all equal is excluded. The "overall" row uses each subject's sum
// of z-scores over the included tests. Throws std::invalid_argument when
// fewer than 3 subjects appear in both inputs.
CorrelationTable correlation_table(const std::vector<CognitiveScore>& scores,
                                   const std::map<std::string, std::map<std::string, double>>& performance);

std::string format_grid(const CorrelationTable& t);
std::string format_regressions(const CorrelationTable& t);
nlohmann::json to_json(const CorrelationTable& t);

}  // namespace crew::analysis
