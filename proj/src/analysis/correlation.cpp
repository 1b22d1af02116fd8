#include "crew/analysis/correlation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>
#include <sstream>
#include <stdexcept>

namespace crew::analysis {

namespace {

struct Column {
  std::vector<std::string> subjects;
  std::vector<double> z;
};

// z-scored, outlier-filtered scores of one test. Empty subjects when excluded.
Column prepare(const std::string& name, std::vector<std::string> subjects, std::vector<double> values,
               CorrelationTable& table) {
  Column c;
  if (values.size() < 3) {
    table.excluded[name] = "fewer than 3 subjects";
    return c;
  }
  if (std::all_of(values.begin(), values.end(), [&](double v) { return v == values[0]; })) {
    table.excluded[name] = "constant scores";
    return c;
  }
  std::vector<double> z = zscore(values, name.c_str());
  std::vector<std::size_t> keep(z.size());
  for (std::size_t i = 0; i < keep.size(); ++i) keep[i] = i;
  if (z.size() >= 4) {
    const TukeyResult t = tukey_filter(z);
    keep = t.kept_index;
    for (std::size_t i : t.outliers) table.outliers[name].push_back(subjects[i]);
  }
  for (std::size_t i : keep) {
    c.subjects.push_back(subjects[i]);
    c.z.push_back(z[i]);
  }
  if (c.z.size() < 3) {
    table.excluded[name] = "fewer than 3 subjects after outlier removal";
    c = {};
  } else if (std::all_of(c.z.begin(), c.z.end(), [&](double v) { return v == c.z[0]; })) {
    table.excluded[name] = "non-outlier subjects tie";
    c = {};
  }
  return c;
}

}  // namespace

std::string stars_for(double p) {
  if (p < 0.01) return "**";
  if (p < 0.05) return "*";
  return "";
}

const CorrelationCell& CorrelationTable::at(const std::string& row, const std::string& column) const {
  for (const auto& c : cells) {
    if (c.row == row && c.column == column) return c;
  }
  throw std::out_of_range("no correlation cell " + row + "/" + column);
}

CorrelationTable correlation_table(const std::vector<CognitiveScore>& scores,
                                   const std::map<std::string, std::map<std::string, double>>& performance) {
  CorrelationTable table;
  std::set<std::string> tasks;
  for (const auto& [id, perf] : performance) {
    for (const auto& [task, v] : perf) tasks.insert(task);
  }
  std::set<std::string> joined;
  for (const auto& s : scores) {
    if (performance.contains(s.subject_id)) joined.insert(s.subject_id);
  }
  if (joined.size() < 3) throw std::invalid_argument("correlation_table needs at least 3 joined subjects");
  table.subjects.assign(joined.begin(), joined.end());

  auto perf_of = [&](const std::string& subject, const std::string& column, double* out) {
    const auto& p = performance.at(subject);
    if (column == "total") {
      double sum = 0.0;
      for (const auto& t : tasks) {
        auto it = p.find(t);
        if (it == p.end()) return false;
        sum += it->second;
      }
      *out = sum;
      return true;
    }
    auto it = p.find(column);
    if (it == p.end()) return false;
    *out = it->second;
    return true;
  };

  table.columns.assign(tasks.begin(), tasks.end());
  table.columns.push_back("total");

  std::map<std::string, std::map<std::string, double>> z_by_subject;  // subject -> test -> z
  std::vector<std::pair<std::string, Column>> rows;
  for (CognitiveTest test : all_cognitive_tests()) {
    const std::string name = to_string(test);
    std::vector<std::string> subjects;
    std::vector<double> values;
    for (const auto& s : scores) {
      if (s.test == test && s.score && joined.contains(s.subject_id)) {
        subjects.push_back(s.subject_id);
        values.push_back(*s.score);
      }
    }
    if (subjects.empty()) continue;
    // Unfiltered z-scores feed the overall row.
    Column c = prepare(name, subjects, values, table);
    if (c.subjects.empty()) continue;
    const auto z_all = zscore(values, name.c_str());
    for (std::size_t i = 0; i < subjects.size(); ++i) z_by_subject[subjects[i]][name] = z_all[i];
    rows.emplace_back(name, std::move(c));
  }
  {
    std::vector<std::string> subjects;
    std::vector<double> values;
    for (const auto& id : table.subjects) {
      auto it = z_by_subject.find(id);
      if (it == z_by_subject.end() || it->second.size() != rows.size() || rows.empty()) continue;
      double sum = 0.0;
      for (const auto& [t, z] : it->second) sum += z;
      subjects.push_back(id);
      values.push_back(sum);
    }
    if (!rows.empty()) {
      Column c = prepare("overall", subjects, values, table);
      if (!c.subjects.empty()) rows.emplace_back("overall", std::move(c));
    }
  }

  for (const auto& [name, col] : rows) {
    table.rows.push_back(name);
    for (const auto& column : table.columns) {
      std::vector<double> x, y;
      CorrelationCell cell;
      cell.row = name;
      cell.column = column;
      for (std::size_t i = 0; i < col.subjects.size(); ++i) {
        double v = 0.0;
        if (!perf_of(col.subjects[i], column, &v)) continue;
        x.push_back(col.z[i]);
        y.push_back(v);
        cell.subjects.push_back(col.subjects[i]);
      }
      if (x.size() >= 3 && std::any_of(x.begin(), x.end(), [&](double v) { return v != x[0]; })) {
        cell.regression = linreg_significance(x, y);
        cell.stars = stars_for(cell.regression.p_value);
      } else {
        cell.regression.n = static_cast<int>(x.size());
      }
      table.cells.push_back(std::move(cell));
    }
  }
  return table;
}

std::string format_grid(const CorrelationTable& t) {
  std::ostringstream os;
  char buf[64];
  std::snprintf(buf, sizeof buf, "%-10s", "");
  os << buf;
  for (const auto& c : t.columns) {
    std::snprintf(buf, sizeof buf, "%14s", c.c_str());
    os << buf;
  }
  os << '\n';
  for (const auto& r : t.rows) {
    std::snprintf(buf, sizeof buf, "%-10s", r.c_str());
    os << buf;
    for (const auto& c : t.columns) {
      const auto& cell = t.at(r, c);
      const int s = cell.regression.slope_sign;
      const std::string mark = std::string(s > 0 ? "+" : (s < 0 ? "-" : "0")) + cell.stars;
      std::snprintf(buf, sizeof buf, "%14s", mark.c_str());
      os << buf;
    }
    os << '\n';
  }
  for (const auto& [test, why] : t.excluded) os << "excluded " << test << ": " << why << '\n';
  for (const auto& [row, ids] : t.outliers) {
    os << "outliers " << row << ":";
    for (const auto& id : ids) os << ' ' << id;
    os << '\n';
  }
  os << "* p < 0.05, ** p < 0.01 (two-sided)\n";
  return os.str();
}

std::string format_regressions(const CorrelationTable& t) {
  std::ostringstream os;
  char buf[160];
  for (const auto& r : t.rows) {
    os << "[" << r << "]\n";
    std::snprintf(buf, sizeof buf, "  %-14s %4s %12s %12s %10s %12s\n", "column", "n", "slope", "intercept", "t", "p");
    os << buf;
    for (const auto& c : t.columns) {
      const auto& g = t.at(r, c).regression;
      std::snprintf(buf, sizeof buf, "  %-14s %4d %12.6g %12.6g %10.4g %12.6g\n", c.c_str(), g.n, g.slope, g.intercept,
                    g.t, g.p_value);
      os << buf;
    }
  }
  return os.str();
}

nlohmann::json to_json(const CorrelationTable& t) {
  nlohmann::json j;
  j["rows"] = t.rows;
  j["columns"] = t.columns;
  j["subjects"] = t.subjects;
  j["excluded"] = t.excluded;
  j["outliers"] = t.outliers;
  auto& cells = j["cells"] = nlohmann::json::array();
  for (const auto& c : t.cells) {
    const auto& g = c.regression;
    cells.push_back({{"row", c.row},
                     {"column", c.column},
                     {"n", g.n},
                     {"slope", g.slope},
                     {"intercept", g.intercept},
                     {"t", std::isfinite(g.t) ? nlohmann::json(g.t) : nlohmann::json(g.t > 0 ? "inf" : "-inf")},
                     {"p_value", g.p_value},
                     {"sign", g.slope_sign},
                     {"stars", c.stars},
                     {"subjects", c.subjects}});
  }
  return j;
}

}  // namespace crew::analysis
