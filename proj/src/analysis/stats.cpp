#include "crew/analysis/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

#include <boost/math/distributions/students_t.hpp>

namespace crew::analysis {

double quantile(std::span<const double> values, double p) {
  if (values.empty()) throw std::invalid_argument("quantile of an empty sample");
  std::vector<double> s(values.begin(), values.end());
  std::sort(s.begin(), s.end());
  const double h = (static_cast<double>(s.size()) - 1.0) * p;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, s.size() - 1);
  return s[lo] + (h - static_cast<double>(lo)) * (s[hi] - s[lo]);
}

TukeyResult tukey_filter(std::span<const double> values) {
  if (values.size() < 4) throw std::invalid_argument("tukey_filter needs at least 4 values");
  TukeyResult r;
  r.q1 = quantile(values, 0.25);
  r.q3 = quantile(values, 0.75);
  const double iqr = r.q3 - r.q1;
  r.lower_fence = r.q1 - 1.5 * iqr;
  r.upper_fence = r.q3 + 1.5 * iqr;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (values[i] > r.upper_fence || values[i] < r.lower_fence) {
      r.outliers.push_back(i);
    } else {
      r.kept.push_back(values[i]);
      r.kept_index.push_back(i);
    }
  }
  return r;
}

std::vector<double> zscore(std::span<const double> values, const char* name) {
  if (values.size() < 2) throw std::invalid_argument(std::string("zscore needs at least 2 values: ") + name);
  const double n = static_cast<double>(values.size());
  const double mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  const double sd = std::sqrt(ss / n);
  if (!(sd > 0.0)) throw std::invalid_argument(std::string("zero variance in ") + name);
  std::vector<double> out;
  out.reserve(values.size());
  for (double v : values) out.push_back((v - mean) / sd);
  return out;
}

double students_t_two_sided(double t, double dof) {
  if (std::isinf(t)) return 0.0;
  boost::math::students_t dist(dof);
  return 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(t)));
}

Regression linreg_significance(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw std::invalid_argument("linreg: x and y differ in length");
  if (x.size() < 3) throw std::invalid_argument("linreg needs at least 3 pairs");
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (!(sxx > 0.0)) throw std::invalid_argument("linreg: constant x");
  Regression r;
  r.n = static_cast<int>(x.size());
  r.slope = sxy / sxx;
  r.intercept = my - r.slope * mx;
  double sse = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double e = y[i] - (r.intercept + r.slope * x[i]);
    sse += e * e;
  }
  const double dof = n - 2.0;
  r.stderr_slope = std::sqrt(sse / dof / sxx);
  r.r = syy > 0.0 ? sxy / std::sqrt(sxx * syy) : 0.0;
  // Treat residuals at rounding level as an exact fit.
  const bool exact = sse <= 1e-24 * std::max(syy, 1e-300) || r.stderr_slope == 0.0;
  const bool y_const = std::all_of(y.begin(), y.end(), [&](double v) { return v == y[0]; });
  if (y_const || r.slope == 0.0) {
    r.slope = 0.0;
    r.t = 0.0;
    r.p_value = 1.0;
  } else if (exact) {
    r.t = std::copysign(INFINITY, r.slope);
    r.p_value = 0.0;
  } else {
    r.t = r.slope / r.stderr_slope;
    r.p_value = students_t_two_sided(r.t, dof);
  }
  r.slope_sign = r.slope > 0.0 ? 1 : (r.slope < 0.0 ? -1 : 0);
  return r;
}

}  // namespace crew::analysis
