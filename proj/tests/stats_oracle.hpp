#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

// Extended-precision reference formulas, written independently of the
// analysis library.
namespace crew::testing {

// Fixed datasets with reference values from an independent statistics package.
inline const std::vector<double> kX{0.0342, 1.3597, 1.2247, -0.5103, -0.298, -0.5274, 0.5697, -0.0561, 0.7469, -1.8473, 1.5665, -0.0964};
inline const std::vector<double> kY{0.7043, 0.8152, 0.4782, 0.1059, 0.6159, -0.5717, 0.246, 0.6464, -0.3475, -2.8075, 1.4915, -0.738};
inline const std::vector<double> kOutlierSet{0.1105, 0.0638, -1.2251, 5.5, 1.3588, -1.5471, 0.8594, 0.1194,
                                      -0.6415, -4.2, 0.7623, -1.1993, 0.0745, 0.5767, -0.1888};
inline constexpr double kRefSlope = 0.879926833641925;
inline constexpr double kRefIntercept = -0.10561645891959484;
inline constexpr double kRefP = 0.003039773164587053;
inline constexpr double kRefQ1 = -0.9204;
inline constexpr double kRefQ3 = 0.6695;

inline long double oracle_quantile(std::vector<double> v, long double p) {
  const long double pos = p * static_cast<long double>(v.size() - 1);
  const auto k = static_cast<std::size_t>(pos);
  std::nth_element(v.begin(), v.begin() + static_cast<long>(k), v.end());
  const long double lo = v[k];
  if (k + 1 >= v.size()) return lo;
  const long double hi = *std::min_element(v.begin() + static_cast<long>(k) + 1, v.end());
  return lo + (pos - static_cast<long double>(k)) * (hi - lo);
}

// Continued fraction for the regularized incomplete beta function.
inline long double oracle_betacf(long double a, long double b, long double x) {
  const long double tiny = 1e-300L;
  long double c = 1.0L, d = 1.0L - (a + b) * x / (a + 1.0L);
  if (std::fabs(d) < tiny) d = tiny;
  d = 1.0L / d;
  long double h = d;
  for (int m = 1; m < 10000; ++m) {
    const long double m2 = 2.0L * m;
    long double aa = m * (b - m) * x / ((a + m2 - 1.0L) * (a + m2));
    d = 1.0L + aa * d;
    if (std::fabs(d) < tiny) d = tiny;
    c = 1.0L + aa / c;
    if (std::fabs(c) < tiny) c = tiny;
    d = 1.0L / d;
    h *= d * c;
    aa = -(a + m) * (a + b + m) * x / ((a + m2) * (a + m2 + 1.0L));
    d = 1.0L + aa * d;
    if (std::fabs(d) < tiny) d = tiny;
    c = 1.0L + aa / c;
    if (std::fabs(c) < tiny) c = tiny;
    d = 1.0L / d;
    const long double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0L) < 1e-19L) break;
  }
  return h;
}

inline long double oracle_incbeta(long double a, long double b, long double x) {
  if (x <= 0.0L) return 0.0L;
  if (x >= 1.0L) return 1.0L;
  const long double lbt = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) + a * std::log(x) + b * std::log1p(-x);
  if (x < (a + 1.0L) / (a + b + 2.0L)) return std::exp(lbt) * oracle_betacf(a, b, x) / a;
  return 1.0L - std::exp(lbt) * oracle_betacf(b, a, 1.0L - x) / b;
}

struct OracleFit {
  long double slope = 0, intercept = 0, t = 0, p = 1;
};

inline OracleFit oracle_ols(const std::vector<double>& x, const std::vector<double>& y) {
  const long double n = static_cast<long double>(x.size());
  long double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
    sxx += static_cast<long double>(x[i]) * x[i];
    sxy += static_cast<long double>(x[i]) * y[i];
  }
  OracleFit f;
  const long double den = n * sxx - sx * sx;
  f.slope = (n * sxy - sx * sy) / den;
  f.intercept = (sy - f.slope * sx) / n;
  long double sse = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const long double e = y[i] - f.intercept - f.slope * x[i];
    sse += e * e;
  }
  const long double dof = n - 2.0L;
  const long double se = std::sqrt(sse / dof / (sxx - sx * sx / n));
  f.t = f.slope / se;
  f.p = oracle_incbeta(dof / 2.0L, 0.5L, dof / (dof + f.t * f.t));
  return f;
}

}  // namespace crew::testing
