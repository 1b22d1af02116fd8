#pragma once

#include <span>
#include <vector>

namespace crew::analysis {

// Linear interpolation between order statistics (Hyndman-Fan type 7).
double quantile(std::span<const double> values, double p);

struct TukeyResult {
  std::vector<double> kept;
  std::vector<std::size_t> kept_index;
  std::vector<std::size_t> outliers;  // indices into the input
  double q1 = 0.0;
  double q3 = 0.0;
  double lower_fence = 0.0;
  double upper_fence = 0.0;
};

// Single pass: drops x > Q3 + 1.5 IQR or x < Q1 - 1.5 IQR. Values on a fence
// are kept. Throws std::invalid_argument for fewer than 4 values.
TukeyResult tukey_filter(std::span<const double> values);

// Mean 0, population standard deviation 1. Throws std::invalid_argument for
// fewer than 2 values or zero variance; `name` is used in the message.
std::vector<double> zscore(std::span<const double> values, const char* name = "column");

struct Regression {
  int n = 0;
  double slope = 0.0;
  double intercept = 0.0;
  double stderr_slope = 0.0;
  double t = 0.0;
  int slope_sign = 0;  // -1, 0, +1
  double p_value = 1.0;  // two-sided, n - 2 degrees of freedom
  double r = 0.0;
};

// Ordinary least squares of y on x. Throws std::invalid_argument for
// mismatched lengths, fewer than 3 pairs or constant x.
Regression linreg_significance(std::span<const double> x, std::span<const double> y);

// Two-sided tail probability of Student's t.
double students_t_two_sided(double t, double dof);

}  // namespace crew::analysis
