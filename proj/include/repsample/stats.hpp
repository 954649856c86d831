#pragma once

// Summary statistics and the hypothesis tests used to compare sampling
// strategies.

#include <cstddef>
#include <span>
#include <vector>

namespace repsample {

double mean(std::span<const double> x);
// Sample (n - 1) standard deviation; 0 for fewer than two values.
double sample_sd(std::span<const double> x);

struct TTestResult {
  double t = 0.0;
  double p_value = 1.0;
  double df = 0.0;
  double mean_diff = 0.0;
};

/// Two-sided paired t-test on a[i] - b[i]. When the differences have zero
/// variance: p = 1 if their mean is zero, p = 0 otherwise (t = 0 or +-inf).
TTestResult paired_t_test(std::span<const double> a, std::span<const double> b);

/// Two-sided Welch (unequal variance) t-test of mean(a) == mean(b). Same
/// zero-variance conventions as paired_t_test.
TTestResult welch_t_test(std::span<const double> a, std::span<const double> b);

/// Benjamini-Hochberg step-up adjustment. Output is in input order,
/// monotone in the sorted p order, clipped at 1, and >= the raw values.
std::vector<double> bh_adjust(std::span<const double> p_values);

}  // namespace repsample
