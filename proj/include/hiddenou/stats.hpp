#pragma once

#include <vector>

namespace hou {

double mean(const std::vector<double>& v);
// Unbiased sample variance.
double variance(const std::vector<double>& v);
double covariance(const std::vector<double>& a, const std::vector<double>& b);
double correlation(const std::vector<double>& a, const std::vector<double>& b);
// Standard error of the sample variance under normality: s^2 sqrt(2/(n-1)).
double variance_se(const std::vector<double>& v);

double normal_cdf(double x);

struct NormalityResult {
  std::size_t n = 0;
  double mean = 0.0, variance = 0.0;
  double skewness = 0.0, kurtosis = 0.0;  // standardized 3rd/4th moments
  double ks = 0.0;                        // sup |F_n - N(0, target)|
  double ks_critical_1pct = 0.0;          // 1.628 / sqrt(n)
};

// Kolmogorov-Smirnov distance to N(0, target_variance) plus moment diagnostics.
NormalityResult normality_check(const std::vector<double>& samples, double target_variance);

}  // namespace hou
