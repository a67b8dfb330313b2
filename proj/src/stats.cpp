#include "hiddenou/stats.hpp"

#include <algorithm>
#include <cmath>

#include "hiddenou/error.hpp"

namespace hou {

double mean(const std::vector<double>& v) {
  if (v.empty()) throw Error(ErrorKind::kInsufficientData, "mean of empty sample");
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

double covariance(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size() || a.size() < 2)
    throw Error(ErrorKind::kInsufficientData, "covariance needs two equal samples of size >= 2");
  const double ma = mean(a), mb = mean(b);
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - ma) * (b[i] - mb);
  return s / static_cast<double>(a.size() - 1);
}

double variance(const std::vector<double>& v) { return covariance(v, v); }

double correlation(const std::vector<double>& a, const std::vector<double>& b) {
  return covariance(a, b) / std::sqrt(variance(a) * variance(b));
}

double variance_se(const std::vector<double>& v) {
  return variance(v) * std::sqrt(2.0 / static_cast<double>(v.size() - 1));
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

NormalityResult normality_check(const std::vector<double>& samples, double target_variance) {
  if (samples.size() < 100)
    throw Error(ErrorKind::kInsufficientData, "normality check needs >= 100 samples");
  if (!(target_variance > 0.0)) throw Error(ErrorKind::kDomain, "target variance must be > 0");
  NormalityResult r;
  r.n = samples.size();
  const double n = static_cast<double>(r.n);
  r.mean = mean(samples);
  double m2 = 0.0, m3 = 0.0, m4 = 0.0;
  for (double x : samples) {
    const double d = x - r.mean;
    m2 += d * d;
    m3 += d * d * d;
    m4 += d * d * d * d;
  }
  m2 /= n;
  m3 /= n;
  m4 /= n;
  if (!(m2 > 0.0)) throw Error(ErrorKind::kDegenerate, "sample has zero variance");
  r.variance = m2 * n / (n - 1.0);
  r.skewness = m3 / std::pow(m2, 1.5);
  r.kurtosis = m4 / (m2 * m2);

  std::vector<double> s = samples;
  std::sort(s.begin(), s.end());
  const double sd = std::sqrt(target_variance);
  double d = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const double f = normal_cdf(s[i] / sd);
    d = std::max({d, static_cast<double>(i + 1) / n - f, f - static_cast<double>(i) / n});
  }
  r.ks = d;
  r.ks_critical_1pct = 1.628 / std::sqrt(n);
  return r;
}

}  // namespace hou
