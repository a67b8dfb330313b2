#pragma once

#include <string>
#include <vector>

#include "hiddenou/model.hpp"

namespace hou {

struct MomentStats {
  double r1 = 0.0;  // (1/T) sum dX_k^2
  double r2 = 0.0;  // (1/T) sum dX_k dX_{k-1}
  std::size_t t_count = 0;
};

MomentStats r_statistics(const std::vector<double>& increments);

struct MmeResult {
  Theta theta_star;
  bool clamped = false;
  double residual = 0.0;
  std::string diagnostic;
};

// Scalar cases F, A, B and GEN (grid scan + golden section).
MmeResult mme_scalar(const ModelSpec& spec, const MomentStats& stats);
// (a, f) with b known; box = {a-range, f-range}.
MmeResult mme_af(const MomentStats& stats, double b, double sigma,
                 const std::vector<Interval>& box);
// (a, b) with f known; box = {a-range, b-range}.
MmeResult mme_ab(const MomentStats& stats, double f, double sigma,
                 const std::vector<Interval>& box);
// Dispatch on the case of spec.
MmeResult mme(const ModelSpec& spec, const MomentStats& stats);

// Limit variance D^2 of sqrt(T)(theta* - theta) for cases F, A, B.
double mme_asymptotic_variance(const ModelSpec& spec, const Theta& theta);

}  // namespace hou
