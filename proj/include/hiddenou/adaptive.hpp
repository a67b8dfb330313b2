#pragma once

#include <string>
#include <vector>

#include "hiddenou/onestep.hpp"

namespace hou {

enum class AdaptiveVariant { SteadyState, ClosedFormGamma, FullRiccati };

const char* to_string(AdaptiveVariant v);
AdaptiveVariant variant_from_string(const std::string& s);

struct AdaptiveFilterPath {
  AdaptiveVariant variant = AdaptiveVariant::SteadyState;
  double dt = 0.0;
  std::size_t tau_index = 0;
  std::vector<double> m_star;  // m_star[k] at grid index tau_index + k
  double init_value = 0.0;
};

// Filter driven by the one-step path. The path must be emitted at every
// grid step (stride 1). Path values are projected onto the box before use.
AdaptiveFilterPath adaptive_filter(const Trajectory& traj, const ModelSpec& spec,
                                   const EstimatorPath& est,
                                   AdaptiveVariant variant = AdaptiveVariant::SteadyState);

// Known-theta steady-state filter m(theta, t) from m(theta, 0) = 0.
std::vector<double> stationary_m(std::span<const double> x, double dt, const ModelSpec& spec,
                                 const Theta& theta);

struct ErrorConstants {
  double k1 = 0.0, k2 = 0.0, r12 = 0.0;
  double s_star_sq = 0.0;
  double limit_eq70(double v) const { return (k1 * k1 + k2 * k2 + 2.0 * r12) / v; }
};

ErrorConstants error_constants(const ModelSpec& spec, const Theta& theta0);
// Same constants from raw derivative inputs (for structural checks).
ErrorConstants error_constants(const DerivedQuantities& dq, double fisher);

}  // namespace hou
