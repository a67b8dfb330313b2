#include "hiddenou/adaptive.hpp"

#include <cctype>
#include <cmath>

#include "hiddenou/error.hpp"
#include "hiddenou/kalman.hpp"

namespace hou {

const char* to_string(AdaptiveVariant v) {
  switch (v) {
    case AdaptiveVariant::SteadyState: return "steady_state";
    case AdaptiveVariant::ClosedFormGamma: return "closed_form_gamma";
    case AdaptiveVariant::FullRiccati: return "full_riccati";
  }
  return "?";
}

AdaptiveVariant variant_from_string(const std::string& s) {
  if (s == "steady_state") return AdaptiveVariant::SteadyState;
  if (s == "closed_form_gamma") return AdaptiveVariant::ClosedFormGamma;
  if (s == "full_riccati") return AdaptiveVariant::FullRiccati;
  throw Error(ErrorKind::kConfig, "unknown adaptive variant '" + s + "'");
}

namespace {
// gamma(theta, 0) for an unconditioned stationary start with m(theta, 0) = 0.
double stationary_prior(const DerivedQuantities& q) { return q.b * q.b / (2.0 * q.a); }
}  // namespace

AdaptiveFilterPath adaptive_filter(const Trajectory& traj, const ModelSpec& spec,
                                   const EstimatorPath& est, AdaptiveVariant variant) {
  const std::size_t n = traj.n_steps;
  if (est.stride != 1 || est.tau_index + est.path.size() != n + 1 ||
      std::abs(est.dt - traj.dt) > 1e-15)
    throw Error(ErrorKind::kAlignment, "estimator path does not cover the trajectory grid");

  const double dt = traj.dt;
  const double sigma = spec.sigma();
  const double s2 = sigma * sigma;
  const Theta pre = est.preliminary.theta_star;
  const std::span<const double> x(traj.x);

  AdaptiveFilterPath out;
  out.variant = variant;
  out.dt = dt;
  out.tau_index = est.tau_index;
  const DerivedQuantities q0 = derived_quantities(spec, pre);
  const InitialValues iv = initial_values_at_tau(x.subspan(0, est.tau_index + 1), dt, spec, pre);
  out.init_value = iv.big_m / q0.f;
  out.m_star.resize(est.path.size());
  out.m_star[0] = out.init_value;

  double g_hat = riccati_closed(q0, stationary_prior(q0), est.tau);
  double m = out.init_value;
  for (std::size_t k = 0; k + 1 < est.path.size(); ++k) {
    const std::size_t i = est.tau_index + k;
    const Theta th = spec.clamp(est.path[k]);
    const DerivedQuantities q = derived_quantities(spec.coeff(th), sigma);
    const double dx = x[i + 1] - x[i];
    switch (variant) {
      case AdaptiveVariant::SteadyState:
        m = m - q.r * m * dt + q.gain * dx;
        break;
      case AdaptiveVariant::ClosedFormGamma: {
        const double g = riccati_closed(q, stationary_prior(q), dt * static_cast<double>(i));
        m = m - q.a * m * dt + g * q.f / s2 * (dx - q.f * m * dt);
        break;
      }
      case AdaptiveVariant::FullRiccati: {
        const double gain = g_hat * q.f / s2;
        m = m - q.a * m * dt + gain * (dx - q.f * m * dt);
        g_hat = std::max(0.0, g_hat + riccati_rhs(q, g_hat) * dt);
        break;
      }
    }
    if (!std::isfinite(m)) throw Error(ErrorKind::kNumericalFailure, "adaptive filter diverged");
    out.m_star[k + 1] = m;
  }
  return out;
}

std::vector<double> stationary_m(std::span<const double> x, double dt, const ModelSpec& spec,
                                 const Theta& theta) {
  const DerivedQuantities q = derived_quantities(spec, theta);
  std::vector<double> m(x.size());
  m[0] = 0.0;
  for (std::size_t i = 0; i + 1 < x.size(); ++i)
    m[i + 1] = m[i] - q.r * m[i] * dt + q.gain * (x[i + 1] - x[i]);
  return m;
}

ErrorConstants error_constants(const DerivedQuantities& q, double fisher) {
  if (!(fisher > 0.0)) throw Error(ErrorKind::kDegenerate, "Fisher information must be positive");
  ErrorConstants c;
  const double ad = q.a_dot.at(0), fd = q.f_dot.at(0), rd = q.r_dot.at(0);
  c.k1 = -(ad + fd * q.gain) * q.sigma / (q.f * std::sqrt(2.0 * q.a * fisher));
  c.k2 = rd * q.sigma / (q.f * std::sqrt(2.0 * q.r * fisher));
  c.r12 = 2.0 * c.k1 * c.k2 * std::sqrt(q.a * q.r) / (q.a + q.r);
  c.s_star_sq = c.k1 * c.k1 + c.k2 * c.k2 + c.r12;
  return c;
}

ErrorConstants error_constants(const ModelSpec& spec, const Theta& theta0) {
  if (spec.dim() != 1) throw Error(ErrorKind::kWrongArity, "error constants for scalar cases");
  return error_constants(derived_quantities(spec, theta0), fisher_scalar(spec, theta0));
}

}  // namespace hou
