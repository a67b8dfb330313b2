#include "hiddenou/kalman.hpp"

#include <cmath>

#include "hiddenou/error.hpp"

namespace hou {

double riccati_closed(const DerivedQuantities& dq, double f, double sigma, double gamma0,
                      double t) {
  if (gamma0 < 0.0) throw Error(ErrorKind::kDomain, "gamma0 must be nonnegative");
  if (t < 0.0) throw Error(ErrorKind::kDomain, "t must be nonnegative");
  const double d = gamma0 - dq.gamma_star;
  if (d == 0.0) return dq.gamma_star;
  const double c = f * f / (2.0 * dq.r * sigma * sigma);
  const double e = std::exp(-2.0 * dq.r * t);
  // gamma - gamma* = e d / (1 + d c (1 - e)), same as the reciprocal form
  return dq.gamma_star + e * d / (1.0 + d * c * -std::expm1(-2.0 * dq.r * t));
}

double riccati_closed(const DerivedQuantities& dq, double gamma0, double t) {
  return riccati_closed(dq, dq.f, dq.sigma, gamma0, t);
}

double riccati_rhs(const DerivedQuantities& dq, double g) {
  return -2.0 * dq.a * g - g * g * dq.f * dq.f / (dq.sigma * dq.sigma) + dq.b * dq.b;
}

FilterPath kb_filter(std::span<const double> x, double dt, const ModelSpec& spec,
                     const Theta& theta, double m0, double gamma0) {
  if (x.empty()) throw Error(ErrorKind::kInsufficientData, "empty observation path");
  const DerivedQuantities q = derived_quantities(spec, theta);
  const double s2 = q.sigma * q.sigma;
  FilterPath p;
  p.theta = theta;
  p.dt = dt;
  p.m0 = m0;
  p.gamma0 = gamma0;
  p.m.resize(x.size());
  p.gamma.resize(x.size());
  p.m[0] = m0;
  p.gamma[0] = riccati_closed(q, gamma0, 0.0);
  for (std::size_t i = 0; i + 1 < x.size(); ++i) {
    const double g = p.gamma[i];
    const double dx = x[i + 1] - x[i];
    p.m[i + 1] = p.m[i] - q.a * p.m[i] * dt + g * q.f / s2 * (dx - q.f * p.m[i] * dt);
    p.gamma[i + 1] = riccati_closed(q, gamma0, dt * static_cast<double>(i + 1));
  }
  return p;
}

StationaryFilterPath stationary_filter_with_derivative(std::span<const double> x, double dt,
                                                       const ModelSpec& spec, const Theta& theta,
                                                       double init_m,
                                                       std::vector<double> init_m_dot) {
  if (x.empty()) throw Error(ErrorKind::kInsufficientData, "empty observation path");
  const DerivedQuantities q = derived_quantities(spec, theta);
  const std::size_t d = q.r_dot.size();
  if (init_m_dot.empty()) init_m_dot.assign(d, 0.0);
  if (init_m_dot.size() != d) throw Error(ErrorKind::kWrongArity, "initial derivative size");

  StationaryFilterPath p;
  p.theta = theta;
  p.dt = dt;
  p.init_m = init_m;
  p.init_m_dot = init_m_dot;
  p.big_m.resize(x.size());
  p.big_m_dot.assign(d, std::vector<double>(x.size()));
  p.big_m[0] = init_m;
  for (std::size_t j = 0; j < d; ++j) p.big_m_dot[j][0] = init_m_dot[j];
  for (std::size_t i = 0; i + 1 < x.size(); ++i) {
    const double dx = x[i + 1] - x[i];
    const double m = p.big_m[i];
    p.big_m[i + 1] = m - q.r * m * dt + q.big_gamma * dx;
    for (std::size_t j = 0; j < d; ++j) {
      const double md = p.big_m_dot[j][i];
      p.big_m_dot[j][i + 1] = md - q.r * md * dt - q.r_dot[j] * m * dt + q.big_gamma_dot[j] * dx;
    }
  }
  return p;
}

InitialValues initial_values_at_tau(std::span<const double> x, double dt, const ModelSpec& spec,
                                    const Theta& theta, double m0, std::vector<double> m_dot0) {
  if (x.size() < 2)
    throw Error(ErrorKind::kInsufficientData, "learning-interval path is missing");
  const DerivedQuantities q = derived_quantities(spec, theta);
  const std::size_t d = q.r_dot.size();
  if (m_dot0.empty()) m_dot0.assign(d, 0.0);
  if (m_dot0.size() != d) throw Error(ErrorKind::kWrongArity, "initial derivative size");

  const std::size_t n = x.size() - 1;
  const double tau = dt * static_cast<double>(n);
  // J = int_0^tau e^{-r(tau-s)} X_s ds, J2 = int_0^tau (tau-s) e^{-r(tau-s)} X_s ds
  double j1 = 0.0, j2 = 0.0;
  for (std::size_t i = 0; i <= n; ++i) {
    const double lag = dt * static_cast<double>(n - i);
    const double w = (i == 0 || i == n) ? 0.5 : 1.0;
    const double k = std::exp(-q.r * lag) * x[i] * w;
    j1 += k;
    j2 += lag * k;
  }
  j1 *= dt;
  j2 *= dt;
  const double decay = std::exp(-q.r * tau);
  const double x0 = x[0], xt = x[n];

  InitialValues out;
  out.big_m = m0 * decay + q.big_gamma * (xt - x0 * decay - q.r * j1);
  out.big_m_dot.resize(d);
  for (std::size_t j = 0; j < d; ++j) {
    const double rd = q.r_dot[j], gd = q.big_gamma_dot[j];
    out.big_m_dot[j] = (m_dot0[j] - m0 * rd * tau) * decay + gd * (xt - x0 * decay - q.r * j1) +
                       q.big_gamma * rd * (x0 * tau * decay - j1 + q.r * j2);
  }
  return out;
}

}  // namespace hou
