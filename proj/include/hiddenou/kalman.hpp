#pragma once

#include <span>
#include <vector>

#include "hiddenou/model.hpp"

namespace hou {

// gamma(theta, t) for the Riccati equation started at gamma0.
double riccati_closed(const DerivedQuantities& dq, double f, double sigma, double gamma0,
                      double t);
double riccati_closed(const DerivedQuantities& dq, double gamma0, double t);

// Right-hand side of the Riccati ODE: -2a g - g^2 f^2/sigma^2 + b^2.
double riccati_rhs(const DerivedQuantities& dq, double g);

struct FilterPath {
  Theta theta;
  double dt = 0.0;
  std::vector<double> m, gamma;
  double m0 = 0.0, gamma0 = 0.0;
};

// Full Kalman-Bucy filter at known theta; x is sampled on a grid of step dt.
FilterPath kb_filter(std::span<const double> x, double dt, const ModelSpec& spec,
                     const Theta& theta, double m0, double gamma0);

struct StationaryFilterPath {
  Theta theta;
  double dt = 0.0;
  double t_start = 0.0;
  std::vector<double> big_m;
  std::vector<std::vector<double>> big_m_dot;  // one sequence per coordinate
  double init_m = 0.0;
  std::vector<double> init_m_dot;
};

// M and its theta-derivative(s) driven by the increments of x, starting at
// t_start = 0 on the supplied slice.
StationaryFilterPath stationary_filter_with_derivative(std::span<const double> x, double dt,
                                                       const ModelSpec& spec, const Theta& theta,
                                                       double init_m,
                                                       std::vector<double> init_m_dot);

struct InitialValues {
  double big_m = 0.0;
  std::vector<double> big_m_dot;
};

// M(theta, tau) and its derivative from the path x[0..n] on [0, tau] by
// trapezoidal quadrature. m0 / m_dot0 are the (unobservable) values at 0.
InitialValues initial_values_at_tau(std::span<const double> x, double dt, const ModelSpec& spec,
                                    const Theta& theta, double m0 = 0.0,
                                    std::vector<double> m_dot0 = {});

}  // namespace hou
