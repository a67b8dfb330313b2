#include "hiddenou/onestep.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "hiddenou/error.hpp"
#include "hiddenou/kalman.hpp"

namespace hou {

double LearningConfig::tau(double horizon) const {
  return std::floor(std::pow(horizon, delta) + 1e-9);
}

void LearningConfig::validate(double horizon) const {
  if (!(delta > 0.5 && delta < 1.0)) throw Error(ErrorKind::kConfig, "delta must be in (1/2, 1)");
  if (epsilon_star < 0.0) throw Error(ErrorKind::kConfig, "epsilon_star must be >= 0");
  const double t = tau(horizon);
  if (t < 2.0 || t >= horizon)
    throw Error(ErrorKind::kInsufficientData, "horizon too short for a learning interval");
}

const Theta& EstimatorPath::at(double t) const {
  const double k = (t - tau) / (dt * static_cast<double>(stride));
  const double kr = std::round(k);
  if (kr < 0.0 || std::abs(k - kr) > 1e-6)
    throw Error(ErrorKind::kAlignment, "time " + std::to_string(t) + " not on estimator grid");
  const auto i = static_cast<std::size_t>(kr);
  if (i >= path.size()) throw Error(ErrorKind::kOutOfRange, "time beyond estimator path");
  return path[i];
}

EstimatorPath onestep_process(const Trajectory& traj, const ModelSpec& spec,
                              const LearningConfig& cfg, OneStepForm form) {
  const double horizon = traj.horizon();
  cfg.validate(horizon);
  if (spec.kind() == Case::AB)
    throw Error(ErrorKind::kInvalidModel, "no one-step process for the (a, b) case");

  EstimatorPath out;
  out.dt = traj.dt;
  out.tau = cfg.tau(horizon);
  out.tau_index = traj.index_of(out.tau);
  out.stride = cfg.stride ? cfg.stride
                          : std::max<std::size_t>(1, static_cast<std::size_t>(
                                                         std::llround(0.1 / traj.dt)));

  if (cfg.preliminary_override) {
    spec.require_inside(*cfg.preliminary_override);
    out.preliminary.theta_star = *cfg.preliminary_override;
  } else {
    out.preliminary = mme(spec, r_statistics(unit_increments(traj, out.tau)));
  }
  const Theta pre = out.preliminary.theta_star;
  const std::size_t d = spec.dim();

  // Frozen information and its inverse.
  Mat2 inv;
  if (d == 1) {
    const double i = fisher_scalar(spec, pre);
    if (!(i >= 1e-12))
      throw Error(ErrorKind::kDegenerate, "Fisher information vanishes at " + pre.str());
    out.fisher_used = {i, 0.0, 0.0, 0.0};
    inv = {1.0 / i, 0.0, 0.0, 0.0};
  } else {
    out.fisher_used = fisher_matrix_af(spec, pre);
    if (out.fisher_used.condition_symmetric() > 1e12)
      throw Error(ErrorKind::kDegenerate, "ill-conditioned Fisher matrix at " + pre.str());
    inv = out.fisher_used.inverse();
  }

  const DerivedQuantities q = derived_quantities(spec, pre);
  const std::span<const double> x(traj.x);
  const InitialValues iv = initial_values_at_tau(x.subspan(0, out.tau_index + 1), traj.dt, spec, pre);

  const double dt = traj.dt;
  const double s2 = q.sigma * q.sigma;
  const double eps = form == OneStepForm::Recurrent ? cfg.epsilon_star : 0.0;
  double m = iv.big_m;
  double md[2] = {iv.big_m_dot[0], d == 2 ? iv.big_m_dot[1] : 0.0};
  double score[2] = {0.0, 0.0};
  double info[3] = {0.0, 0.0, 0.0};
  double th[2] = {pre[0], d == 2 ? pre[1] : 0.0};

  auto make = [&](const double* v) { return d == 1 ? Theta::scalar(v[0]) : Theta::pair(v[0], v[1]); };
  auto correction = [&](const double* s, double* outv) {
    if (d == 1) {
      outv[0] = inv.m11 * s[0];
    } else {
      const auto r = inv.apply(s[0], s[1]);
      outv[0] = r[0];
      outv[1] = r[1];
    }
  };

  out.times.push_back(out.tau);
  out.path.push_back(pre);
  const std::size_t n = traj.n_steps;
  for (std::size_t i = out.tau_index; i < n; ++i) {
    const double dx = x[i + 1] - x[i];
    const double innov = dx - m * dt;
    double ds[2] = {md[0] / s2 * innov, d == 2 ? md[1] / s2 * innov : 0.0};
    info[0] += md[0] * md[0] * dt;
    if (d == 2) {
      info[1] += md[0] * md[1] * dt;
      info[2] += md[1] * md[1] * dt;
    }
    for (std::size_t j = 0; j < d; ++j) score[j] += ds[j];
    const double u_prev = dt * static_cast<double>(i - out.tau_index);
    const double u = dt * static_cast<double>(i + 1 - out.tau_index);
    if (form == OneStepForm::Integral) {
      double c[2];
      correction(score, c);
      for (std::size_t j = 0; j < d; ++j) th[j] = pre[j] + c[j] / u;
    } else {
      double c[2];
      correction(ds, c);
      for (std::size_t j = 0; j < d; ++j)
        th[j] = ((u_prev + eps) * th[j] + dt * pre[j] + c[j]) / (u + eps);
    }
    // advance the filter and its derivatives
    const double m_new = m - q.r * m * dt + q.big_gamma * dx;
    for (std::size_t j = 0; j < d; ++j)
      md[j] = md[j] - q.r * md[j] * dt - q.r_dot[j] * m * dt + q.big_gamma_dot[j] * dx;
    m = m_new;
    if ((i + 1 - out.tau_index) % out.stride == 0) {
      out.times.push_back(dt * static_cast<double>(i + 1));
      out.path.push_back(make(th));
    }
  }
  const double span = dt * static_cast<double>(n - out.tau_index);
  out.info_empirical = {info[0] / (s2 * span), info[1] / (s2 * span), info[1] / (s2 * span),
                        info[2] / (s2 * span)};
  for (const Theta& t : out.path)
    for (std::size_t j = 0; j < d; ++j)
      if (!std::isfinite(t[j]))
        throw Error(ErrorKind::kNumericalFailure, "non-finite one-step path");
  return out;
}

std::vector<double> eta_process(const EstimatorPath& path, const Theta& theta0,
                                const ModelSpec& spec, const std::vector<double>& v_grid,
                                double horizon) {
  if (spec.dim() != 1) throw Error(ErrorKind::kWrongArity, "eta process for scalar cases");
  const double info = fisher_scalar(spec, theta0);
  const double eps_t = path.tau / horizon;
  std::vector<double> out;
  out.reserve(v_grid.size());
  for (double v : v_grid) {
    if (!(v > eps_t) || v > 1.0 + 1e-12)
      throw Error(ErrorKind::kOutOfRange, "v = " + std::to_string(v) + " outside (tau/T, 1]");
    const double th = path.at(v * horizon)[0];
    out.push_back(v * std::sqrt(horizon * info) * (th - theta0[0]));
  }
  return out;
}

double log_likelihood(std::span<const double> x, double dt, const ModelSpec& spec,
                      const Theta& theta) {
  const DerivedQuantities q = derived_quantities(spec, theta);
  const double s2 = q.sigma * q.sigma;
  double m = 0.0, stoch = 0.0, quad = 0.0;
  for (std::size_t i = 0; i + 1 < x.size(); ++i) {
    const double dx = x[i + 1] - x[i];
    const double m_new = m - q.r * m * dt + q.big_gamma * dx;
    stoch += m * dx;
    quad += 0.5 * (m * m + m_new * m_new) * dt;
    m = m_new;
  }
  return stoch / s2 - quad / (2.0 * s2);
}

GridEstimate grid_mle_and_bayes(std::span<const double> x, double dt, const ModelSpec& spec,
                                const std::vector<double>& grid,
                                const std::function<double(double)>& prior) {
  if (spec.dim() != 1) throw Error(ErrorKind::kWrongArity, "grid estimators for scalar cases");
  if (grid.size() < 3) throw Error(ErrorKind::kInsufficientData, "grid too small");
  GridEstimate g;
  g.theta = grid;
  g.loglik.reserve(grid.size());
  for (double th : grid) g.loglik.push_back(log_likelihood(x, dt, spec, Theta::scalar(th)));

  std::size_t k = 0;
  double best = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < grid.size(); ++i)
    if (std::isfinite(g.loglik[i]) && g.loglik[i] > best) {
      best = g.loglik[i];
      k = i;
    }
  if (!std::isfinite(best))
    throw Error(ErrorKind::kNumericalFailure, "no finite log-likelihood on the grid");

  g.mle = grid[k];
  if (k > 0 && k + 1 < grid.size()) {
    // vertex of the parabola through the three top points
    const double x0 = grid[k - 1], x1 = grid[k], x2 = grid[k + 1];
    const double y0 = g.loglik[k - 1], y1 = g.loglik[k], y2 = g.loglik[k + 1];
    const double num = (x1 - x0) * (x1 - x0) * (y1 - y2) - (x1 - x2) * (x1 - x2) * (y1 - y0);
    const double den = (x1 - x0) * (y1 - y2) - (x1 - x2) * (y1 - y0);
    if (den != 0.0) {
      const double v = x1 - 0.5 * num / den;
      if (v > x0 && v < x2) g.mle = v;
    }
  }

  // trapezoid quadrature of theta p(theta) L(theta) / p(theta) L(theta)
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double wl = i == 0 ? 0.0 : 0.5 * (grid[i] - grid[i - 1]);
    const double wr = i + 1 == grid.size() ? 0.0 : 0.5 * (grid[i + 1] - grid[i]);
    const double p = prior ? prior(grid[i]) : 1.0;
    const double w = (wl + wr) * p * std::exp(g.loglik[i] - best);
    num += w * grid[i];
    den += w;
  }
  if (!(den > 0.0)) throw Error(ErrorKind::kNumericalFailure, "posterior mass vanished");
  g.bayes = num / den;
  return g;
}

}  // namespace hou
