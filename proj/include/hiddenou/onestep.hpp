#pragma once

#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "hiddenou/moments.hpp"
#include "hiddenou/simulate.hpp"

namespace hou {

struct LearningConfig {
  double delta = 0.6;
  double epsilon_star = 0.5;  // recurrent-form regularizer
  // Grid steps between emitted path points; 0 means every 0.1 time units.
  std::size_t stride = 0;
  // Replaces the moment estimator (sensitivity studies and tests).
  std::optional<Theta> preliminary_override;

  // floor(T^delta)
  double tau(double horizon) const;
  void validate(double horizon) const;
};

enum class OneStepForm { Integral, Recurrent };

struct EstimatorPath {
  MmeResult preliminary;
  double dt = 0.0;
  double tau = 0.0;
  std::size_t tau_index = 0;
  std::size_t stride = 1;
  std::vector<double> times;
  std::vector<Theta> path;  // path[k] at grid index tau_index + k*stride
  Mat2 fisher_used;         // m11 only in scalar cases
  Mat2 info_empirical;      // (1/(T-tau)) int Mdot Mdot^T / sigma^2 ds

  // theta at time t (must be an emitted grid time in [tau, T]).
  const Theta& at(double t) const;
};

EstimatorPath onestep_process(const Trajectory& traj, const ModelSpec& spec,
                              const LearningConfig& cfg,
                              OneStepForm form = OneStepForm::Recurrent);

// eta(v) = v sqrt(T I(theta0)) (theta*(vT) - theta0), scalar cases.
std::vector<double> eta_process(const EstimatorPath& path, const Theta& theta0,
                                const ModelSpec& spec, const std::vector<double>& v_grid,
                                double horizon);

struct GridEstimate {
  double mle = 0.0;
  double bayes = 0.0;
  std::vector<double> theta;
  std::vector<double> loglik;
};

// log L(theta) = int M dX / sigma^2 - int M^2 ds / (2 sigma^2) with M(theta, 0) = 0.
double log_likelihood(std::span<const double> x, double dt, const ModelSpec& spec,
                      const Theta& theta);

// Grid MLE (parabolic refinement) and Bayes estimator; uniform prior when empty.
GridEstimate grid_mle_and_bayes(std::span<const double> x, double dt, const ModelSpec& spec,
                                const std::vector<double>& grid,
                                const std::function<double(double)>& prior = {});

}  // namespace hou
