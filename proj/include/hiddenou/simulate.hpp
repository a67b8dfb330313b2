#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "hiddenou/model.hpp"

namespace hou {

// Reproducible normal stream for one replication.
class RngStream {
 public:
  RngStream(std::uint64_t master_seed, std::uint64_t stream_index);

  double normal() { return normal_(engine_); }
  std::uint64_t master_seed() const noexcept { return master_; }
  std::uint64_t stream_index() const noexcept { return index_; }

 private:
  std::uint64_t master_, index_;
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

std::uint64_t splitmix64(std::uint64_t x);

struct Trajectory {
  double dt = 0.01;
  std::size_t n_steps = 0;
  std::vector<double> x;
  std::optional<std::vector<double>> y;
  double x0 = 0.0;
  double y0 = 0.0;
  std::uint64_t seed = 0;
  std::uint64_t stream = 0;
  Theta theta_true;

  double horizon() const { return dt * static_cast<double>(n_steps); }
  // Grid index of time t; throws kAlignment if t is not on the grid.
  std::size_t index_of(double t) const;
};

struct SimulateOptions {
  bool retain_hidden = false;
  // Variance of Y0; the stationary b^2/(2a) when empty.
  std::optional<double> y0_variance;
};

Trajectory simulate_path(const ModelSpec& spec, const Theta& theta, double horizon, double dt,
                         RngStream& rng, const SimulateOptions& opt = {});

// Covariance of (Y_{t+h}, int_t^{t+h} Y ds) given Y_t.
struct StepLaw {
  double decay = 0.0;     // e^{-a h}
  double int_mean = 0.0;  // (1 - e^{-a h}) / a
  double var_y = 0.0, var_int = 0.0, cov = 0.0;
};
StepLaw ou_step_law(double a, double b, double h);

// X_k - X_{k-1} for k = 1..floor(upto).
std::vector<double> unit_increments(const Trajectory& traj, double upto);

void write_trajectory_csv(const Trajectory& traj, const std::string& path);
Trajectory read_trajectory_csv(const std::string& path);

}  // namespace hou
