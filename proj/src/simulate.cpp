#include "hiddenou/simulate.hpp"

#include <cmath>

#include "hiddenou/csv.hpp"
#include "hiddenou/error.hpp"

namespace hou {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

RngStream::RngStream(std::uint64_t master_seed, std::uint64_t stream_index)
    : master_(master_seed),
      index_(stream_index),
      engine_(splitmix64(splitmix64(master_seed) ^ splitmix64(stream_index + 0x5851f42d4c957f2dULL))) {}

std::size_t Trajectory::index_of(double t) const {
  const double k = std::round(t / dt);
  if (std::abs(k * dt - t) > 1e-9 * std::max(1.0, std::abs(t)) || k < 0)
    throw Error(ErrorKind::kAlignment, "time " + std::to_string(t) + " is not on the grid");
  const auto i = static_cast<std::size_t>(k);
  if (i > n_steps) throw Error(ErrorKind::kOutOfRange, "time beyond trajectory horizon");
  return i;
}

StepLaw ou_step_law(double a, double b, double h) {
  const double x = a * h;
  StepLaw s;
  s.decay = std::exp(-x);
  s.int_mean = -std::expm1(-x) / a;
  const double p1 = expm1_tail(x), p2 = expm1_tail(2.0 * x);
  s.var_y = b * b * -std::expm1(-2.0 * x) / (2.0 * a);
  // x - 2(1-e^{-x}) + (1-e^{-2x})/2 = 2 phi(x) - phi(2x)/2
  s.var_int = b * b / (a * a * a) * (2.0 * p1 - 0.5 * p2);
  s.cov = b * b / (a * a) * (0.5 * p2 - p1);
  return s;
}

Trajectory simulate_path(const ModelSpec& spec, const Theta& theta, double horizon, double dt,
                         RngStream& rng, const SimulateOptions& opt) {
  if (!(dt > 0.0) || !(horizon > 0.0))
    throw Error(ErrorKind::kDomain, "dt and horizon must be positive");
  const double steps = std::round(horizon / dt);
  if (std::abs(steps * dt - horizon) > 1e-9 * horizon)
    throw Error(ErrorKind::kAlignment, "horizon is not a multiple of dt");
  spec.require_inside(theta);
  const Coefficients c = spec.coeff(theta);
  const double sigma = spec.sigma();

  Trajectory tr;
  tr.dt = dt;
  tr.n_steps = static_cast<std::size_t>(steps);
  tr.seed = rng.master_seed();
  tr.stream = rng.stream_index();
  tr.theta_true = theta;
  tr.x.resize(tr.n_steps + 1);
  if (opt.retain_hidden) tr.y.emplace(tr.n_steps + 1);

  const StepLaw law = ou_step_law(c.a, c.b, dt);
  const double l11 = std::sqrt(law.var_y);
  const double l21 = law.cov / l11;
  const double l22 = std::sqrt(std::max(0.0, law.var_int - l21 * l21));
  const double sdw = sigma * std::sqrt(dt);

  const double v0 = opt.y0_variance ? *opt.y0_variance : c.b * c.b / (2.0 * c.a);
  double y = std::sqrt(v0) * rng.normal();
  double x = 0.0;
  tr.x0 = x;
  tr.y0 = y;
  tr.x[0] = x;
  if (tr.y) (*tr.y)[0] = y;
  for (std::size_t i = 0; i < tr.n_steps; ++i) {
    const double z1 = rng.normal(), z2 = rng.normal(), z3 = rng.normal();
    const double integral = y * law.int_mean + l21 * z1 + l22 * z2;
    y = y * law.decay + l11 * z1;
    x += c.f * integral + sdw * z3;
    tr.x[i + 1] = x;
    if (tr.y) (*tr.y)[i + 1] = y;
  }
  return tr;
}

std::vector<double> unit_increments(const Trajectory& traj, double upto) {
  const double per = std::round(1.0 / traj.dt);
  if (per < 1.0 || std::abs(per * traj.dt - 1.0) > 1e-9)
    throw Error(ErrorKind::kAlignment, "grid step does not divide unit time");
  const auto spu = static_cast<std::size_t>(per);
  const auto count = static_cast<std::size_t>(std::floor(upto + 1e-9));
  if (count * spu > traj.n_steps)
    throw Error(ErrorKind::kInsufficientData, "requested increments beyond the horizon");
  std::vector<double> inc(count);
  for (std::size_t k = 1; k <= count; ++k) inc[k - 1] = traj.x[k * spu] - traj.x[(k - 1) * spu];
  return inc;
}

void write_trajectory_csv(const Trajectory& traj, const std::string& path) {
  Table t;
  t.header = {"t", "x"};
  if (traj.y) t.header.push_back("y");
  t.rows.reserve(traj.x.size());
  for (std::size_t i = 0; i < traj.x.size(); ++i) {
    std::vector<double> row{traj.dt * static_cast<double>(i), traj.x[i]};
    if (traj.y) row.push_back((*traj.y)[i]);
    t.rows.push_back(std::move(row));
  }
  write_csv(path, t);
}

Trajectory read_trajectory_csv(const std::string& path) {
  const Table t = read_csv(path);
  if (t.header.size() < 2 || t.header[0] != "t" || t.header[1] != "x")
    throw Error(ErrorKind::kIo, "'" + path + "' lacks t,x columns");
  if (t.rows.size() < 2) throw Error(ErrorKind::kInsufficientData, "trajectory too short");
  Trajectory tr;
  tr.dt = t.rows[1][0] - t.rows[0][0];
  tr.n_steps = t.rows.size() - 1;
  const bool has_y = t.header.size() > 2 && t.header[2] == "y";
  if (has_y) tr.y.emplace();
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    const double expect = t.rows[0][0] + tr.dt * static_cast<double>(i);
    if (std::abs(t.rows[i][0] - expect) > 1e-9 * std::max(1.0, expect))
      throw Error(ErrorKind::kAlignment, "non-uniform time grid in '" + path + "'");
    tr.x.push_back(t.rows[i][1]);
    if (has_y) tr.y->push_back(t.rows[i][2]);
  }
  tr.x0 = tr.x[0];
  if (has_y) tr.y0 = (*tr.y)[0];
  return tr;
}

}  // namespace hou
