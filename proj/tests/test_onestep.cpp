#include <cmath>

#include "doctest.h"
#include "hiddenou/error.hpp"
#include "hiddenou/onestep.hpp"

using namespace hou;
using doctest::Approx;

namespace {
const ModelSpec kF(Case::F, {1, 1, 1}, 1.0, {{0.2, 5}});
const ModelSpec kA(Case::A, {1, 1, 1}, 1.0, {{0.2, 5}});
const ModelSpec kAF(Case::AF, {1, 1, 1}, 1.0, {{0.2, 5}, {0.2, 5}});

Trajectory path(const ModelSpec& s, const Theta& th, double T, std::uint64_t seed) {
  RngStream r(seed, 0);
  return simulate_path(s, th, T, 0.01, r);
}
}  // namespace

TEST_CASE("learning interval") {
  LearningConfig c;
  CHECK(c.tau(2000) == 95);
  CHECK(c.tau(1000) == 63);
  LearningConfig bad;
  bad.delta = 0.4;
  CHECK_THROWS_AS(bad.validate(2000), Error);
}

TEST_CASE("integral and recurrent forms agree without regularizer") {
  for (const ModelSpec* s : {&kF, &kA, &kAF}) {
    const Theta th = s->dim() == 2 ? Theta::pair(1, 1) : Theta::scalar(1);
    const auto tr = path(*s, th, 400, 31);
    LearningConfig c;
    c.epsilon_star = 0.0;
    c.stride = 1;
    const auto a = onestep_process(tr, *s, c, OneStepForm::Integral);
    const auto b = onestep_process(tr, *s, c, OneStepForm::Recurrent);
    REQUIRE(a.path.size() == b.path.size());
    double gap = 0;
    for (std::size_t k = 1; k < a.path.size(); ++k)
      for (std::size_t j = 0; j < s->dim(); ++j)
        gap = std::max(gap, std::abs(a.path[k][j] - b.path[k][j]));
    CHECK(gap < 1e-9);
  }
}

TEST_CASE("estimator path structure and determinism") {
  const auto tr = path(kF, Theta::scalar(1), 500, 32);
  LearningConfig c;
  const auto a = onestep_process(tr, kF, c);
  const auto b = onestep_process(tr, kF, c);
  CHECK(a.path == b.path);
  CHECK(a.tau == 41);
  CHECK(a.stride == 10);
  CHECK(a.times.front() == Approx(41));
  CHECK(a.times.back() == Approx(500));
  CHECK(a.path.front() == a.preliminary.theta_star);
  CHECK(&a.at(250.0) == &a.path[(250 - 41) * 10]);
  CHECK_THROWS_AS(a.at(250.05), Error);

  const auto eta = eta_process(a, Theta::scalar(1), kF, {0.5, 1.0}, 500);
  CHECK(eta[1] == Approx(std::sqrt(500 * fisher_scalar(kF, Theta::scalar(1))) *
                         (a.path.back()[0] - 1)));
  try {
    eta_process(a, Theta::scalar(1), kF, {0.05}, 500);
    FAIL("expected out-of-range");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::kOutOfRange);
  }
  const ModelSpec ab(Case::AB, {1, 1, 1}, 1.0, {{0.2, 5}, {0.2, 5}});
  CHECK_THROWS_AS(onestep_process(path(ab, Theta::pair(1, 1), 200, 1), ab, c), Error);
}

TEST_CASE("one-step correction from the true value on a long path") {
  // With the preliminary estimate fixed at theta0 the correction is a
  // normalized score: the path stays near theta0 and info converges to I.
  const auto tr = path(kF, Theta::scalar(1), 20000, 33);
  LearningConfig c;
  c.preliminary_override = Theta::scalar(1.0);
  const auto e = onestep_process(tr, kF, c);
  const double sd = std::sqrt(1 / (0.1767767 * 20000));
  CHECK(std::abs(e.path.back()[0] - 1.0) < 4 * sd);
  CHECK(e.info_empirical.m11 == Approx(0.1767767).epsilon(0.05));
  // from a nearby start the correction moves towards theta0
  c.preliminary_override = Theta::scalar(1.2);
  const auto e2 = onestep_process(tr, kF, c);
  CHECK(std::abs(e2.path.back()[0] - 1.0) < 0.1);
}

TEST_CASE("grid MLE and Bayes estimator") {
  const auto tr = path(kF, Theta::scalar(1), 1000, 34);
  std::vector<double> grid;
  for (int i = 0; i < 61; ++i) grid.push_back(0.4 + 1.2 * i / 60.0);
  const auto g = grid_mle_and_bayes(tr.x, tr.dt, kF, grid);
  CHECK(g.loglik.size() == grid.size());
  CHECK(std::abs(g.mle - 1.0) < 0.3);
  CHECK(std::abs(g.bayes - g.mle) < 0.05);
  const double ll0 = log_likelihood(tr.x, tr.dt, kF, Theta::scalar(1.0));
  CHECK(ll0 > log_likelihood(tr.x, tr.dt, kF, Theta::scalar(2.0)));
  // a point-mass prior pins the Bayes estimator
  const auto pinned = grid_mle_and_bayes(tr.x, tr.dt, kF, grid, [&](double t) {
    return std::abs(t - grid[20]) < 1e-12 ? 1.0 : 0.0;
  });
  CHECK(pinned.bayes == Approx(grid[20]));
  CHECK_THROWS_AS(grid_mle_and_bayes(tr.x, tr.dt, kF, {1.0, 1.1}), Error);
}
