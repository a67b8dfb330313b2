#include <cmath>

#include "doctest.h"
#include "hiddenou/error.hpp"
#include "hiddenou/moments.hpp"

using namespace hou;
using doctest::Approx;

namespace {

MomentStats exact(const Coefficients& c, double sigma) {
  const auto m = moment_functions(c, sigma);
  return {m.phi1, m.phi2, 1000};
}

}  // namespace

TEST_CASE("R statistics") {
  const auto s = r_statistics(std::vector<double>(10, 2.0));
  CHECK(s.r1 == Approx(4.0));
  CHECK(s.r2 == Approx(4.0 * 9 / 10));
  CHECK(s.t_count == 10);
  try {
    r_statistics({1.0});
    FAIL("expected insufficient data");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::kInsufficientData);
  }
}

TEST_CASE("noiseless round trips") {
  const std::vector<Interval> box1{{0.2, 5}};
  for (int i = 0; i < 25; ++i) {
    const double th = 0.25 + 4.7 * i / 24.0;
    const ModelSpec sf(Case::F, {1, 0.7, 1.2}, 0.9, box1);
    const ModelSpec sa(Case::A, {1.1, 1, 0.8}, 0.9, box1);
    const ModelSpec sb(Case::B, {0.6, 1.4, 1}, 0.9, box1);
    for (const ModelSpec* s : {&sf, &sa, &sb}) {
      const auto r = mme_scalar(*s, exact(s->coeff(Theta::scalar(th)), 0.9));
      CHECK(r.theta_star[0] == Approx(th).epsilon(1e-8));
      CHECK_FALSE(r.clamped);
      CHECK(r.residual < 1e-10);
    }
  }
  const ModelSpec gen = ModelSpec::general(
      [](double t) { return Coefficients{1.0, 0.5 + t, 1.0}; },
      [](double) { return Coefficients{0, 1, 0}; }, {}, 1.0, {0.1, 3.0});
  for (double th : {0.3, 1.0, 2.2}) {
    const auto r = mme_scalar(gen, exact(gen.coeff(Theta::scalar(th)), 1.0));
    CHECK(std::abs(r.theta_star[0] - th) < 1e-8);
  }
  const std::vector<Interval> box2{{0.2, 5}, {0.2, 5}};
  for (double a : {0.3, 1.0, 2.0, 4.0})
    for (double s : {0.4, 1.0, 3.0}) {
      const auto raf = mme_af(exact(Coefficients{s, a, 0.7}, 1.1), 0.7, 1.1, box2);
      CHECK(raf.theta_star[0] == Approx(a).epsilon(1e-8));
      CHECK(raf.theta_star[1] == Approx(s).epsilon(1e-8));
      const auto rab = mme_ab(exact(Coefficients{0.7, a, s}, 1.1), 0.7, 1.1, box2);
      CHECK(rab.theta_star[0] == Approx(a).epsilon(1e-8));
      CHECK(rab.theta_star[1] == Approx(s).epsilon(1e-8));
    }
}

TEST_CASE("case examples") {
  const ModelSpec sa(Case::A, {1, 1, 1}, 1.0, {{0.2, 5}});
  CHECK(mme_scalar(sa, {1.0 + std::exp(-1.0), 0, 100}).theta_star[0] == Approx(1.0).epsilon(1e-12));
  const double y = h_inc(1.0);
  CHECK(y == Approx(0.9206736).epsilon(1e-7));
  // ratio (R1 - sigma^2)/(2 R2) = h_inc(1) gives a* = 1
  const auto r = mme_af({1.0 + 2 * 0.2 * y, 0.2, 100}, 1.0, 1.0, {{0.2, 5}, {0.01, 50}});
  CHECK(r.theta_star[0] == Approx(1.0).epsilon(1e-10));
  // f and b play symmetric roles
  const MomentStats st{1.5, 0.25, 100};
  const auto p = mme_af(st, 1.0, 1.0, {{0.2, 5}, {0.2, 5}});
  const auto q = mme_ab(st, 1.0, 1.0, {{0.2, 5}, {0.2, 5}});
  CHECK(p.theta_star == q.theta_star);
}

TEST_CASE("a* increases with the moment ratio") {
  double prev = 0;
  for (int i = 1; i <= 50; ++i) {
    const double ratio = 0.55 + 0.1 * i;
    const auto r = mme_af({1.0 + 2 * 0.3 * ratio, 0.3, 100}, 1.0, 1.0, {{1e-3, 1e3}, {1e-3, 1e3}});
    CHECK(r.theta_star[0] > prev);
    prev = r.theta_star[0];
  }
}

TEST_CASE("boundary handling") {
  const ModelSpec sf(Case::F, {1, 1, 1}, 1.0, {{0.2, 5}});
  auto r = mme_scalar(sf, {0.9, 0.1, 100});
  CHECK(r.clamped);
  CHECK(r.theta_star[0] == 0.2);
  const ModelSpec sa(Case::A, {1, 1, 1}, 1.0, {{0.2, 5}});
  r = mme_scalar(sa, {0.9, 0.1, 100});
  CHECK(r.clamped);
  CHECK(r.theta_star[0] == 5.0);
  // clamped iff the unconstrained solution leaves the box
  r = mme_scalar(sf, exact(Coefficients{6, 1, 1}, 1.0));
  CHECK(r.clamped);
  CHECK(r.theta_star[0] == 5.0);
  r = mme_scalar(sf, exact(Coefficients{4.9, 1, 1}, 1.0));
  CHECK_FALSE(r.clamped);
  auto p = mme_af({1.2, 0.5, 100}, 1, 1, {{0.2, 5}, {0.2, 5}});  // ratio 0.2
  CHECK(p.clamped);
  CHECK(p.theta_star[0] == 0.2);
  p = mme_af({1.2, -0.1, 100}, 1, 1, {{0.2, 5}, {0.2, 5}});
  CHECK(p.clamped);
  CHECK(p.theta_star[0] == 5.0);
  p = mme_af({0.8, 0.1, 100}, 1, 1, {{0.2, 5}, {0.2, 5}});
  CHECK(p.clamped);
  CHECK(sf.contains(Theta::scalar(p.theta_star[1])));
}

TEST_CASE("asymptotic MME variances") {
  const ModelSpec sa(Case::A, {1, 1, 1}, 1.0, {{0.2, 5}});
  const ModelSpec sf(Case::F, {1, 1, 1}, 1.0, {{0.2, 5}});
  const ModelSpec sb(Case::B, {1, 1, 1}, 1.0, {{0.2, 5}});
  const double k11 = k11_variance(Coefficients{1, 1, 1}, 1.0);
  const double hp = 3 - 2 - 4 * std::exp(-1.0);
  CHECK(mme_asymptotic_variance(sa, Theta::scalar(1)) == Approx(k11 / (hp * hp)).epsilon(1e-12));
  CHECK(mme_asymptotic_variance(sa, Theta::scalar(1)) == Approx(17.6623).epsilon(1e-5));
  // delta method for f* = sqrt(a^3 (R1 - s^2) / (b^2 phi(a))): df/dR1 = e / 2 at the unit point
  CHECK(mme_asymptotic_variance(sf, Theta::scalar(1)) ==
        Approx(k11 * std::exp(2.0) / 4).epsilon(1e-12));
  CHECK(mme_asymptotic_variance(sb, Theta::scalar(1)) ==
        Approx(mme_asymptotic_variance(sf, Theta::scalar(1))).epsilon(1e-14));
}
