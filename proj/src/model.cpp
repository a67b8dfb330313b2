#include "hiddenou/model.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

#include "hiddenou/error.hpp"

namespace hou {

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kDomain: return "domain error";
    case ErrorKind::kInvalidModel: return "invalid model";
    case ErrorKind::kWrongArity: return "wrong arity";
    case ErrorKind::kDegenerate: return "degenerate";
    case ErrorKind::kInsufficientData: return "insufficient data";
    case ErrorKind::kAlignment: return "alignment error";
    case ErrorKind::kOutOfRange: return "out of range";
    case ErrorKind::kNumericalFailure: return "numerical failure";
    case ErrorKind::kIo: return "i/o error";
    case ErrorKind::kConfig: return "config error";
  }
  return "error";
}

std::string Theta::str() const {
  char buf[64];
  if (dim_ == 1)
    std::snprintf(buf, sizeof buf, "%.10g", v_[0]);
  else
    std::snprintf(buf, sizeof buf, "(%.10g, %.10g)", v_[0], v_[1]);
  return buf;
}

Mat2 Mat2::inverse() const {
  const double d = det();
  if (d == 0.0 || !std::isfinite(d)) throw Error(ErrorKind::kDegenerate, "singular 2x2 matrix");
  return {m22 / d, -m12 / d, -m21 / d, m11 / d};
}

double Mat2::condition_symmetric() const {
  const double mean = 0.5 * (m11 + m22);
  const double half = 0.5 * (m11 - m22);
  const double rad = std::hypot(half, 0.5 * (m12 + m21));
  const double l1 = std::abs(mean + rad), l2 = std::abs(mean - rad);
  const double lo = std::min(l1, l2), hi = std::max(l1, l2);
  if (lo == 0.0) return std::numeric_limits<double>::infinity();
  return hi / lo;
}

const char* to_string(Case c) {
  switch (c) {
    case Case::F: return "F";
    case Case::A: return "A";
    case Case::B: return "B";
    case Case::AF: return "AF";
    case Case::AB: return "AB";
    case Case::Gen: return "GEN";
  }
  return "?";
}

Case case_from_string(const std::string& s) {
  std::string u = s;
  for (auto& ch : u) ch = static_cast<char>(std::toupper(static_cast<unsigned char>(ch)));
  if (u == "F") return Case::F;
  if (u == "A") return Case::A;
  if (u == "B") return Case::B;
  if (u == "AF") return Case::AF;
  if (u == "AB") return Case::AB;
  if (u == "GEN") return Case::Gen;
  throw Error(ErrorKind::kConfig, "unknown case '" + s + "'");
}

namespace {

std::size_t case_dim(Case c) { return (c == Case::AF || c == Case::AB) ? 2 : 1; }

bool excludes_zero(const Interval& iv) { return iv.lo > 0.0 || iv.hi < 0.0; }

}  // namespace

ModelSpec::ModelSpec(Case c, Coefficients knowns, double sigma, std::vector<Interval> box)
    : case_(c), knowns_(knowns), sigma_(sigma), box_(std::move(box)) {
  if (c == Case::Gen)
    throw Error(ErrorKind::kInvalidModel, "GEN case needs ModelSpec::general");
  if (box_.size() != case_dim(c))
    throw Error(ErrorKind::kWrongArity, std::string("box dimension does not match case ") +
                                            to_string(c));
  validate();
}

ModelSpec ModelSpec::general(CoeffFn coeff, CoeffFn coeff_dot, CoeffFn coeff_ddot, double sigma,
                             Interval box) {
  if (!coeff || !coeff_dot)
    throw Error(ErrorKind::kInvalidModel, "GEN case needs coefficient and derivative maps");
  ModelSpec s;
  s.case_ = Case::Gen;
  s.sigma_ = sigma;
  s.box_ = {box};
  s.gen_coeff_ = std::move(coeff);
  s.gen_dot_ = std::move(coeff_dot);
  s.gen_ddot_ = std::move(coeff_ddot);
  s.validate();
  return s;
}

void ModelSpec::validate() const {
  if (!(sigma_ > 0.0) || !std::isfinite(sigma_))
    throw Error(ErrorKind::kInvalidModel, "sigma must be positive");
  for (const auto& iv : box_)
    if (!(iv.lo < iv.hi) || !std::isfinite(iv.lo) || !std::isfinite(iv.hi))
      throw Error(ErrorKind::kInvalidModel, "box bounds must satisfy lo < hi");

  auto bad = [](const std::string& what) { throw Error(ErrorKind::kInvalidModel, what); };
  const auto& k = knowns_;
  switch (case_) {
    case Case::F:
      if (!(k.a > 0.0) || k.b == 0.0) bad("case F needs a > 0, b != 0");
      if (!excludes_zero(box_[0])) bad("f box must exclude 0");
      break;
    case Case::A:
      if (k.f == 0.0 || k.b == 0.0) bad("case A needs f, b != 0");
      if (!(box_[0].lo > 0.0)) bad("a box must be positive");
      break;
    case Case::B:
      if (!(k.a > 0.0) || k.f == 0.0) bad("case B needs a > 0, f != 0");
      if (!excludes_zero(box_[0])) bad("b box must exclude 0");
      break;
    case Case::AF:
      if (k.b == 0.0) bad("case AF needs b != 0");
      if (!(box_[0].lo > 0.0)) bad("a box must be positive");
      if (!excludes_zero(box_[1])) bad("f box must exclude 0");
      break;
    case Case::AB:
      if (k.f == 0.0) bad("case AB needs f != 0");
      if (!(box_[0].lo > 0.0)) bad("a box must be positive");
      if (!excludes_zero(box_[1])) bad("b box must exclude 0");
      break;
    case Case::Gen: {
      const auto& iv = box_[0];
      for (int i = 0; i <= 100; ++i) {
        const double th = iv.lo + (iv.hi - iv.lo) * i / 100.0;
        const Coefficients c = gen_coeff_(th);
        if (!(c.a > 0.0) || c.f == 0.0 || c.b == 0.0 || !std::isfinite(c.f) ||
            !std::isfinite(c.a) || !std::isfinite(c.b))
          bad("GEN coefficients violate a > 0, f != 0, b != 0 at theta = " + std::to_string(th));
      }
      break;
    }
  }
}

bool ModelSpec::contains(const Theta& theta) const {
  if (theta.size() != dim()) return false;
  for (std::size_t i = 0; i < dim(); ++i)
    if (!box_[i].contains(theta[i])) return false;
  return true;
}

Theta ModelSpec::clamp(const Theta& theta) const {
  if (theta.size() != dim()) throw Error(ErrorKind::kWrongArity, "theta dimension mismatch");
  Theta t = theta;
  for (std::size_t i = 0; i < dim(); ++i) t[i] = box_[i].clamp(t[i]);
  return t;
}

void ModelSpec::require_inside(const Theta& theta) const {
  if (theta.size() != dim())
    throw Error(ErrorKind::kWrongArity, "theta " + theta.str() + " has wrong dimension");
  if (!contains(theta)) throw Error(ErrorKind::kDomain, "theta " + theta.str() + " outside box");
}

Coefficients ModelSpec::coeff(const Theta& theta) const {
  Coefficients c = knowns_;
  switch (case_) {
    case Case::F: c.f = theta[0]; break;
    case Case::A: c.a = theta[0]; break;
    case Case::B: c.b = theta[0]; break;
    case Case::AF: c.a = theta[0]; c.f = theta[1]; break;
    case Case::AB: c.a = theta[0]; c.b = theta[1]; break;
    case Case::Gen: c = gen_coeff_(theta[0]); break;
  }
  return c;
}

std::vector<Coefficients> ModelSpec::coeff_dot(const Theta& theta) const {
  const Coefficients z{0.0, 0.0, 0.0};
  auto only = [&](double Coefficients::*m) {
    Coefficients c = z;
    c.*m = 1.0;
    return c;
  };
  switch (case_) {
    case Case::F: return {only(&Coefficients::f)};
    case Case::A: return {only(&Coefficients::a)};
    case Case::B: return {only(&Coefficients::b)};
    case Case::AF: return {only(&Coefficients::a), only(&Coefficients::f)};
    case Case::AB: return {only(&Coefficients::a), only(&Coefficients::b)};
    case Case::Gen: return {gen_dot_(theta[0])};
  }
  return {};
}

Coefficients ModelSpec::coeff_ddot(const Theta& theta) const {
  if (dim() != 1) throw Error(ErrorKind::kWrongArity, "second derivatives only for scalar cases");
  if (case_ == Case::Gen && gen_ddot_) return gen_ddot_(theta[0]);
  return {0.0, 0.0, 0.0};
}

DerivedQuantities derived_quantities(const Coefficients& c, double sigma) {
  if (!(c.a > 0.0) || c.f == 0.0 || c.b == 0.0)
    throw Error(ErrorKind::kInvalidModel, "need a > 0, f != 0, b != 0");
  if (!(sigma > 0.0)) throw Error(ErrorKind::kInvalidModel, "sigma must be positive");
  DerivedQuantities q;
  q.f = c.f;
  q.a = c.a;
  q.b = c.b;
  q.sigma = sigma;
  const double q2 = c.f * c.f * c.b * c.b / (sigma * sigma);
  q.r = std::sqrt(c.a * c.a + q2);
  // r - a without cancellation
  q.big_gamma = q2 / (q.r + c.a);
  q.gamma_star = sigma * sigma * q.big_gamma / (c.f * c.f);
  q.gain = q.big_gamma / c.f;
  return q;
}

DerivedQuantities derived_quantities(const ModelSpec& spec, const Theta& theta) {
  spec.require_inside(theta);
  DerivedQuantities q = derived_quantities(spec.coeff(theta), spec.sigma());
  const double s2 = q.sigma * q.sigma;
  for (const Coefficients& d : spec.coeff_dot(theta)) {
    const double rd = (q.a * d.a + (q.f * d.f * q.b * q.b + q.f * q.f * q.b * d.b) / s2) / q.r;
    const double gd = rd - d.a;
    q.a_dot.push_back(d.a);
    q.f_dot.push_back(d.f);
    q.b_dot.push_back(d.b);
    q.r_dot.push_back(rd);
    q.big_gamma_dot.push_back(gd);
    q.gain_dot.push_back((gd * q.f - q.big_gamma * d.f) / (q.f * q.f));
  }
  return q;
}

double fisher_entry(const DerivedQuantities& q, std::size_t i, std::size_t j) {
  const double ai = q.a_dot.at(i), aj = q.a_dot.at(j);
  const double ri = q.r_dot.at(i), rj = q.r_dot.at(j);
  return ai * aj / (2.0 * q.a) - (ai * rj + aj * ri) / (q.r + q.a) + ri * rj / (2.0 * q.r);
}

double fisher_scalar(const ModelSpec& spec, const Theta& theta) {
  if (spec.dim() != 1 || theta.size() != 1)
    throw Error(ErrorKind::kWrongArity, "fisher_scalar needs a scalar case");
  return fisher_entry(derived_quantities(spec, theta), 0, 0);
}

Mat2 fisher_matrix_af(const ModelSpec& spec, const Theta& theta) {
  if (spec.dim() != 2 || theta.size() != 2)
    throw Error(ErrorKind::kWrongArity, "fisher_matrix_af needs a two-dimensional case");
  if (spec.kind() != Case::AF)
    throw Error(ErrorKind::kInvalidModel, "Fisher matrix only available for the (a, f) case");
  const DerivedQuantities q = derived_quantities(spec, theta);
  const double off = fisher_entry(q, 0, 1);
  Mat2 m{fisher_entry(q, 0, 0), off, off, fisher_entry(q, 1, 1)};
  if (!m.positive_definite())
    throw Error(ErrorKind::kDegenerate, "Fisher matrix not positive definite at " + theta.str());
  return m;
}

namespace closed_form {

namespace {
double rate(double f, double a, double b, double s) {
  return std::sqrt(a * a + f * f * b * b / (s * s));
}
}  // namespace

double fisher_f(double f, double a, double b, double s) {
  const double r = rate(f, a, b, s);
  return std::pow(b, 4) * f * f / (2.0 * std::pow(s, 4) * r * r * r);
}

double fisher_b(double f, double a, double b, double s) {
  const double r = rate(f, a, b, s);
  return b * b * std::pow(f, 4) / (2.0 * r * r * r * std::pow(s, 4));
}

double fisher_a_first(double a, double f, double b, double s) {
  const double r = rate(f, a, b, s);
  const double d = r * r - a * a;
  const double e = r - a;
  return (d * d + r * a * e * e) / (2.0 * a * r * r * r * (r + a));
}

double fisher_a_second(double a, double f, double b, double s) {
  const double r = rate(f, a, b, s);
  const double g = r - a;
  return g * g * ((r + a) * (r + a) + r * a) / (2.0 * a * r * r * r * (r + a));
}

}  // namespace closed_form

double expm1_tail(double x) {
  if (std::abs(x) < 0.1) {
    // x^2/2 - x^3/6 + ... summed from the tail inwards
    double term = 1.0, sum = 0.0;
    double coefs[10];
    for (int k = 2; k <= 11; ++k) {
      term = (k == 2) ? 0.5 : term / k;
      coefs[k - 2] = ((k % 2) ? -term : term);
    }
    for (int k = 9; k >= 0; --k) sum = sum * x + coefs[k];
    return sum * x * x;
  }
  return std::expm1(-x) + x;
}

MomentFunctions moment_functions(const Coefficients& c, double sigma) {
  const double fb2 = c.f * c.f * c.b * c.b;
  const double a3 = c.a * c.a * c.a;
  const double one_minus = -std::expm1(-c.a);
  MomentFunctions m;
  m.phi1 = fb2 * expm1_tail(c.a) / a3 + sigma * sigma;
  m.phi2 = fb2 * one_minus * one_minus / (2.0 * a3);
  m.psi = m.phi1;
  return m;
}

MomentFunctions moment_functions(const ModelSpec& spec, const Theta& theta) {
  spec.require_inside(theta);
  return moment_functions(spec.coeff(theta), spec.sigma());
}

namespace {
double k11_impl(const Coefficients& c, double sigma, bool four_term) {
  const double f2b2 = c.f * c.f * c.b * c.b;
  const double a3 = c.a * c.a * c.a;
  const double a6 = a3 * a3;
  const double ph = expm1_tail(c.a);
  const double om = -std::expm1(-c.a);
  const double s2 = sigma * sigma;
  double lag = f2b2 * f2b2 * om * om * om / (a6 * (1.0 + std::exp(-c.a)));
  if (four_term) lag *= std::exp(4.0 * c.a);
  return 2.0 * f2b2 * f2b2 * ph * ph / a6 + lag + 4.0 * s2 * f2b2 * ph / a3 + 2.0 * s2 * s2;
}
}  // namespace

double k11_variance(const Coefficients& c, double sigma) { return k11_impl(c, sigma, false); }

double k11_variance(const ModelSpec& spec, const Theta& theta) {
  spec.require_inside(theta);
  return k11_variance(spec.coeff(theta), spec.sigma());
}

double k11_variance_four_term(const Coefficients& c, double sigma) {
  return k11_impl(c, sigma, true);
}

double h_dec(double x) {
  if (!(x > 0.0)) throw Error(ErrorKind::kDomain, "h_dec needs x > 0");
  return expm1_tail(x) / (x * x * x);
}

double h_dec_prime(double x) {
  if (!(x > 0.0)) throw Error(ErrorKind::kDomain, "h_dec' needs x > 0");
  if (x < 0.05) {
    return -0.5 / (x * x) + 1.0 / 24.0 - x / 60.0 + x * x / 240.0 - x * x * x / 1260.0 +
           x * x * x * x / 8064.0;
  }
  return (3.0 - 2.0 * x - (3.0 + x) * std::exp(-x)) / (x * x * x * x);
}

double h_inc(double x) {
  if (!(x > 0.0)) throw Error(ErrorKind::kDomain, "h_inc needs x > 0");
  const double om = -std::expm1(-x);
  return expm1_tail(x) / (om * om);
}

namespace {

// Bisection to full double resolution on a monotone function.
template <class Fn>
double bisect(Fn&& g, double lo, double hi) {
  for (int it = 0; it < 2000; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    if (g(mid)) lo = mid; else hi = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace

double h_dec_inv(double y) {
  if (!(y > 0.0) || !std::isfinite(y))
    throw Error(ErrorKind::kOutOfRange, "h_dec_inv needs y in (0, inf)");
  double lo = 1.0, hi = 1.0;
  while (h_dec(lo) < y) {
    lo *= 0.5;
    if (lo < 1e-300) throw Error(ErrorKind::kNumericalFailure, "h_dec_inv bracket failed");
  }
  while (h_dec(hi) > y) {
    hi *= 2.0;
    if (hi > 1e300) throw Error(ErrorKind::kNumericalFailure, "h_dec_inv bracket failed");
  }
  // invariant: h(lo) >= y >= h(hi)
  return bisect([&](double m) { return h_dec(m) > y; }, lo, hi);
}

double h_inc_inv(double y) {
  if (!(y > 0.5) || !std::isfinite(y))
    throw Error(ErrorKind::kOutOfRange, "h_inc_inv needs y > 1/2");
  double lo = 1.0, hi = 1.0;
  while (h_inc(lo) > y) {
    lo *= 0.5;
    if (lo < 1e-300) throw Error(ErrorKind::kNumericalFailure, "h_inc_inv bracket failed");
  }
  while (h_inc(hi) < y) {
    hi *= 2.0;
    if (hi > 1e300) throw Error(ErrorKind::kNumericalFailure, "h_inc_inv bracket failed");
  }
  return bisect([&](double m) { return h_inc(m) < y; }, lo, hi);
}

}  // namespace hou
