#include "hiddenou/moments.hpp"

#include <cmath>
#include <limits>

#include "hiddenou/error.hpp"

namespace hou {

MomentStats r_statistics(const std::vector<double>& inc) {
  if (inc.size() < 2) throw Error(ErrorKind::kInsufficientData, "need at least 2 increments");
  MomentStats s;
  s.t_count = inc.size();
  double s1 = 0.0, s2 = 0.0;
  for (std::size_t k = 0; k < inc.size(); ++k) {
    s1 += inc[k] * inc[k];
    if (k) s2 += inc[k] * inc[k - 1];
  }
  s.r1 = s1 / static_cast<double>(s.t_count);
  s.r2 = s2 / static_cast<double>(s.t_count);
  return s;
}

namespace {

// Endpoint of iv nearest to zero, used when a scale estimate collapses.
double inner_edge(const Interval& iv) { return iv.lo > 0.0 ? iv.lo : iv.hi; }
double sign_of(const Interval& iv) { return iv.lo > 0.0 ? 1.0 : -1.0; }

void finish_scalar(const ModelSpec& spec, const MomentStats& st, double raw, MmeResult& res) {
  const Interval& iv = spec.box()[0];
  const double v = iv.clamp(raw);
  if (v != raw) res.clamped = true;
  res.theta_star = Theta::scalar(v);
  res.residual = std::abs(st.r1 - moment_functions(spec, res.theta_star).phi1);
}

MmeResult mme_gen(const ModelSpec& spec, const MomentStats& st) {
  const Interval iv = spec.box()[0];
  auto obj = [&](double th) {
    return std::abs(st.r1 - moment_functions(spec.coeff(Theta::scalar(th)), spec.sigma()).psi);
  };
  constexpr int kGrid = 1000;
  const double h = (iv.hi - iv.lo) / (kGrid - 1);
  int best = 0;
  double best_v = std::numeric_limits<double>::infinity();
  for (int i = 0; i < kGrid; ++i) {
    const double v = obj(iv.lo + h * i);
    if (v < best_v) {
      best_v = v;
      best = i;
    }
  }
  double lo = iv.lo + h * std::max(0, best - 1);
  double hi = iv.lo + h * std::min(kGrid - 1, best + 1);
  const double g = 0.5 * (std::sqrt(5.0) - 1.0);
  double c = hi - g * (hi - lo), d = lo + g * (hi - lo);
  double fc = obj(c), fd = obj(d);
  for (int it = 0; it < 200 && hi - lo > 1e-13 * std::max(1.0, std::abs(hi)); ++it) {
    if (fc < fd) {
      hi = d; d = c; fd = fc;
      c = hi - g * (hi - lo); fc = obj(c);
    } else {
      lo = c; c = d; fc = fd;
      d = lo + g * (hi - lo); fd = obj(d);
    }
  }
  double th = 0.5 * (lo + hi);
  if (best_v < obj(th)) th = iv.lo + h * best;
  MmeResult res;
  res.theta_star = Theta::scalar(th);
  res.residual = obj(th);
  // Flag a boundary minimum that still leaves a residual: the root lies outside.
  res.clamped = (best == 0 || best == kGrid - 1) && res.residual > 1e-8 * st.r1;
  return res;
}

// Shared (a, scale) inversion: `other` is the known one of f, b.
MmeResult mme_pair(const MomentStats& st, double other, double sigma,
                   const std::vector<Interval>& box) {
  if (box.size() != 2) throw Error(ErrorKind::kWrongArity, "two-dimensional box required");
  const Interval& ia = box[0];
  const Interval& is = box[1];
  const double v = st.r1 - sigma * sigma;
  MmeResult res;
  double a = 0.0, s = 0.0;
  auto from_phi2 = [&](double aa) {
    return std::sqrt(2.0 * aa * aa * aa * st.r2) / (std::abs(other) * -std::expm1(-aa));
  };
  auto from_phi1 = [&](double aa) {
    return std::sqrt(aa * aa * aa * v / (other * other * expm1_tail(aa)));
  };
  if (v <= 0.0) {
    a = ia.hi;
    s = inner_edge(is);
    res.clamped = true;
    res.diagnostic = "R1 - sigma^2 <= 0";
  } else if (st.r2 <= 0.0) {
    a = ia.hi;
    s = sign_of(is) * from_phi1(a);
    res.clamped = true;
    res.diagnostic = "R2 <= 0";
  } else {
    const double ratio = v / (2.0 * st.r2);
    if (ratio <= 0.5) {
      a = ia.lo;
      res.clamped = true;
      res.diagnostic = "moment ratio <= 1/2";
    } else {
      a = h_inc_inv(ratio);
      if (!ia.contains(a)) {
        a = ia.clamp(a);
        res.clamped = true;
      }
    }
    s = sign_of(is) * from_phi2(a);
  }
  if (!is.contains(s)) {
    s = is.clamp(s);
    res.clamped = true;
  }
  res.theta_star = Theta::pair(a, s);
  const MomentFunctions m = moment_functions(Coefficients{s, a, other}, sigma);
  res.residual = std::hypot(st.r1 - m.phi1, st.r2 - m.phi2);
  return res;
}

}  // namespace

MmeResult mme_scalar(const ModelSpec& spec, const MomentStats& st) {
  if (spec.dim() != 1) throw Error(ErrorKind::kWrongArity, "mme_scalar needs a scalar case");
  const Coefficients k = spec.knowns();
  const double s2 = spec.sigma() * spec.sigma();
  const double v = st.r1 - s2;
  const Interval& iv = spec.box()[0];
  MmeResult res;
  switch (spec.kind()) {
    case Case::F:
    case Case::B: {
      if (v <= 0.0) {
        res.clamped = true;
        res.diagnostic = "R1 - sigma^2 <= 0";
        finish_scalar(spec, st, inner_edge(iv), res);
        return res;
      }
      const double other = spec.kind() == Case::F ? k.b : k.f;
      const double raw =
          sign_of(iv) * std::sqrt(k.a * k.a * k.a * v / (other * other * expm1_tail(k.a)));
      finish_scalar(spec, st, raw, res);
      return res;
    }
    case Case::A: {
      const double y = v / (k.f * k.f * k.b * k.b);
      if (y <= 0.0) {
        res.clamped = true;
        res.diagnostic = "R1 - sigma^2 <= 0";
        finish_scalar(spec, st, iv.hi, res);
        return res;
      }
      finish_scalar(spec, st, h_dec_inv(y), res);
      return res;
    }
    case Case::Gen:
      return mme_gen(spec, st);
    default:
      break;
  }
  throw Error(ErrorKind::kWrongArity, "mme_scalar needs a scalar case");
}

MmeResult mme_af(const MomentStats& st, double b, double sigma, const std::vector<Interval>& box) {
  return mme_pair(st, b, sigma, box);
}

MmeResult mme_ab(const MomentStats& st, double f, double sigma, const std::vector<Interval>& box) {
  return mme_pair(st, f, sigma, box);
}

MmeResult mme(const ModelSpec& spec, const MomentStats& st) {
  switch (spec.kind()) {
    case Case::AF: return mme_af(st, spec.knowns().b, spec.sigma(), spec.box());
    case Case::AB: return mme_ab(st, spec.knowns().f, spec.sigma(), spec.box());
    default: return mme_scalar(spec, st);
  }
}

double mme_asymptotic_variance(const ModelSpec& spec, const Theta& theta) {
  spec.require_inside(theta);
  const Coefficients c = spec.coeff(theta);
  const double s = spec.sigma();
  const double k11 = k11_variance(c, s);
  const double a3 = c.a * c.a * c.a;
  const double ph = expm1_tail(c.a);
  const double excess = moment_functions(c, s).phi1 - s * s;
  switch (spec.kind()) {
    case Case::F: return a3 * k11 / (4.0 * c.b * c.b * ph * excess);
    case Case::B: return a3 * k11 / (4.0 * c.f * c.f * ph * excess);
    case Case::A: {
      const double hp = h_dec_prime(c.a);
      const double fb2 = c.f * c.f * c.b * c.b;
      return k11 / (hp * hp * fb2 * fb2);
    }
    default: break;
  }
  throw Error(ErrorKind::kWrongArity, "closed-form MME variance only for cases F, A, B");
}

}  // namespace hou
