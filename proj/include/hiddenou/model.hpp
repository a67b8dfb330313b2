#pragma once

// Coefficient maps, closed-form filter quantities and Fisher information for
//
//   dX = f(theta) Y dt + sigma dW,   dY = -a(theta) Y dt + b(theta) dV.

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "hiddenou/theta.hpp"

namespace hou {

enum class Case { F, A, B, AF, AB, Gen };

const char* to_string(Case c);
Case case_from_string(const std::string& s);

struct Coefficients {
  double f = 1.0;
  double a = 1.0;
  double b = 1.0;
  bool operator==(const Coefficients&) const = default;
};

class ModelSpec {
 public:
  using CoeffFn = std::function<Coefficients(double)>;

  // Built-in cases. `knowns` supplies the coefficients that are not estimated.
  ModelSpec(Case c, Coefficients knowns, double sigma, std::vector<Interval> box);

  // Scalar GEN case: user-supplied maps and first/second derivatives.
  static ModelSpec general(CoeffFn coeff, CoeffFn coeff_dot, CoeffFn coeff_ddot, double sigma,
                           Interval box);

  Case kind() const noexcept { return case_; }
  std::size_t dim() const noexcept { return box_.size(); }
  double sigma() const noexcept { return sigma_; }
  const Coefficients& knowns() const noexcept { return knowns_; }
  const std::vector<Interval>& box() const noexcept { return box_; }

  bool contains(const Theta& theta) const;
  Theta clamp(const Theta& theta) const;
  // Throws kDomain when theta is outside the closed box.
  void require_inside(const Theta& theta) const;

  Coefficients coeff(const Theta& theta) const;
  // d(f,a,b)/d theta_i, one entry per coordinate.
  std::vector<Coefficients> coeff_dot(const Theta& theta) const;
  // Second derivatives (scalar cases only; zero for the built-in cases).
  Coefficients coeff_ddot(const Theta& theta) const;

 private:
  ModelSpec() = default;
  void validate() const;

  Case case_ = Case::F;
  Coefficients knowns_{};
  double sigma_ = 1.0;
  std::vector<Interval> box_;
  CoeffFn gen_coeff_, gen_dot_, gen_ddot_;
};

struct DerivedQuantities {
  double f = 0.0, a = 0.0, b = 0.0, sigma = 0.0;
  double r = 0.0;           // sqrt(a^2 + f^2 b^2 / sigma^2)
  double gamma_star = 0.0;  // steady-state filter variance
  double big_gamma = 0.0;   // r - a = gamma_star f^2 / sigma^2
  double gain = 0.0;        // B = (r - a) / f
  // Per-coordinate derivatives.
  std::vector<double> a_dot, f_dot, b_dot;
  std::vector<double> r_dot, big_gamma_dot, gain_dot;
};

DerivedQuantities derived_quantities(const ModelSpec& spec, const Theta& theta);
// Same quantities from raw coefficients; derivatives are left empty.
DerivedQuantities derived_quantities(const Coefficients& c, double sigma);

// I(theta) = adot^2/(2a) - 2 adot rdot/(r+a) + rdot^2/(2r).
double fisher_scalar(const ModelSpec& spec, const Theta& theta);
// Fisher information matrix of the two-dimensional (a, f) case.
Mat2 fisher_matrix_af(const ModelSpec& spec, const Theta& theta);
// Bilinear Fisher form between coordinates i and j.
double fisher_entry(const DerivedQuantities& dq, std::size_t i, std::size_t j);

namespace closed_form {
// Case-specific closed-form Fisher informations.
double fisher_f(double f, double a, double b, double sigma);
double fisher_b(double f, double a, double b, double sigma);
// Both algebraic forms of the case-A expression.
double fisher_a_first(double a, double f, double b, double sigma);
double fisher_a_second(double a, double f, double b, double sigma);
}  // namespace closed_form

struct MomentFunctions {
  double phi1 = 0.0;  // limit of mean squared unit increment
  double phi2 = 0.0;  // limit of mean lag-1 increment product
  double psi = 0.0;   // identical to phi1
};

MomentFunctions moment_functions(const Coefficients& c, double sigma);
MomentFunctions moment_functions(const ModelSpec& spec, const Theta& theta);

// Asymptotic variance of sqrt(T)(R1 - Phi1).
double k11_variance(const Coefficients& c, double sigma);
double k11_variance(const ModelSpec& spec, const Theta& theta);
// The four-term expression with the e^{4a} factor in the second term, kept
// for side-by-side reporting.
double k11_variance_four_term(const Coefficients& c, double sigma);

// e^{-x} - 1 + x, accurate for small x.
double expm1_tail(double x);

// h_dec(x) = (x - 1 + e^{-x}) / x^3, strictly decreasing on (0, inf).
double h_dec(double x);
double h_dec_prime(double x);
double h_dec_inv(double y);
// h_inc(x) = (e^{-x} - 1 + x) / (1 - e^{-x})^2, strictly increasing from 1/2.
double h_inc(double x);
double h_inc_inv(double y);

}  // namespace hou
