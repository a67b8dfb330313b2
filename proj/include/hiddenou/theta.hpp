#pragma once

#include <array>
#include <cstddef>
#include <initializer_list>
#include <string>

namespace hou {

// Parameter point of dimension 1 or 2.
class Theta {
 public:
  Theta() = default;
  static Theta scalar(double x) { return Theta(1, {x, 0.0}); }
  static Theta pair(double x, double y) { return Theta(2, {x, y}); }

  std::size_t size() const noexcept { return dim_; }
  double operator[](std::size_t i) const { return v_[i]; }
  double& operator[](std::size_t i) { return v_[i]; }
  double value() const { return v_[0]; }

  bool operator==(const Theta& o) const {
    return dim_ == o.dim_ && v_[0] == o.v_[0] && (dim_ < 2 || v_[1] == o.v_[1]);
  }

  std::string str() const;

 private:
  Theta(std::size_t dim, std::array<double, 2> v) : dim_(dim), v_(v) {}
  std::size_t dim_ = 1;
  std::array<double, 2> v_{0.0, 0.0};
};

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
  bool contains(double x) const { return x >= lo && x <= hi; }
  double clamp(double x) const { return x < lo ? lo : (x > hi ? hi : x); }
  bool operator==(const Interval&) const = default;
};

// Symmetric-or-not 2x2 matrix, row major.
struct Mat2 {
  double m11 = 0.0, m12 = 0.0, m21 = 0.0, m22 = 0.0;

  double det() const { return m11 * m22 - m12 * m21; }
  Mat2 inverse() const;
  // 2-norm condition number for symmetric matrices.
  double condition_symmetric() const;
  bool positive_definite() const { return m11 > 0.0 && det() > 0.0; }
  std::array<double, 2> apply(double x, double y) const {
    return {m11 * x + m12 * y, m21 * x + m22 * y};
  }
};

}  // namespace hou
