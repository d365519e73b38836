#pragma once

#include <cmath>

namespace orthoglide {

// Minimal forward-mode dual number. Evaluating a kinematic expression with
// Dual arguments whose derivative parts carry the pose rate yields the exact
// time derivative of the expression (chain rule, no truncation error).
struct Dual {
  double v = 0.0;  // value
  double d = 0.0;  // derivative

  Dual() = default;
  Dual(double value) : v(value) {}
  Dual(double value, double deriv) : v(value), d(deriv) {}
};

inline Dual operator+(Dual a, Dual b) { return {a.v + b.v, a.d + b.d}; }
inline Dual operator-(Dual a, Dual b) { return {a.v - b.v, a.d - b.d}; }
inline Dual operator-(Dual a) { return {-a.v, -a.d}; }
inline Dual operator*(Dual a, Dual b) { return {a.v * b.v, a.d * b.v + a.v * b.d}; }
inline Dual operator/(Dual a, Dual b) {
  return {a.v / b.v, (a.d * b.v - a.v * b.d) / (b.v * b.v)};
}
inline Dual sqrt(Dual a) {
  const double r = std::sqrt(a.v);
  return {r, a.d / (2.0 * r)};
}

inline double value_of(double x) { return x; }
inline double value_of(Dual x) { return x.v; }

}  // namespace orthoglide
