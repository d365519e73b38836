#pragma once

#include <array>
#include <cmath>
#include <limits>
#include <utility>

#include "orthoglide/dual.hpp"
#include "orthoglide/errors.hpp"
#include "orthoglide/types.hpp"

// Closed-form kinematics of the Orthoglide, written as functions of the
// end-effector pose. Each leg is a cyclic permutation of one canonical leg:
// in leg-local axes (x, y, z) the actuated prismatic slides along z and the
// bar of length d4 runs from the slider to the platform with direction
//   (c2*c3, -s3, c2... ) see leg_trig below. Leg-local coordinates of the
// platform are (u, v, w) with
//   leg 1: (u, v, w) = (X, Y, Z)          axes (ex, ey, ez)
//   leg 2: (u, v, w) = (Y, Z - a, X)      axes (ey, ez, ex)
//   leg 3: (u, v, w) = (Z - a, X, Y)      axes (ez, ex, ey)
// and delta_i = sqrt(d4^2 - u^2 - v^2) is the along-axis slider-to-platform
// offset (positive in the selected assembly mode).

namespace orthoglide {

inline constexpr double kSingularityThreshold = 1e-8;  // |det D_inv| floor
inline constexpr double kLegSingularityFloor = 1e-6;   // m, floor on delta/rho

namespace detail {

// Global velocity-component index for the local (u, v, w) rates of each leg.
inline constexpr int kCol[3][3] = {{0, 1, 2}, {1, 2, 0}, {2, 0, 1}};

template <typename T>
inline void leg_local(int leg, const T& px, const T& py, const T& pz,
                      const GeomParams& g, T& u, T& v) {
  switch (leg) {
    case 0: u = px; v = py; break;
    case 1: u = py; v = pz - T(g.a); break;
    default: u = pz - T(g.a); v = px; break;
  }
}

template <typename T>
inline T leg_delta_sq(int leg, const T& px, const T& py, const T& pz,
                      const GeomParams& g) {
  T u, v;
  leg_local(leg, px, py, pz, g, u, v);
  return T(g.d4 * g.d4) - u * u - v * v;
}

using TMat3 = std::array<std::array<Dual, 3>, 3>;

}  // namespace detail

inline std::array<double, 3> delta_squares(const Pose& p, const GeomParams& g) {
  return {detail::leg_delta_sq(0, p.x(), p.y(), p.z(), g),
          detail::leg_delta_sq(1, p.x(), p.y(), p.z(), g),
          detail::leg_delta_sq(2, p.x(), p.y(), p.z(), g)};
}

inline bool reachable(const Pose& p, const GeomParams& g) {
  if (!(p.z() > 0.0)) return false;
  const auto d2 = delta_squares(p, g);
  return d2[0] > 0.0 && d2[1] > 0.0 && d2[2] > 0.0;
}

inline void require_reachable(const Pose& p, const GeomParams& g) {
  if (!reachable(p, g)) {
    throw UnreachablePose("pose outside the reachable workspace");
  }
}

// --- Inverse kinematics -----------------------------------------------------

inline ActiveJoints inverse_kinematics(const Pose& p, const GeomParams& g) {
  require_reachable(p, g);
  const auto d2 = delta_squares(p, g);
  ActiveJoints q;
  q[0] = p.z() - std::sqrt(d2[0]) - g.d6;
  q[1] = p.x() + g.a - std::sqrt(d2[1]) - g.d6;
  q[2] = p.y() + g.a - std::sqrt(d2[2]) - g.d6;
  return q;
}

// --- Forward kinematics ------------------------------------------------------

// The three sphere equations |P - B_i| = d4, written in the frame shifted by
// a along z, have centers at distance p_b[i] = q_i + d6 - a along their axes.
// Eliminating the pose leaves a quadratic in t = |P'|^2 - d4^2.
inline Pose forward_kinematics(const ActiveJoints& q, const GeomParams& g) {
  std::array<double, 3> p_b;
  for (int i = 0; i < 3; ++i) {
    p_b[i] = q[i] + g.d6 - g.a;
    if (std::abs(p_b[i]) < 1e-12) {
      throw DegenerateBranch("leg sphere center at the frame origin");
    }
  }
  const double qa = 0.25 * (1.0 / (p_b[0] * p_b[0]) + 1.0 / (p_b[1] * p_b[1]) +
                            1.0 / (p_b[2] * p_b[2]));
  const double qb = 0.5;
  const double qc =
      0.25 * (p_b[0] * p_b[0] + p_b[1] * p_b[1] + p_b[2] * p_b[2]) -
      g.d4 * g.d4;
  const double disc = qb * qb - 4.0 * qa * qc;
  if (disc < 0.0) {
    throw NoAssembly("no real forward kinematic solution");
  }
  const double sq = std::sqrt(disc);

  // Both quadratic roots can yield reachable poses whose inverse kinematics
  // reproduce q exactly: away from the singular surfaces the map from active
  // joints to poses is two-to-one. The machine operates in the assembly mode
  // with the platform furthest along +z, so among the consistent z > 0 roots
  // we keep the one with the largest z. Roots that fail the consistency check
  // (spurious solutions of the squared sphere equations) are used only as a
  // fallback ranked by residual.
  bool found = false;
  Pose best = Pose::Zero();
  double best_z = -std::numeric_limits<double>::infinity();
  double best_residual = std::numeric_limits<double>::infinity();
  const double tol = 1e-9 * std::max(1.0, q.norm());
  for (const double t : {(-qb + sq) / (2.0 * qa), (-qb - sq) / (2.0 * qa)}) {
    Pose cand;
    cand.x() = 0.5 * p_b[1] + 0.5 * t / p_b[1];
    cand.y() = 0.5 * p_b[2] + 0.5 * t / p_b[2];
    cand.z() = g.a + 0.5 * p_b[0] + 0.5 * t / p_b[0];
    if (!(cand.z() > 0.0)) continue;
    double residual = std::numeric_limits<double>::infinity();
    if (reachable(cand, g)) {
      residual = (inverse_kinematics(cand, g) - q).norm();
    }
    const bool cand_ok = residual < tol;
    const bool best_ok = best_residual < tol;
    const bool better = !found || (cand_ok && !best_ok) ||
                        (cand_ok && best_ok && cand.z() > best_z) ||
                        (!cand_ok && !best_ok && residual < best_residual);
    if (better) {
      found = true;
      best = cand;
      best_z = cand.z();
      best_residual = residual;
    }
  }
  if (!found) {
    throw AssemblyModeViolation("no forward kinematic root with z > 0");
  }
  return best;
}

// --- Instantaneous kinematics -------------------------------------------------

namespace detail {

// D_inv row i in leg-local rate order (u_dot, v_dot, w_dot): (u/delta, v/delta, 1).
template <typename T, typename Mat>
inline void fill_d_inv(const T& px, const T& py, const T& pz,
                       const GeomParams& g, Mat& m) {
  using std::sqrt;
  for (int i = 0; i < 3; ++i) {
    T u, v;
    leg_local(i, px, py, pz, g, u, v);
    const T delta = sqrt(T(g.d4 * g.d4) - u * u - v * v);
    m[i][kCol[i][0]] = u / delta;
    m[i][kCol[i][1]] = v / delta;
    m[i][kCol[i][2]] = T(1.0);
  }
}

// Rows of the leg inverse instantaneous kinematic matrix in local rate order:
//   q_dot     = ( u/delta,            v/delta,  1 )
//   theta2dot = ( -1/delta, -u*v/(delta*rho^2), 0 )
//   theta3dot = (        0,             -1/rho, 0 )
// with rho = sqrt(d4^2 - v^2). Obtained by differentiating the closure
// equations; row 1 is shared with the corresponding row of D_inv.
template <typename T, typename Mat>
inline void fill_leg_jacobian_inv(int leg, const T& px, const T& py,
                                  const T& pz, const GeomParams& g, Mat& m) {
  using std::sqrt;
  T u, v;
  leg_local(leg, px, py, pz, g, u, v);
  const T rho2 = T(g.d4 * g.d4) - v * v;
  const T rho = sqrt(rho2);
  const T delta = sqrt(rho2 - u * u);
  if (value_of(delta) < kLegSingularityFloor ||
      value_of(rho) < kLegSingularityFloor) {
    throw LegSingularity("leg passive-joint denominator near zero");
  }
  const int cu = kCol[leg][0], cv = kCol[leg][1], cw = kCol[leg][2];
  m[0][cu] = u / delta;
  m[0][cv] = v / delta;
  m[0][cw] = T(1.0);
  m[1][cu] = T(-1.0) / delta;
  m[1][cv] = -u * v / (delta * rho2);
  m[1][cw] = T(0.0);
  m[2][cu] = T(0.0);
  m[2][cv] = T(-1.0) / rho;
  m[2][cw] = T(0.0);
}

using DMat = std::array<std::array<double, 3>, 3>;

inline Mat3 to_mat3(const DMat& m) {
  Mat3 out;
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) out(r, c) = m[r][c];
  return out;
}

// Evaluate value and exact time derivative of a matrix-valued map of the pose
// along the velocity xdot.
template <typename Fill>
inline std::pair<Mat3, Mat3> with_rate(const Pose& p, const Vec3& xdot,
                                       Fill fill) {
  std::array<std::array<Dual, 3>, 3> m{};
  fill(Dual(p.x(), xdot.x()), Dual(p.y(), xdot.y()), Dual(p.z(), xdot.z()), m);
  Mat3 val, dot;
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) {
      val(r, c) = m[r][c].v;
      dot(r, c) = m[r][c].d;
    }
  return {val, dot};
}

}  // namespace detail

// Inverse instantaneous kinematic matrix: q_dot = d_inv(pose) * x_dot.
inline Mat3 d_inv(const Pose& p, const GeomParams& g) {
  require_reachable(p, g);
  detail::DMat m{};
  detail::fill_d_inv(p.x(), p.y(), p.z(), g, m);
  return detail::to_mat3(m);
}

// d_inv together with its time derivative along xdot.
inline std::pair<Mat3, Mat3> d_inv_with_rate(const Pose& p, const Vec3& xdot,
                                             const GeomParams& g) {
  require_reachable(p, g);
  return detail::with_rate(p, xdot, [&g](auto px, auto py, auto pz, auto& m) {
    detail::fill_d_inv(px, py, pz, g, m);
  });
}

// Forward instantaneous kinematic matrix D = d_inv^-1. Degenerate in two
// ways: |det d_inv| below the threshold (parallel singularity), or a leg at
// full extension, delta_i -> 0, where entries of d_inv blow up and D itself
// loses rank (serial / boundary singularity).
inline Mat3 d_forward(const Pose& p, const GeomParams& g,
                      double det_threshold = kSingularityThreshold) {
  const auto d2 = delta_squares(p, g);
  for (const double v : d2) {
    if (std::sqrt(v) < kLegSingularityFloor) {
      throw NearSingular("workspace-boundary singularity: leg fully extended");
    }
  }
  const Mat3 di = d_inv(p, g);
  if (std::abs(di.determinant()) < det_threshold) {
    throw NearSingular("inverse instantaneous kinematic matrix near singular");
  }
  return di.inverse();
}

// Sines and cosines of the passive revolute angles, from the pose alone.
inline PassiveTrig passive_trig(const Pose& p, const GeomParams& g) {
  require_reachable(p, g);
  PassiveTrig out;
  for (int i = 0; i < 3; ++i) {
    double u, v;
    detail::leg_local(i, p.x(), p.y(), p.z(), g, u, v);
    const double rho = std::sqrt(g.d4 * g.d4 - v * v);
    const double delta = std::sqrt(rho * rho - u * u);
    out.leg[i].s3 = -v / g.d4;
    out.leg[i].c3 = rho / g.d4;
    out.leg[i].s2 = delta / rho;
    out.leg[i].c2 = u / rho;
  }
  return out;
}

// Passive angles reconstructed as angles (logging/diagnostics only).
inline std::pair<double, double> leg_angles(const Pose& p, const GeomParams& g,
                                            LegIndex leg) {
  const PassiveTrig t = passive_trig(p, g);
  const LegTrig& lt = t.leg[static_cast<int>(leg)];
  return {std::atan2(lt.s2, lt.c2), std::atan2(lt.s3, lt.c3)};
}

// Leg inverse instantaneous kinematic matrix: (q_dot, theta2_dot, theta3_dot)
// = J_i^-1 * x_dot.
inline Mat3 leg_jacobian_inv(const Pose& p, const GeomParams& g, LegIndex leg) {
  require_reachable(p, g);
  detail::DMat m{};
  detail::fill_leg_jacobian_inv(static_cast<int>(leg), p.x(), p.y(), p.z(), g, m);
  return detail::to_mat3(m);
}

inline std::pair<Mat3, Mat3> leg_jacobian_inv_with_rate(const Pose& p,
                                                        const Vec3& xdot,
                                                        const GeomParams& g,
                                                        LegIndex leg) {
  require_reachable(p, g);
  const int i = static_cast<int>(leg);
  return detail::with_rate(p, xdot, [&g, i](auto px, auto py, auto pz, auto& m) {
    detail::fill_leg_jacobian_inv(i, px, py, pz, g, m);
  });
}

// Leg joint rates: q_dot_i = J_i^-1 x_dot.
inline Vec3 leg_rates(const Pose& p, const Vec3& xdot, const GeomParams& g,
                      LegIndex leg) {
  return leg_jacobian_inv(p, g, leg) * xdot;
}

// Leg joint accelerations: q_ddot_i = J_i^-1 x_ddot + d/dt(J_i^-1) x_dot.
inline Vec3 leg_accels(const Pose& p, const Vec3& xdot, const Vec3& xddot,
                       const GeomParams& g, LegIndex leg) {
  const auto [jinv, jinv_dot] = leg_jacobian_inv_with_rate(p, xdot, g, leg);
  return jinv * xddot + jinv_dot * xdot;
}

// Actuated joint rates and accelerations from the Cartesian state.
inline std::pair<Vec3, Vec3> global_rates_accels(const Pose& p, const Vec3& xdot,
                                                 const Vec3& xddot,
                                                 const GeomParams& g) {
  const auto [di, di_dot] = d_inv_with_rate(p, xdot, g);
  return {di * xdot, di * xddot + di_dot * xdot};
}

}  // namespace orthoglide
