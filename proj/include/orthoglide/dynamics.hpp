#pragma once

#include <array>
#include <cmath>
#include <limits>

#include "orthoglide/errors.hpp"
#include "orthoglide/kinematics.hpp"
#include "orthoglide/types.hpp"

// Inverse dynamic model
//   Gamma = D^T (F_P + sum_i J_i^-T H_i)
// with F_P = m_platform (xddot - g) and H_i the generalized forces of each
// leg's 3-joint serial chain (prismatic + two passive revolutes carrying the
// bar), computed with the recursive Newton-Euler algorithm. Two entry points
// are provided: from the Cartesian state directly (scheme 2, no forward
// kinematic solve) and from the joint state (scheme 1).

namespace orthoglide {

// Per-invocation instrumentation for scheme comparisons.
struct DynamicsCounters {
  int fk_solves = 0;
  int leg_ne_calls = 0;
};

inline Vec3 platform_wrench(const CartesianState& state, const DynParams& dyn) {
  return dyn.m_platform * (state.acc - dyn.gravity);
}

namespace detail {

// Gravity vector expressed in the leg-local axes (ex,ey,ez), (ey,ez,ex),
// (ez,ex,ey) for legs 1..3.
inline Vec3 leg_local_gravity(int leg, const Vec3& g) {
  switch (leg) {
    case 0: return g;
    case 1: return Vec3(g.y(), g.z(), g.x());
    default: return Vec3(g.z(), g.x(), g.y());
  }
}

// Leg-local point expressed in global coordinates is not needed by the
// dynamics; only directions matter (the chain is translationally invariant).

}  // namespace detail

// Newton-Euler generalized forces of one leg chain, in leg-local terms.
// Joint order matches leg_jacobian_inv rows: (q, theta2, theta3).
// The chain: prismatic along z carrying m_foot + m_bar/2, revolute about -y
// (theta2), revolute about the rotated -z (theta3), bar of length d4 along
// the rotated x carrying m_bar/2 at its tip plus an optional second moment
// perpendicular to the bar.
inline Vec3 leg_dynamics(LegIndex leg, const LegTrig& trig, const Vec3& rates,
                         const Vec3& accels, const DynParams& dyn, double d4,
                         DynamicsCounters* counters = nullptr) {
  if (counters) counters->leg_ne_calls++;
  const double s2 = trig.s2, c2 = trig.c2, s3 = trig.s3, c3 = trig.c3;
  const double qd = rates[0], t2d = rates[1], t3d = rates[2];
  const double qdd = accels[0], t2dd = accels[1], t3dd = accels[2];

  const Vec3 u2(0.0, -1.0, 0.0);
  const Vec3 u3(s2, 0.0, -c2);
  const Vec3 bar_dir(c3 * c2, -s3, c3 * s2);

  // Outward pass: angular velocity/acceleration of the bar and linear
  // acceleration of the pivot and the bar tip. Gravity enters as a fictitious
  // base acceleration.
  const Vec3 g_local =
      detail::leg_local_gravity(static_cast<int>(leg), dyn.gravity);
  const Vec3 a_base = -g_local;
  const Vec3 omega2 = t2d * u2;
  const Vec3 omega = omega2 + t3d * u3;
  const Vec3 omega_dot = t2dd * u2 + t3dd * u3 + t3d * omega2.cross(u3);
  const Vec3 a_pivot = a_base + Vec3(0.0, 0.0, qdd);
  const Vec3 r = d4 * bar_dir;
  const Vec3 a_tip = a_pivot + omega_dot.cross(r) + omega.cross(omega.cross(r));

  // Inward pass: forces and moments transmitted through the joints.
  const double m_slider = dyn.m_foot + 0.5 * dyn.m_bar;
  const double m_tip = 0.5 * dyn.m_bar;
  const Vec3 f_tip = m_tip * a_tip;
  Vec3 n_pivot = r.cross(f_tip);
  if (dyn.rod_inertia != 0.0) {
    // inertia J about any axis perpendicular to the bar: I = J (I3 - d d^T)
    const Mat3 inertia =
        dyn.rod_inertia * (Mat3::Identity() - bar_dir * bar_dir.transpose());
    n_pivot += inertia * omega_dot + omega.cross(inertia * omega);
  }
  const Vec3 f_slider = m_slider * a_pivot;

  Vec3 h;
  h[0] = (f_tip + f_slider).z();
  h[1] = u2.dot(n_pivot);
  h[2] = u3.dot(n_pivot);
  return h;
}

namespace detail {

// Per-pose/velocity evaluation context shared by the inverse model, the mass
// matrix probes and the forward model.
struct CartesianEval {
  const MachineParams* p = nullptr;
  Pose pose;
  Vec3 vel;
  PassiveTrig trig;
  Mat3 d_inv_mat;
  Mat3 leg_jinv[3];
  Vec3 leg_qdot[3];
  Vec3 leg_qddot_bias[3];  // d/dt(J_i^-1) * xdot, the xddot-independent part
  DynamicsCounters* counters = nullptr;

  CartesianEval(const Pose& pose_, const Vec3& vel_, const MachineParams& mp,
                DynamicsCounters* counters_ = nullptr)
      : p(&mp), pose(pose_), vel(vel_), counters(counters_) {
    trig = passive_trig(pose, mp.geom);
    d_inv_mat = d_inv(pose, mp.geom);
    for (int i = 0; i < 3; ++i) {
      const auto [jinv, jinv_dot] = leg_jacobian_inv_with_rate(
          pose, vel, mp.geom, static_cast<LegIndex>(i));
      leg_jinv[i] = jinv;
      leg_qdot[i] = jinv * vel;
      leg_qddot_bias[i] = jinv_dot * vel;
    }
  }

  // F_P + sum_i J_i^-T H_i for a candidate Cartesian acceleration.
  Vec3 bracket(const Vec3& acc) const {
    Vec3 sum = p->dyn.m_platform * (acc - p->dyn.gravity);
    for (int i = 0; i < 3; ++i) {
      const Vec3 leg_acc = leg_jinv[i] * acc + leg_qddot_bias[i];
      const Vec3 h = leg_dynamics(static_cast<LegIndex>(i), trig.leg[i],
                                  leg_qdot[i], leg_acc, p->dyn, p->geom.d4,
                                  counters);
      sum += leg_jinv[i].transpose() * h;
    }
    return sum;
  }

  Mat3 cartesian_mass() const {
    const Vec3 base = bracket(Vec3::Zero());
    Mat3 a;
    for (int k = 0; k < 3; ++k) {
      a.col(k) = bracket(Vec3::Unit(k)) - base;
    }
    return a;
  }
};

}  // namespace detail

// Scheme 2: inverse dynamics entered from the Cartesian state only.
inline Torques inverse_dynamics_cartesian(const CartesianState& state,
                                          const MachineParams& p,
                                          DynamicsCounters* counters = nullptr) {
  detail::CartesianEval eval(state.pose, state.vel, p, counters);
  if (std::abs(eval.d_inv_mat.determinant()) < kSingularityThreshold) {
    throw NearSingular("inverse dynamics at a singular pose");
  }
  const Mat3 d_fwd = eval.d_inv_mat.inverse();
  return d_fwd.transpose() * eval.bracket(state.acc);
}

// Scheme 1: same physical model entered from joint space through the forward
// kinematic model and its differentials.
inline Torques inverse_dynamics_joint(const ActiveJoints& q, const Vec3& qdot,
                                      const Vec3& qddot, const MachineParams& p,
                                      DynamicsCounters* counters = nullptr) {
  const Pose pose = forward_kinematics(q, p.geom);
  if (counters) counters->fk_solves++;
  const Mat3 d_fwd = d_forward(pose, p.geom);
  const Vec3 xdot = d_fwd * qdot;
  const auto [di, di_dot] = d_inv_with_rate(pose, xdot, p.geom);
  const Vec3 xddot = d_fwd * (qddot - di_dot * xdot);
  CartesianState state{pose, xdot, xddot};
  return inverse_dynamics_cartesian(state, p, counters);
}

// Cartesian-side mass matrix A_c (symmetric positive definite): the bracketed
// sum in the inverse model is A_c(X) xddot + c(X, Xdot).
inline Mat3 cartesian_mass_matrix(const Pose& pose, const MachineParams& p) {
  detail::CartesianEval eval(pose, Vec3::Zero(), p);
  return eval.cartesian_mass();
}

// Actuator-space mass matrix D^T A_c (not symmetric in general).
inline Mat3 mass_matrix(const Pose& pose, const MachineParams& p) {
  detail::CartesianEval eval(pose, Vec3::Zero(), p);
  if (std::abs(eval.d_inv_mat.determinant()) < kSingularityThreshold) {
    throw NearSingular("mass matrix at a singular pose");
  }
  const Mat3 d_fwd = eval.d_inv_mat.inverse();
  return d_fwd.transpose() * eval.cartesian_mass();
}

// Plant model: xddot = A_c^-1 (D_inv^T Gamma - c(X, Xdot)).
inline Vec3 forward_dynamics(const Pose& pose, const Vec3& vel,
                             const Torques& gamma, const MachineParams& p) {
  detail::CartesianEval eval(pose, vel, p);
  if (std::abs(eval.d_inv_mat.determinant()) < kSingularityThreshold) {
    throw NearSingular("forward dynamics at a singular pose");
  }
  const Mat3 a_c = eval.cartesian_mass();
  Eigen::SelfAdjointEigenSolver<Mat3> es(0.5 * (a_c + a_c.transpose()));
  const double lmin = es.eigenvalues().minCoeff();
  const double lmax = es.eigenvalues().maxCoeff();
  if (!(lmin > 0.0) || lmax / lmin > 1e10) {
    throw IllConditioned("Cartesian mass matrix ill-conditioned");
  }
  const Vec3 c = eval.bracket(Vec3::Zero());
  return a_c.ldlt().solve(eval.d_inv_mat.transpose() * gamma - c);
}

// Total mechanical energy of the lumped-mass model.
inline double mechanical_energy(const Pose& pose, const Vec3& vel,
                                const MachineParams& p) {
  const Mat3 a_c = cartesian_mass_matrix(pose, p);
  const double kinetic = 0.5 * vel.dot(a_c * vel);

  const auto d2 = delta_squares(pose, p.geom);
  const Vec3 slider_pos[3] = {
      Vec3(0.0, 0.0, pose.z() - std::sqrt(d2[0])),
      Vec3(pose.x() - std::sqrt(d2[1]), 0.0, p.geom.a),
      Vec3(0.0, pose.y() - std::sqrt(d2[2]), p.geom.a)};
  const double m_slider = p.dyn.m_foot + 0.5 * p.dyn.m_bar;
  const double m_tip = 0.5 * p.dyn.m_bar;
  double potential = -(p.dyn.m_platform + 3.0 * m_tip) * p.dyn.gravity.dot(pose);
  for (int i = 0; i < 3; ++i) {
    potential -= m_slider * p.dyn.gravity.dot(slider_pos[i]);
  }
  return kinetic + potential;
}

}  // namespace orthoglide
