#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "orthoglide/dynamics.hpp"
#include "orthoglide/kinematics.hpp"
#include "orthoglide/types.hpp"

// Self-contained verification suites: kinematic roundtrips, finite-difference
// Jacobian oracles, trig identities, dynamic-scheme equivalence and energy
// balance. Used by the CLI `verify` subcommand and by the acceptance tests.

namespace orthoglide {

struct SuiteResult {
  std::string name;
  bool pass = false;
  double worst = 0.0;      // worst observed defect, suite-specific units
  double threshold = 0.0;  // pinned pass threshold
  std::string detail;
};

// Uniform rejection sampling of reachable poses with a conditioning margin.
class WorkspaceSampler {
 public:
  WorkspaceSampler(const GeomParams& g, std::uint64_t seed, double margin = 0.25)
      : g_(g), rng_(seed), margin_(margin) {}

  Pose sample() {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    const double floor2 = (margin_ * g_.d4) * (margin_ * g_.d4);
    for (int tries = 0; tries < 10000; ++tries) {
      Pose p(0.7 * g_.d4 * u(rng_), 0.7 * g_.d4 * u(rng_),
             g_.a + 0.7 * g_.d4 * u(rng_));
      if (!(p.z() > 0.05 * g_.d4)) continue;
      // The open octant x < 0, y < 0, z < a holds the mirror assembly mode,
      // where active joints no longer determine the pose. Operation and
      // verification stay outside it so forward kinematics is single-valued.
      if (std::max({p.x(), p.y(), p.z() - g_.a}) < 0.01) continue;
      const auto d2 = delta_squares(p, g_);
      if (d2[0] > floor2 && d2[1] > floor2 && d2[2] > floor2) return p;
    }
    throw Error("workspace sampler failed to find a pose");
  }

  Vec3 unit_ball(double scale) {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    return scale * Vec3(u(rng_), u(rng_), u(rng_));
  }

 private:
  GeomParams g_;
  std::mt19937_64 rng_;
  double margin_;
};

namespace oracle {

// Central finite-difference Jacobian of the inverse kinematics.
inline Mat3 ik_jacobian_fd(const Pose& p, const GeomParams& g, double h = 1e-6) {
  Mat3 j;
  for (int c = 0; c < 3; ++c) {
    Pose lo = p, hi = p;
    lo[c] -= h;
    hi[c] += h;
    j.col(c) = (inverse_kinematics(hi, g) - inverse_kinematics(lo, g)) / (2.0 * h);
  }
  return j;
}

// Leg joint variables (q, theta2, theta3) with angles reconstructed by atan2.
inline Vec3 leg_joint_variables(const Pose& p, const GeomParams& g, LegIndex leg) {
  const ActiveJoints q = inverse_kinematics(p, g);
  const auto [theta2, theta3] = leg_angles(p, g, leg);
  return Vec3(q[static_cast<int>(leg)], theta2, theta3);
}

// Central finite-difference Jacobian of the leg joint-variable map.
inline Mat3 leg_jacobian_fd(const Pose& p, const GeomParams& g, LegIndex leg,
                            double h = 1e-6) {
  Mat3 j;
  for (int c = 0; c < 3; ++c) {
    Pose lo = p, hi = p;
    lo[c] -= h;
    hi[c] += h;
    j.col(c) =
        (leg_joint_variables(hi, g, leg) - leg_joint_variables(lo, g, leg)) /
        (2.0 * h);
  }
  return j;
}

}  // namespace oracle

// Suite 1 / acceptance 1: FK(IK(X)) = X over sampled reachable poses.
// The optional fk_geom lets the caller inject a corrupted model on the FK
// side to demonstrate that the suite catches inconsistencies.
inline SuiteResult verify_roundtrip(const GeomParams& g, std::uint64_t seed,
                                    int n = 1000,
                                    const GeomParams* fk_geom = nullptr) {
  WorkspaceSampler sampler(g, seed);
  const GeomParams& gf = fk_geom ? *fk_geom : g;
  SuiteResult r{"kinematic-roundtrip", false, 0.0, 1e-9, ""};
  for (int i = 0; i < n; ++i) {
    const Pose p = sampler.sample();
    const Pose back = forward_kinematics(inverse_kinematics(p, g), gf);
    r.worst = std::max(r.worst, (back - p).norm());
  }
  r.pass = r.worst < r.threshold;
  return r;
}

// Suite 2 / acceptance 2: d_inv against central finite differences of the
// inverse kinematics, and row sharing between J_i^-1 and d_inv.
inline SuiteResult verify_jacobians(const GeomParams& g, std::uint64_t seed,
                                    int n = 200) {
  WorkspaceSampler sampler(g, seed);
  SuiteResult r{"jacobian-oracle", false, 0.0, 1e-5, ""};
  double worst_row = 0.0;
  for (int i = 0; i < n; ++i) {
    const Pose p = sampler.sample();
    const Mat3 di = d_inv(p, g);
    const Mat3 fd = oracle::ik_jacobian_fd(p, g);
    r.worst = std::max(r.worst, (di - fd).norm() / fd.norm());
    for (int leg = 0; leg < 3; ++leg) {
      const Mat3 jinv = leg_jacobian_inv(p, g, static_cast<LegIndex>(leg));
      worst_row = std::max(worst_row,
                           (jinv.row(0) - di.row(leg)).cwiseAbs().maxCoeff());
    }
  }
  r.pass = r.worst < r.threshold && worst_row < 1e-12;
  std::ostringstream os;
  os << "row-sharing defect " << worst_row;
  r.detail = os.str();
  return r;
}

// Suite 3 / acceptance 3: s^2 + c^2 = 1 for all passive trig pairs.
inline SuiteResult verify_trig(const GeomParams& g, std::uint64_t seed,
                               int n = 1000) {
  WorkspaceSampler sampler(g, seed);
  SuiteResult r{"trig-identities", false, 0.0, 1e-12, ""};
  for (int i = 0; i < n; ++i) {
    const PassiveTrig t = passive_trig(sampler.sample(), g);
    for (int leg = 0; leg < 3; ++leg) {
      const LegTrig& lt = t.leg[leg];
      r.worst = std::max(r.worst, std::abs(lt.s2 * lt.s2 + lt.c2 * lt.c2 - 1.0));
      r.worst = std::max(r.worst, std::abs(lt.s3 * lt.s3 + lt.c3 * lt.c3 - 1.0));
    }
  }
  r.pass = r.worst < r.threshold;
  return r;
}

// Suite 4 / acceptance 4: scheme-1 and scheme-2 inverse dynamics agree on
// consistent joint/Cartesian states.
inline SuiteResult verify_scheme_equivalence(const MachineParams& p,
                                             std::uint64_t seed, int n = 100) {
  WorkspaceSampler sampler(p.geom, seed);
  SuiteResult r{"scheme-equivalence", false, 0.0, 1e-8, ""};
  for (int i = 0; i < n; ++i) {
    const Pose pose = sampler.sample();
    const Vec3 xdot = sampler.unit_ball(0.5);
    const Vec3 xddot = sampler.unit_ball(3.0);
    const Torques g2 = inverse_dynamics_cartesian({pose, xdot, xddot}, p);
    const ActiveJoints q = inverse_kinematics(pose, p.geom);
    const auto [qdot, qddot] = global_rates_accels(pose, xdot, xddot, p.geom);
    const Torques g1 = inverse_dynamics_joint(q, qdot, qddot, p);
    r.worst = std::max(r.worst, (g1 - g2).norm() / std::max(1e-12, g2.norm()));
  }
  r.pass = r.worst < r.threshold;
  return r;
}

// Suite 5 / acceptance 5: forward-inverse dynamics roundtrip plus symmetry
// and positive definiteness of the Cartesian-side mass matrix.
inline SuiteResult verify_dynamics_roundtrip(const MachineParams& p,
                                             std::uint64_t seed, int n = 100) {
  WorkspaceSampler sampler(p.geom, seed);
  SuiteResult r{"dynamics-roundtrip", false, 0.0, 1e-8, ""};
  double worst_sym = 0.0, min_eig = std::numeric_limits<double>::infinity();
  for (int i = 0; i < n; ++i) {
    const Pose pose = sampler.sample();
    const Vec3 xdot = sampler.unit_ball(0.5);
    const Vec3 xddot = sampler.unit_ball(3.0);
    const Torques tau = inverse_dynamics_cartesian({pose, xdot, xddot}, p);
    const Vec3 back = forward_dynamics(pose, xdot, tau, p);
    r.worst = std::max(r.worst, (back - xddot).norm() / std::max(1e-12, xddot.norm()));
    const Mat3 a = cartesian_mass_matrix(pose, p);
    worst_sym = std::max(worst_sym, (a - a.transpose()).norm() / a.norm());
    Eigen::SelfAdjointEigenSolver<Mat3> es(0.5 * (a + a.transpose()));
    min_eig = std::min(min_eig, es.eigenvalues().minCoeff());
  }
  r.pass = r.worst < r.threshold && worst_sym < 1e-9 && min_eig > 0.0;
  std::ostringstream os;
  os << "symmetry defect " << worst_sym << ", min eigenvalue " << min_eig;
  r.detail = os.str();
  return r;
}

// Suite 6 / acceptance 6: energy conservation of unforced, gravity-off free
// motion (RK4 at plant_dt over the stated horizon).
inline SuiteResult verify_energy(const MachineParams& params, std::uint64_t seed,
                                 double horizon = 0.5, double dt = 1e-4) {
  MachineParams p = params;
  p.dyn.gravity.setZero();
  WorkspaceSampler sampler(p.geom, seed, 0.4);
  SuiteResult r{"energy-conservation", false, 0.0, 1e-5, ""};
  Pose x = sampler.sample();
  Vec3 v = sampler.unit_ball(0.05);
  const double e0 = mechanical_energy(x, v, p);
  const auto f = [&](const Pose& xs, const Vec3& vs) {
    return forward_dynamics(xs, vs, Torques::Zero(), p);
  };
  const int steps = static_cast<int>(std::round(horizon / dt));
  for (int i = 0; i < steps; ++i) {
    const Vec3 k1x = v, k1v = f(x, v);
    const Vec3 k2x = v + 0.5 * dt * k1v, k2v = f(x + 0.5 * dt * k1x, k2x);
    const Vec3 k3x = v + 0.5 * dt * k2v, k3v = f(x + 0.5 * dt * k2x, k3x);
    const Vec3 k4x = v + dt * k3v, k4v = f(x + dt * k3x, k4x);
    x += dt / 6.0 * (k1x + 2.0 * k2x + 2.0 * k3x + k4x);
    v += dt / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v);
  }
  r.worst = std::abs(mechanical_energy(x, v, p) - e0) / std::abs(e0);
  r.pass = r.worst < r.threshold;
  return r;
}

inline std::vector<SuiteResult> run_verification(
    const MachineParams& p, const std::string& suite = "all",
    std::uint64_t seed = 1, const GeomParams* corrupt_fk_geom = nullptr) {
  std::vector<SuiteResult> out;
  const auto want = [&](const char* name) {
    return suite == "all" || suite == name;
  };
  if (want("kinematics")) {
    out.push_back(verify_roundtrip(p.geom, seed, 1000, corrupt_fk_geom));
    out.push_back(verify_trig(p.geom, seed + 1));
  }
  if (want("jacobians")) out.push_back(verify_jacobians(p.geom, seed + 2));
  if (want("dynamics")) {
    out.push_back(verify_scheme_equivalence(p, seed + 3));
    out.push_back(verify_dynamics_roundtrip(p, seed + 4));
  }
  if (want("energy")) out.push_back(verify_energy(p, seed + 5));
  return out;
}

}  // namespace orthoglide
