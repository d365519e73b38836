#pragma once

#include <algorithm>
#include <cmath>
#include <utility>

#include "orthoglide/dynamics.hpp"
#include "orthoglide/errors.hpp"
#include "orthoglide/kinematics.hpp"
#include "orthoglide/sensors.hpp"
#include "orthoglide/types.hpp"

// The four control schemes: single-axis joint PID, joint-space computed
// torque, Cartesian-space computed torque on the forward kinematic model, and
// vision-based computed torque. All share one tuning convention (triple pole
// placement at the given bandwidth) and one model interface.
//
// The computed-torque variants evaluate their feedforward at the midpoint of
// the zero-order-hold interval (the caller passes the midpoint setpoint),
// which centers the held torque on the interval and removes the first-order
// hold error. Velocity feedback differences two identically filtered streams
// (reference and measurement) so the filter lag cancels in the error.

namespace orthoglide {

struct Gains {
  double kp = 0.0;  // 1/s^2
  double kd = 0.0;  // 1/s
  double ki = 0.0;  // 1/s^3
};

enum class PidKind { Pd, Pid };

// Pole placement on the double-integrator error dynamics, all closed-loop
// poles at w = 2*pi*f.
inline Gains gains_from_bandwidth(double f_hz, PidKind kind = PidKind::Pid) {
  if (!(f_hz > 0.0)) throw OutOfRange("bandwidth must be positive");
  const double w = 2.0 * M_PI * f_hz;
  if (kind == PidKind::Pd) return {w * w, 2.0 * w, 0.0};
  return {3.0 * w * w, 3.0 * w, w * w * w};
}

struct ControllerConfig {
  Gains gains;
  double derivative_cutoff_hz = 50.0;
  double torque_limit = 0.0;    // N, <= 0 disables clamping
  double integral_limit = 0.0;  // per-axis bound on the accumulator, <= 0 disables
  double reflected_mass = 5.0;  // kg, single-axis torque scaling
};

struct ControlOutput {
  Torques torque = Torques::Zero();
  bool fault = false;        // model failure, last valid torque returned
  bool feedforward_only = false;  // no measurement yet
};

struct JointSetpoint {
  ActiveJoints q;
  Vec3 qdot;
  Vec3 qddot;
};

namespace detail {

// Shared PID state: integral accumulator plus the two matched derivative
// filters. reset() zeroes everything.
struct PidChannel {
  explicit PidChannel(double cutoff_hz)
      : ref_est(cutoff_hz), meas_est(cutoff_hz) {}

  Vec3 integ = Vec3::Zero();
  DerivativeEstimator ref_est;
  DerivativeEstimator meas_est;
  bool primed = false;

  void prime(const Vec3& ref, const Vec3& ref_rate, const Vec3& meas) {
    ref_est.seed(ref, ref_rate);
    meas_est.seed(meas, ref_rate);
    primed = true;
  }

  // Returns (error, error_rate); the integral is committed separately so
  // saturation can freeze it.
  std::pair<Vec3, Vec3> errors(const Vec3& ref, const Vec3& meas, double dt) {
    const Vec3 v_ref = ref_est.push(ref, dt);
    const Vec3 v_meas = meas_est.push(meas, dt);
    return {ref - meas, v_ref - v_meas};
  }

  void commit_integral(const Vec3& error, double dt, double limit,
                       const Eigen::Array<bool, 3, 1>& saturated) {
    for (int i = 0; i < 3; ++i) {
      if (saturated[i]) continue;  // conditional integration
      integ[i] += error[i] * dt;
      if (limit > 0.0) integ[i] = std::clamp(integ[i], -limit, limit);
    }
  }

  void reset() {
    integ.setZero();
    primed = false;
  }
};

inline Eigen::Array<bool, 3, 1> clamp_torque(Torques& tau, double limit) {
  Eigen::Array<bool, 3, 1> sat;
  sat.setConstant(false);
  if (limit <= 0.0) return sat;
  for (int i = 0; i < 3; ++i) {
    if (std::abs(tau[i]) > limit) {
      tau[i] = std::copysign(limit, tau[i]);
      sat[i] = true;
    }
  }
  return sat;
}

}  // namespace detail

// Per-axis torque PID on the joint error; no model terms. Gains are scaled by
// a configured reflected mass so the bandwidth tuning is dimensionally
// meaningful for a torque output.
class SingleAxisController {
 public:
  explicit SingleAxisController(const ControllerConfig& cfg)
      : cfg_(cfg), pid_(cfg.derivative_cutoff_hz) {}

  ControlOutput step(const JointSetpoint& sp, const ActiveJoints& q_meas,
                     double dt) {
    if (!pid_.primed) pid_.prime(sp.q, sp.qdot, q_meas);
    const auto [e, edot] = pid_.errors(sp.q, q_meas, dt);
    ControlOutput out;
    out.torque = cfg_.reflected_mass *
                 (cfg_.gains.kp * e + cfg_.gains.kd * edot +
                  cfg_.gains.ki * pid_.integ);
    const auto sat = detail::clamp_torque(out.torque, cfg_.torque_limit);
    pid_.commit_integral(e, dt, cfg_.integral_limit, sat);
    return out;
  }

  void reset() { pid_.reset(); }

 private:
  ControllerConfig cfg_;
  detail::PidChannel pid_;
};

// Joint-space computed torque: PID on the joint error drives a commanded
// joint acceleration fed through the scheme-1 inverse dynamics.
class JointCtcController {
 public:
  JointCtcController(const ControllerConfig& cfg, const MachineParams& model)
      : cfg_(cfg), model_(model), pid_(cfg.derivative_cutoff_hz) {}

  ControlOutput step(const JointSetpoint& sp, const JointSetpoint& sp_mid,
                     const ActiveJoints& q_meas, double dt) {
    if (!pid_.primed) pid_.prime(sp.q, sp.qdot, q_meas);
    const auto [e, edot] = pid_.errors(sp.q, q_meas, dt);
    const Vec3 qdd_cmd = sp_mid.qddot + cfg_.gains.kd * edot +
                         cfg_.gains.kp * e + cfg_.gains.ki * pid_.integ;
    ControlOutput out;
    try {
      out.torque = inverse_dynamics_joint(sp_mid.q - e, sp_mid.qdot - edot,
                                          qdd_cmd, model_);
    } catch (const Error&) {
      out.torque = last_torque_;
      out.fault = true;
      return out;
    }
    const auto sat = detail::clamp_torque(out.torque, cfg_.torque_limit);
    pid_.commit_integral(e, dt, cfg_.integral_limit, sat);
    last_torque_ = out.torque;
    return out;
  }

  void reset() {
    pid_.reset();
    last_torque_.setZero();
  }

 private:
  ControllerConfig cfg_;
  MachineParams model_;
  detail::PidChannel pid_;
  Torques last_torque_ = Torques::Zero();
};

namespace detail {

// Cartesian computed-torque law shared by the forward-kinematics and vision
// variants; only the origin of the pose estimate differs.
class CartesianCtcCore {
 public:
  CartesianCtcCore(const ControllerConfig& cfg, const MachineParams& model)
      : cfg_(cfg), model_(model), pid_(cfg.derivative_cutoff_hz) {}

  ControlOutput step(const Setpoint& sp, const Setpoint& sp_mid,
                     const Pose& pose_est, double dt) {
    if (!pid_.primed) pid_.prime(sp.pos, sp.vel, pose_est);
    const auto [e, edot] = pid_.errors(sp.pos, pose_est, dt);
    const Vec3 xdd_cmd = sp_mid.acc + cfg_.gains.kd * edot +
                         cfg_.gains.kp * e + cfg_.gains.ki * pid_.integ;
    ControlOutput out;
    try {
      CartesianState st{sp_mid.pos - e, sp_mid.vel - edot, xdd_cmd};
      out.torque = inverse_dynamics_cartesian(st, model_);
    } catch (const Error&) {
      out.torque = last_torque_;
      out.fault = true;
      return out;
    }
    const auto sat = clamp_torque(out.torque, cfg_.torque_limit);
    pid_.commit_integral(e, dt, cfg_.integral_limit, sat);
    last_torque_ = out.torque;
    return out;
  }

  // Model feedforward used before any measurement is available.
  ControlOutput feedforward_only(const Setpoint& sp_mid) {
    ControlOutput out;
    out.feedforward_only = true;
    try {
      CartesianState st{sp_mid.pos, sp_mid.vel, sp_mid.acc};
      out.torque = inverse_dynamics_cartesian(st, model_);
      last_torque_ = out.torque;
    } catch (const Error&) {
      out.torque = last_torque_;
      out.fault = true;
    }
    return out;
  }

  void reset() {
    pid_.reset();
    last_torque_.setZero();
  }

  const MachineParams& model() const { return model_; }

 private:
  ControllerConfig cfg_;
  MachineParams model_;
  PidChannel pid_;
  Torques last_torque_ = Torques::Zero();
};

}  // namespace detail

// Cartesian-space computed torque with the pose estimated through the
// forward kinematic model from the measured joints.
class CartesianCtcFkmController {
 public:
  CartesianCtcFkmController(const ControllerConfig& cfg,
                            const MachineParams& model)
      : core_(cfg, model) {}

  ControlOutput step(const Setpoint& sp, const Setpoint& sp_mid,
                     const ActiveJoints& q_meas, double dt) {
    Pose pose_est;
    try {
      pose_est = forward_kinematics(q_meas, core_.model().geom);
    } catch (const Error&) {
      ControlOutput out = core_.feedforward_only(sp_mid);
      out.fault = true;
      return out;
    }
    return core_.step(sp, sp_mid, pose_est, dt);
  }

  void reset() { core_.reset(); }

 private:
  detail::CartesianCtcCore core_;
};

// Vision-based computed torque: identical law, but the pose estimate is the
// (held) vision measurement. No joint sensing is used anywhere.
class VisionCtcController {
 public:
  VisionCtcController(const ControllerConfig& cfg, const MachineParams& model)
      : core_(cfg, model) {}

  ControlOutput step(const Setpoint& sp, const Setpoint& sp_mid,
                     const Measurement& meas, double dt) {
    if (!meas.valid) return core_.feedforward_only(sp_mid);
    return core_.step(sp, sp_mid, meas.value, dt);
  }

  void reset() { core_.reset(); }

 private:
  detail::CartesianCtcCore core_;
};

}  // namespace orthoglide
