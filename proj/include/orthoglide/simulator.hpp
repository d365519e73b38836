#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <optional>
#include <ostream>
#include <random>
#include <string>
#include <vector>

#include "orthoglide/control.hpp"
#include "orthoglide/dynamics.hpp"
#include "orthoglide/errors.hpp"
#include "orthoglide/sensors.hpp"
#include "orthoglide/trajectory.hpp"
#include "orthoglide/types.hpp"

// Closed-loop simulation: the plant state is Cartesian (pose, velocity),
// integrated with fixed-step RK4 through the forward dynamics; the controller
// runs at the control rate with zero-order-hold torque; sensors are sampled
// at the control instants.

namespace orthoglide {

enum class ControllerKind { SingleAxis, JointCtc, CartesianCtcFkm, VisionCtc };

inline const char* to_string(ControllerKind k) {
  switch (k) {
    case ControllerKind::SingleAxis: return "single_axis";
    case ControllerKind::JointCtc: return "joint_ctc";
    case ControllerKind::CartesianCtcFkm: return "cartesian_ctc_fkm";
    default: return "vision_ctc";
  }
}

struct PerturbationSpec {
  double geom_tolerance = 0.0;  // m, additive on each geometric length
  double dyn_tolerance = 0.0;   // fraction, multiplicative on masses/inertias
  std::uint64_t seed = 0;
};

// Identification-error model: geometric lengths offset uniformly within the
// tolerance, masses and inertias scaled by 1 +- dyn_tolerance.
inline MachineParams perturb_params(const MachineParams& true_p,
                                    const PerturbationSpec& spec) {
  std::mt19937_64 rng(spec.seed);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  MachineParams p = true_p;
  p.geom.d4 += spec.geom_tolerance * unit(rng);
  p.geom.d6 += spec.geom_tolerance * unit(rng);
  p.geom.a += spec.geom_tolerance * unit(rng);
  p.dyn.m_platform *= 1.0 + spec.dyn_tolerance * unit(rng);
  p.dyn.m_foot *= 1.0 + spec.dyn_tolerance * unit(rng);
  p.dyn.m_bar *= 1.0 + spec.dyn_tolerance * unit(rng);
  p.dyn.rod_inertia *= 1.0 + spec.dyn_tolerance * unit(rng);
  return p;
}

struct SimConfig {
  double control_rate = 400.0;  // Hz
  double plant_dt = 1e-4;       // s, must divide the control period
  ControllerKind controller = ControllerKind::VisionCtc;
  ControllerConfig ctrl{gains_from_bandwidth(6.0)};
  EncoderConfig encoder;
  VisionConfig vision;
  MachineParams true_params;
  MachineParams model_params;
  double safety_halfwidth = 0.0;  // m, 0 = auto (2 * d4 around the path start)

  void validate() const {
    if (!(control_rate > 0.0)) throw ConfigError("control_rate must be positive");
    if (!(plant_dt > 0.0)) throw ConfigError("plant_dt must be positive");
    const double period = 1.0 / control_rate;
    if (plant_dt > period * (1.0 + 1e-9)) {
      throw ConfigError("plant_dt exceeds the control period");
    }
    const double sub = period / plant_dt;
    if (std::abs(sub - std::round(sub)) > 1e-6) {
      throw ConfigError("control period must be an integer multiple of plant_dt");
    }
  }
};

struct SimRecord {
  double t;
  Pose ref;
  Pose truth;
  Pose meas;
  ActiveJoints q_true;
  Torques torque;
  bool fault = false;
  bool ff_only = false;
};

struct SimLog {
  double control_rate = 0.0;
  std::vector<SimRecord> records;
};

struct Metrics {
  double static_accuracy = 0.0;   // mean of ||X_true - X_ref||, m
  double dynamic_accuracy = 0.0;  // standard deviation of the same series, m
  double max_error = 0.0;         // m
  Vec3 static_per_axis = Vec3::Zero();
  Vec3 dynamic_per_axis = Vec3::Zero();
};

// Mean / population standard deviation / max of the Euclidean tracking error
// over samples with t >= settle_skip.
inline Metrics compute_metrics(const SimLog& log, double settle_skip = 0.0) {
  std::size_t n = 0;
  Vec3 sum = Vec3::Zero();
  double esum = 0.0, emax = 0.0;
  for (const SimRecord& r : log.records) {
    if (r.t < settle_skip) continue;
    const Vec3 err = r.truth - r.ref;
    const double e = err.norm();
    sum += err.cwiseAbs();
    esum += e;
    emax = std::max(emax, e);
    ++n;
  }
  if (n == 0) throw EmptyWindow("no log samples after settle_skip");
  Metrics m;
  const double inv = 1.0 / static_cast<double>(n);
  m.static_accuracy = esum * inv;
  m.max_error = emax;
  m.static_per_axis = sum * inv;
  // second pass for the spread so constant errors come out as exactly zero
  Vec3 var = Vec3::Zero();
  double evar = 0.0;
  for (const SimRecord& r : log.records) {
    if (r.t < settle_skip) continue;
    const Vec3 err = r.truth - r.ref;
    const double de = err.norm() - m.static_accuracy;
    evar += de * de;
    const Vec3 d = err.cwiseAbs() - m.static_per_axis;
    var += d.cwiseProduct(d);
  }
  m.dynamic_accuracy = std::sqrt(evar * inv);
  m.dynamic_per_axis = (var * inv).cwiseSqrt();
  return m;
}

namespace detail {

inline void rk4_step(Pose& x, Vec3& v, const Torques& tau,
                     const MachineParams& p, double dt) {
  const auto f = [&](const Pose& xs, const Vec3& vs) {
    return forward_dynamics(xs, vs, tau, p);
  };
  const Vec3 k1x = v, k1v = f(x, v);
  const Vec3 k2x = v + 0.5 * dt * k1v, k2v = f(x + 0.5 * dt * k1x, v + 0.5 * dt * k1v);
  const Vec3 k3x = v + 0.5 * dt * k2v, k3v = f(x + 0.5 * dt * k2x, v + 0.5 * dt * k2v);
  const Vec3 k4x = v + dt * k3v, k4v = f(x + dt * k3x, v + dt * k3v);
  x += dt / 6.0 * (k1x + 2.0 * k2x + 2.0 * k3x + k4x);
  v += dt / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v);
}

struct JointReference {
  JointSetpoint now, mid;
};

inline JointSetpoint to_joint_setpoint(const Setpoint& sp, const GeomParams& g) {
  JointSetpoint js;
  js.q = inverse_kinematics(sp.pos, g);
  const auto [qd, qdd] = global_rates_accels(sp.pos, sp.vel, sp.acc, g);
  js.qdot = qd;
  js.qddot = qdd;
  return js;
}

}  // namespace detail

inline SimLog run_simulation(const SimConfig& cfg, const Path& path) {
  cfg.validate();
  const double period = 1.0 / cfg.control_rate;
  const int substeps = static_cast<int>(std::round(period / cfg.plant_dt));
  const double dt = period / substeps;
  const int n_steps =
      static_cast<int>(std::ceil(path.duration() * cfg.control_rate - 1e-9));
  const double t_end = path.duration();

  Pose x = path.start();
  Vec3 v = Vec3::Zero();
  double plant_accel_mag = 0.0;

  const double halfwidth =
      cfg.safety_halfwidth > 0.0 ? cfg.safety_halfwidth : 2.0 * cfg.true_params.geom.d4;
  const Pose box_center = x;

  SingleAxisController single(cfg.ctrl);
  JointCtcController joint(cfg.ctrl, cfg.model_params);
  CartesianCtcFkmController cart(cfg.ctrl, cfg.model_params);
  VisionCtcController vision_ctrl(cfg.ctrl, cfg.model_params);
  VisionSensor vision(cfg.vision);

  SimLog log;
  log.control_rate = cfg.control_rate;
  log.records.reserve(n_steps + 1);

  Torques tau = Torques::Zero();
  for (int k = 0; k <= n_steps; ++k) {
    const double t = k * period;
    const Setpoint sp = path.sample(std::min(t, t_end));
    const Setpoint sp_mid = path.sample(std::min(t + 0.5 * period, t_end));

    const ActiveJoints q_true = inverse_kinematics(x, cfg.true_params.geom);
    const ActiveJoints q_meas = encoder_read(q_true, cfg.encoder);

    Measurement vis_meas;
    if (cfg.controller == ControllerKind::VisionCtc) {
      vision.capture(t, x, plant_accel_mag);
      try {
        vis_meas = vision.read(t);
      } catch (const NotYetAvailable&) {
        vis_meas.valid = false;
      }
    }

    ControlOutput out;
    if (k < n_steps) {  // final record repeats the last held torque
      switch (cfg.controller) {
        case ControllerKind::SingleAxis: {
          const auto js = detail::to_joint_setpoint(sp, cfg.model_params.geom);
          out = single.step(js, q_meas, period);
          break;
        }
        case ControllerKind::JointCtc: {
          const auto js = detail::to_joint_setpoint(sp, cfg.model_params.geom);
          const auto js_mid =
              detail::to_joint_setpoint(sp_mid, cfg.model_params.geom);
          out = joint.step(js, js_mid, q_meas, period);
          break;
        }
        case ControllerKind::CartesianCtcFkm:
          out = cart.step(sp, sp_mid, q_meas, period);
          break;
        case ControllerKind::VisionCtc:
          out = vision_ctrl.step(sp, sp_mid, vis_meas, period);
          break;
      }
      tau = out.torque;
    }

    SimRecord rec;
    rec.t = t;
    rec.ref = sp.pos;
    rec.truth = x;
    rec.q_true = q_true;
    rec.torque = tau;
    rec.fault = out.fault;
    rec.ff_only = out.feedforward_only;
    if (cfg.controller == ControllerKind::VisionCtc) {
      rec.meas = vis_meas.valid ? vis_meas.value : x;
    } else {
      try {
        rec.meas = forward_kinematics(q_meas, cfg.model_params.geom);
      } catch (const Error&) {
        rec.meas = x;
      }
    }
    log.records.push_back(rec);

    if (k == n_steps) break;
    for (int s = 0; s < substeps; ++s) {
      detail::rk4_step(x, v, tau, cfg.true_params, dt);
    }
    plant_accel_mag = forward_dynamics(x, v, tau, cfg.true_params).norm();

    if ((x - box_center).cwiseAbs().maxCoeff() > halfwidth ||
        !reachable(x, cfg.true_params.geom)) {
      throw SimDiverged("plant state left the safety box at t=" +
                        std::to_string(t + period));
    }
  }
  return log;
}

// CSV export: one header row, 17 significant digits, SI units.
inline void write_log_csv(const SimLog& log, std::ostream& os) {
  os << "t,ref_x,ref_y,ref_z,true_x,true_y,true_z,meas_x,meas_y,meas_z,"
        "q1,q2,q3,tau1,tau2,tau3,fault,ff_only\n";
  char buf[64];
  const auto put = [&](double v, char sep) {
    std::snprintf(buf, sizeof(buf), "%.17g%c", v, sep);
    os << buf;
  };
  for (const SimRecord& r : log.records) {
    put(r.t, ',');
    for (int i = 0; i < 3; ++i) put(r.ref[i], ',');
    for (int i = 0; i < 3; ++i) put(r.truth[i], ',');
    for (int i = 0; i < 3; ++i) put(r.meas[i], ',');
    for (int i = 0; i < 3; ++i) put(r.q_true[i], ',');
    for (int i = 0; i < 3; ++i) put(r.torque[i], ',');
    os << (r.fault ? 1 : 0) << ',' << (r.ff_only ? 1 : 0) << '\n';
  }
}

}  // namespace orthoglide
