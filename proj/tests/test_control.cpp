#include <catch2/catch_amalgamated.hpp>

#include <complex>

#include "orthoglide/control.hpp"
#include "orthoglide/verify.hpp"

using namespace orthoglide;

namespace {
const MachineParams kParams{};
}

TEST_CASE("gain formulas from the tuning bandwidth") {
  const double w = 2.0 * M_PI * 6.0;
  const Gains pid = gains_from_bandwidth(6.0, PidKind::Pid);
  CHECK(pid.kd == Catch::Approx(3.0 * w).epsilon(1e-14));
  CHECK(pid.kp == Catch::Approx(3.0 * w * w).epsilon(1e-14));
  CHECK(pid.ki == Catch::Approx(w * w * w).epsilon(1e-14));
  const Gains pd = gains_from_bandwidth(6.0, PidKind::Pd);
  CHECK(pd.kd == Catch::Approx(2.0 * w).epsilon(1e-14));
  CHECK(pd.kp == Catch::Approx(w * w).epsilon(1e-14));
  CHECK(pd.ki == 0.0);
  // continuity toward zero bandwidth
  const Gains tiny = gains_from_bandwidth(1e-9, PidKind::Pid);
  CHECK(tiny.kp < 1e-12);
  CHECK(tiny.kd < 1e-6);
  CHECK_THROWS_AS(gains_from_bandwidth(0.0), OutOfRange);
}

TEST_CASE("double-integrator regulation matches the triple-pole closed form") {
  // triple pole at the bandwidth, from (x, v, I) = (1, 0, 0):
  // x(t) = e^{-wt} (1 + wt - (wt)^2), which dips to -5 e^{-3} at wt = 3
  // before settling; verify by simulating x_ddot = -kp x - kd x_dot - ki I
  const Gains g = gains_from_bandwidth(6.0, PidKind::Pid);
  double x = 1.0, v = 0.0, integ = 0.0;
  const double dt = 1e-5;
  double min_x = x;
  for (double t = 0.0; t < 2.0; t += dt) {
    const double a = -g.kp * x - g.kd * v - g.ki * integ;
    integ += x * dt;
    x += v * dt + 0.5 * a * dt * dt;
    v += a * dt;
    min_x = std::min(min_x, x);
  }
  CHECK(min_x == Catch::Approx(-5.0 * std::exp(-3.0)).epsilon(1e-3));
  CHECK(std::abs(x) < 1e-4);  // converged
}

TEST_CASE("error-rejection corner matches the closed-form sensitivity") {
  // sensitivity S(s) = s^3 / (s + w)^3; its -3 dB corner sits at
  // w_c = w * sqrt(c/(1-c)), c = 2^(-1/3). Sweep |S(j w)| numerically and
  // locate the crossing; it must land within 1% of the analytic corner and
  // within a factor ~2 of the nominal bandwidth.
  const double f = 6.0, w = 2.0 * M_PI * f;
  const auto s_mag = [&](double wx) {
    const std::complex<double> s(0.0, wx);
    return std::abs(s * s * s / std::pow(s + w, 3.0));
  };
  double lo = 0.01 * w, hi = 100.0 * w;
  for (int it = 0; it < 200; ++it) {
    const double mid = std::sqrt(lo * hi);
    (s_mag(mid) < M_SQRT1_2 ? lo : hi) = mid;
  }
  const double corner = std::sqrt(lo * hi);
  const double c = std::pow(2.0, -1.0 / 3.0);
  const double analytic = w * std::sqrt(c / (1.0 - c));
  CHECK(corner == Catch::Approx(analytic).epsilon(1e-2));
  CHECK(corner / w > 1.0);
  CHECK(corner / w < 2.5);
}

TEST_CASE("single-axis controller: zero error gives zero torque") {
  ControllerConfig cfg{gains_from_bandwidth(6.0)};
  SingleAxisController ctrl(cfg);
  const JointSetpoint sp{ActiveJoints(0.01, 0.02, 0.03), Vec3::Zero(), Vec3::Zero()};
  const double dt = 1.0 / 400.0;
  for (int k = 0; k < 10; ++k) {
    const ControlOutput out = ctrl.step(sp, sp.q, dt);
    CHECK(out.torque.norm() < 1e-12);
  }
}

TEST_CASE("single-axis controller: per-axis decoupling") {
  ControllerConfig cfg{gains_from_bandwidth(6.0)};
  SingleAxisController ctrl(cfg);
  JointSetpoint sp{ActiveJoints(0.01, 0.02, 0.03), Vec3::Zero(), Vec3::Zero()};
  ActiveJoints meas = sp.q;
  meas[0] -= 1e-3;  // error on axis 1 only
  const double dt = 1.0 / 400.0;
  ControlOutput out;
  for (int k = 0; k < 5; ++k) out = ctrl.step(sp, meas, dt);
  CHECK(std::abs(out.torque[0]) > 0.0);
  CHECK(out.torque[1] == 0.0);
  CHECK(out.torque[2] == 0.0);
}

TEST_CASE("single-axis controller: integral accumulator is clamped") {
  ControllerConfig cfg{gains_from_bandwidth(6.0)};
  cfg.integral_limit = 1e-4;
  cfg.torque_limit = 0.0;  // keep integration active
  SingleAxisController ctrl(cfg);
  const JointSetpoint sp{ActiveJoints::Zero(), Vec3::Zero(), Vec3::Zero()};
  const ActiveJoints meas(-1e-2, 0.0, 0.0);  // persistent error
  const double dt = 1.0 / 400.0;
  ControlOutput prev, cur;
  for (int k = 0; k < 2000; ++k) {
    prev = cur;
    cur = ctrl.step(sp, meas, dt);
  }
  // with the accumulator saturated, the torque has stopped growing
  CHECK(cur.torque[0] == Catch::Approx(prev.torque[0]).margin(1e-12));
  // and equals the P term plus the clamped I term
  const double expect =
      cfg.reflected_mass * (cfg.gains.kp * 1e-2 + cfg.gains.ki * cfg.integral_limit);
  CHECK(cur.torque[0] == Catch::Approx(expect).epsilon(1e-9));
}

TEST_CASE("saturation freezes the integral (conditional integration)") {
  ControllerConfig cfg{gains_from_bandwidth(6.0)};
  cfg.torque_limit = 1.0;  // immediately saturated by the P term
  SingleAxisController ctrl(cfg);
  const JointSetpoint sp{ActiveJoints::Zero(), Vec3::Zero(), Vec3::Zero()};
  const ActiveJoints meas(-1e-2, 0.0, 0.0);
  const double dt = 1.0 / 400.0;
  for (int k = 0; k < 100; ++k) {
    const ControlOutput out = ctrl.step(sp, meas, dt);
    CHECK(std::abs(out.torque[0]) <= cfg.torque_limit);
  }
}

TEST_CASE("joint CTC: perfect tracking reduces to the model feedforward") {
  ControllerConfig cfg{gains_from_bandwidth(6.0)};
  JointCtcController ctrl(cfg, kParams);
  const Pose pose(0.01, -0.02, 0.33);
  const Vec3 xdot(0.05, 0.1, -0.02), xddot(0.5, -1.0, 0.8);
  JointSetpoint sp;
  sp.q = inverse_kinematics(pose, kParams.geom);
  std::tie(sp.qdot, sp.qddot) =
      global_rates_accels(pose, xdot, xddot, kParams.geom);
  const double dt = 1.0 / 400.0;
  ControlOutput out;
  for (int k = 0; k < 5; ++k) out = ctrl.step(sp, sp, sp.q, dt);
  const Torques expect = inverse_dynamics_joint(sp.q, sp.qdot, sp.qddot, kParams);
  CHECK((out.torque - expect).norm() < 1e-9 * expect.norm());
}

TEST_CASE("joint CTC: static setpoint at rest is gravity compensation") {
  ControllerConfig cfg{gains_from_bandwidth(6.0)};
  JointCtcController ctrl(cfg, kParams);
  const Pose pose(0.0, 0.0, 0.33);
  JointSetpoint sp{inverse_kinematics(pose, kParams.geom), Vec3::Zero(),
                   Vec3::Zero()};
  ControlOutput out;
  for (int k = 0; k < 5; ++k) out = ctrl.step(sp, sp, sp.q, 1.0 / 400.0);
  CHECK(forward_dynamics(pose, Vec3::Zero(), out.torque, kParams).norm() < 1e-8);
}

TEST_CASE("Cartesian CTC: zero error gives the pure Cartesian feedforward") {
  ControllerConfig cfg{gains_from_bandwidth(6.0)};
  CartesianCtcFkmController ctrl(cfg, kParams);
  const Pose pose(0.01, 0.02, 0.32);
  Setpoint sp{pose, Vec3(0.1, 0.0, -0.05), Vec3(1.0, -0.5, 0.2), 0.0};
  const ActiveJoints q = inverse_kinematics(pose, kParams.geom);
  ControlOutput out;
  for (int k = 0; k < 5; ++k) out = ctrl.step(sp, sp, q, 1.0 / 400.0);
  const Torques expect =
      inverse_dynamics_cartesian({sp.pos, sp.vel, sp.acc}, kParams);
  CHECK((out.torque - expect).norm() < 1e-7 * expect.norm());
}

TEST_CASE("feedforward exactness through the forward dynamics") {
  // model = plant, zero error: the commanded torque reproduces the commanded
  // acceleration through the plant
  ControllerConfig cfg{gains_from_bandwidth(6.0)};
  VisionCtcController ctrl(cfg, kParams);
  const Pose pose(-0.02, 0.01, 0.31);
  Setpoint sp{pose, Vec3(0.05, 0.1, 0.0), Vec3(-0.8, 0.3, 1.1), 0.0};
  Measurement meas{pose, 0.0, true};
  ControlOutput out;
  for (int k = 0; k < 5; ++k) out = ctrl.step(sp, sp, meas, 1.0 / 400.0);
  const Vec3 acc = forward_dynamics(pose, sp.vel, out.torque, kParams);
  CHECK((acc - sp.acc).norm() < 1e-8 * std::max(1.0, sp.acc.norm()));
}

TEST_CASE("ideal vision CTC coincides with FKM CTC under perfect encoders") {
  ControllerConfig cfg{gains_from_bandwidth(6.0)};
  CartesianCtcFkmController fkm(cfg, kParams);
  VisionCtcController vis(cfg, kParams);
  WorkspaceSampler sampler(kParams.geom, 31);
  const double dt = 1.0 / 400.0;
  const Pose base(0.0, 0.0, 0.32);
  for (int k = 0; k < 50; ++k) {
    const double t = k * dt;
    // smooth synthetic reference and a slightly off measurement trajectory
    Setpoint sp;
    sp.pos = base + 0.01 * Vec3(std::sin(3 * t), std::cos(3 * t) - 1.0, 0.0);
    sp.vel = 0.03 * Vec3(std::cos(3 * t), -std::sin(3 * t), 0.0);
    sp.acc = -0.09 * Vec3(std::sin(3 * t), std::cos(3 * t), 0.0);
    const Pose actual = sp.pos + 1e-5 * Vec3(std::sin(7 * t), 0.0, std::cos(7 * t));
    const ActiveJoints q = inverse_kinematics(actual, kParams.geom);
    const ControlOutput a = fkm.step(sp, sp, q, dt);
    const ControlOutput b = vis.step(sp, sp, {actual, t, true}, dt);
    CHECK((a.torque - b.torque).norm() < 1e-5 * std::max(1.0, a.torque.norm()));
  }
}

TEST_CASE("vision CTC falls back to feedforward without a measurement") {
  ControllerConfig cfg{gains_from_bandwidth(6.0)};
  VisionCtcController ctrl(cfg, kParams);
  const Pose pose(0.0, 0.0, 0.32);
  Setpoint sp{pose, Vec3::Zero(), Vec3::Zero(), 0.0};
  Measurement invalid;
  const ControlOutput out = ctrl.step(sp, sp, invalid, 1.0 / 400.0);
  CHECK(out.feedforward_only);
  const Torques expect =
      inverse_dynamics_cartesian({pose, Vec3::Zero(), Vec3::Zero()}, kParams);
  CHECK((out.torque - expect).norm() < 1e-12);
}

TEST_CASE("CTC fault policy: model failure returns the last valid torque") {
  ControllerConfig cfg{gains_from_bandwidth(6.0)};
  JointCtcController ctrl(cfg, kParams);
  const Pose pose(0.0, 0.0, 0.33);
  JointSetpoint sp{inverse_kinematics(pose, kParams.geom), Vec3::Zero(),
                   Vec3::Zero()};
  ControlOutput good;
  for (int k = 0; k < 3; ++k) good = ctrl.step(sp, sp, sp.q, 1.0 / 400.0);
  JointSetpoint bad = sp;
  bad.q.setConstant(10.0);  // far outside any assembly
  const ControlOutput out = ctrl.step(bad, bad, bad.q, 1.0 / 400.0);
  CHECK(out.fault);
  CHECK((out.torque - good.torque).norm() < 1e-12);
}
