#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "orthoglide/sensors.hpp"

using namespace orthoglide;

TEST_CASE("encoder quantizes to the resolution grid") {
  EncoderConfig cfg{1e-5};
  const ActiveJoints q(0.123456, -0.123456, 0.1);
  const ActiveJoints read = encoder_read(q, cfg);
  CHECK(read[0] == Catch::Approx(0.12346).margin(1e-15));
  CHECK(read[1] == Catch::Approx(-0.12346).margin(1e-15));
  CHECK(read[2] == Catch::Approx(0.1).margin(1e-15));  // already on grid
}

TEST_CASE("encoder error is bounded by half the resolution") {
  EncoderConfig cfg{10e-6};
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> u(-0.5, 0.5);
  for (int i = 0; i < 100000; ++i) {
    const ActiveJoints q(u(rng), u(rng), u(rng));
    const ActiveJoints read = encoder_read(q, cfg);
    for (int k = 0; k < 3; ++k) {
      CHECK(std::abs(read[k] - q[k]) <= 0.5 * cfg.resolution + 1e-15);
    }
  }
}

TEST_CASE("encoder with non-positive resolution is transparent") {
  EncoderConfig cfg{0.0};
  const ActiveJoints q(0.1234567, 0.2, 0.3);
  CHECK((encoder_read(q, cfg) - q).norm() == 0.0);
}

TEST_CASE("ideal vision sensor returns the exact pose") {
  VisionConfig cfg;
  cfg.accuracy = 0.0;
  cfg.latency = 0.0;
  VisionSensor sensor(cfg);
  const Pose p(0.01, 0.02, 0.32);
  sensor.capture(0.0, p, 0.0);
  const Measurement m = sensor.read(0.0);
  CHECK(m.valid);
  CHECK((m.value - p).norm() == 0.0);
}

TEST_CASE("vision latency holds older samples") {
  VisionConfig cfg;
  cfg.accuracy = 0.0;
  cfg.rate = 400.0;
  cfg.latency = 2.5e-3;  // one sample period
  VisionSensor sensor(cfg);
  CHECK_THROWS_AS(sensor.read(0.0), NotYetAvailable);
  sensor.capture(0.0, Pose(0.0, 0.0, 0.30), 0.0);
  CHECK_THROWS_AS(sensor.read(0.0), NotYetAvailable);
  sensor.capture(2.5e-3, Pose(0.0, 0.0, 0.31), 0.0);
  const Measurement m = sensor.read(2.5e-3);  // only the t=0 sample matured
  CHECK(m.timestamp == 0.0);
  CHECK(m.value.z() == Catch::Approx(0.30));
  const Measurement m2 = sensor.read(5.0e-3);
  CHECK(m2.timestamp == Catch::Approx(2.5e-3));
}

TEST_CASE("vision noise is deterministic under the seed and bounded (uniform)") {
  VisionConfig cfg;
  cfg.accuracy = 100e-6;
  cfg.seed = 1234;
  const Pose p(0.0, 0.0, 0.30);
  VisionSensor a(cfg), b(cfg);
  for (int k = 0; k < 200; ++k) {
    const double t = k / cfg.rate;
    a.capture(t, p, 0.0);
    b.capture(t, p, 0.0);
    const Measurement ma = a.read(t), mb = b.read(t);
    CHECK((ma.value - mb.value).norm() == 0.0);
    for (int i = 0; i < 3; ++i) {
      CHECK(std::abs(ma.value[i] - p[i]) <= cfg.accuracy);
    }
  }
}

TEST_CASE("vision bias and blur shift the measurement as configured") {
  VisionConfig cfg;
  cfg.accuracy = 0.0;
  cfg.static_bias = Vec3(198e-6, 0.0, 0.0);
  cfg.blur_gain = 50e-6;
  cfg.blur_dir = Vec3(1.0, 0.0, 0.0);
  VisionSensor sensor(cfg);
  const Pose p(0.0, 0.0, 0.30);
  sensor.capture(0.0, p, 3.0);  // |accel| = 3 m/s^2
  const Measurement m = sensor.read(0.0);
  CHECK(m.value.x() - p.x() == Catch::Approx(198e-6 + 3.0 * 50e-6).margin(1e-15));
}

TEST_CASE("derivative estimator settles to zero on a constant stream") {
  DerivativeEstimator est(50.0);
  const double dt = 1.0 / 400.0;
  est.seed(Vec3(1.0, 2.0, 3.0), Vec3(0.5, 0.0, 0.0));
  Vec3 v = Vec3::Zero();
  for (int k = 0; k < 400; ++k) v = est.push(Vec3(1.0, 2.0, 3.0), dt);
  CHECK(v.norm() < 1e-9);
}

TEST_CASE("derivative estimator converges geometrically on a ramp") {
  // on a ramp the backward difference is exact, so the remaining error is the
  // low-pass transient: it shrinks by tau / (tau + dt) per update
  const double cutoff = 50.0, dt = 1.0 / 400.0;
  const double tau = 1.0 / (2.0 * M_PI * cutoff);
  const double decay = tau / (tau + dt);
  DerivativeEstimator est(cutoff);
  const Vec3 slope(0.3, -0.2, 0.1);
  Vec3 v = Vec3::Zero();
  const int updates = 20;
  for (int k = 0; k <= updates; ++k) v = est.push(k * dt * slope, dt);
  const double expect = std::pow(decay, updates);  // first push only primes
  CHECK((v - slope).norm() ==
        Catch::Approx(expect * slope.norm()).epsilon(1e-9));
  CHECK(expect < 0.01);
}

TEST_CASE("derivative estimator needs history before estimating") {
  DerivativeEstimator est(50.0);
  CHECK_FALSE(est.ready());
  CHECK_THROWS_AS(est.estimate(), InsufficientHistory);
  est.push(Vec3::Zero(), 1.0 / 400.0);
  est.push(Vec3::Zero(), 1.0 / 400.0);
  CHECK(est.ready());
  CHECK_NOTHROW(est.estimate());
}

TEST_CASE("derivative estimator stays bounded on sample-and-hold input") {
  // input held for 4 control periods at a time: raw backward differences are
  // (step / dt) every fourth sample and 0 otherwise; the low-pass keeps the
  // output below the single-sample gain alpha * step / dt
  const double cutoff = 50.0, dt = 1.0 / 400.0;
  const double tau = 1.0 / (2.0 * M_PI * cutoff);
  const double alpha = dt / (tau + dt);
  DerivativeEstimator est(cutoff);
  const double step = 1e-3;
  double worst = 0.0;
  for (int k = 0; k < 800; ++k) {
    const double held = step * (k / 4);
    const Vec3 v = est.push(Vec3(held, 0.0, 0.0), dt);
    worst = std::max(worst, std::abs(v.x()));
  }
  const double mean_rate = step / (4.0 * dt);
  CHECK(worst <= mean_rate + alpha * step / dt);
}
