#pragma once

#include <cmath>
#include <cstdint>
#include <deque>
#include <random>

#include "orthoglide/errors.hpp"
#include "orthoglide/types.hpp"

// Measurement-chain models: quantizing joint encoders and a sampled, delayed,
// noisy vision pose sensor with an optional acceleration-dependent blur term.

namespace orthoglide {

struct EncoderConfig {
  double resolution = 10e-6;  // m; <= 0 disables quantization
};

// Joint encoder model: pure quantization to the resolution grid.
inline ActiveJoints encoder_read(const ActiveJoints& q, const EncoderConfig& cfg) {
  if (cfg.resolution <= 0.0) return q;
  ActiveJoints out;
  for (int i = 0; i < 3; ++i) {
    out[i] = cfg.resolution * std::round(q[i] / cfg.resolution);
  }
  return out;
}

struct VisionConfig {
  double accuracy = 100e-6;   // m, noise half-width (uniform) or 3 sigma (gaussian)
  double rate = 400.0;        // Hz
  double latency = 0.0;       // s, integer multiple of 1/rate
  Vec3 static_bias = Vec3::Zero();      // m
  double blur_gain = 0.0;     // m per (m/s^2), scales with |acceleration|
  Vec3 blur_dir = Vec3(1.0, 0.0, 0.0);  // unit direction of the blur error
  enum class Noise { Uniform, Gaussian } noise_kind = Noise::Uniform;
  std::uint64_t seed = 0;
};

struct Measurement {
  Vec3 value = Vec3::Zero();
  double timestamp = 0.0;
  bool valid = false;
};

// Sample-and-hold pose sensor. capture() is driven at the sensor's sample
// instants with the true pose and the motion intensity; read(t) returns the
// newest capture that has matured through the latency, held between samples.
//
// Noise mapping ("accuracy" -> sigma): uniform noise on [-accuracy, accuracy]
// per axis (sigma = accuracy/sqrt(3)), or gaussian with sigma = accuracy/3.
class VisionSensor {
 public:
  explicit VisionSensor(const VisionConfig& cfg) : cfg_(cfg), rng_(cfg.seed) {}

  double period() const { return 1.0 / cfg_.rate; }

  void capture(double t, const Pose& true_pose, double accel_mag) {
    Vec3 value = true_pose + cfg_.static_bias +
                 cfg_.blur_gain * accel_mag * cfg_.blur_dir;
    for (int i = 0; i < 3; ++i) value[i] += draw();
    samples_.push_back({t, value});
    while (samples_.size() > 4096) samples_.pop_front();
  }

  Measurement read(double t) const {
    const double cutoff = t - cfg_.latency + 1e-12;
    const Sample* last = nullptr;
    for (const Sample& s : samples_) {
      if (s.t <= cutoff) last = &s;
      else break;
    }
    if (!last) throw NotYetAvailable("no matured vision sample");
    return {last->value, last->t, true};
  }

 private:
  struct Sample {
    double t;
    Vec3 value;
  };

  double draw() {
    if (cfg_.noise_kind == VisionConfig::Noise::Gaussian) {
      return std::normal_distribution<double>(0.0, cfg_.accuracy / 3.0)(rng_);
    }
    return std::uniform_real_distribution<double>(-cfg_.accuracy,
                                                  cfg_.accuracy)(rng_);
  }

  VisionConfig cfg_;
  std::mt19937_64 rng_;
  std::deque<Sample> samples_;
};

// First-order backward difference followed by a single-pole low-pass filter.
class DerivativeEstimator {
 public:
  explicit DerivativeEstimator(double cutoff_hz = 50.0) : cutoff_(cutoff_hz) {}

  bool ready() const { return samples_ >= 2 || seeded_; }

  // Optionally prime the estimator with a known initial value and rate so the
  // first steps carry no startup transient.
  void seed(const Vec3& value, const Vec3& rate) {
    prev_ = value;
    state_ = rate;
    seeded_ = true;
    samples_ = 1;
  }

  Vec3 push(const Vec3& value, double dt) {
    if (samples_ == 0) {
      prev_ = value;
      samples_ = 1;
      return state_;
    }
    const Vec3 raw = (value - prev_) / dt;
    const double tau = 1.0 / (2.0 * M_PI * cutoff_);
    const double alpha = dt / (tau + dt);
    state_ += alpha * (raw - state_);
    prev_ = value;
    ++samples_;
    return state_;
  }

  Vec3 estimate() const {
    if (!ready()) {
      throw InsufficientHistory("derivative estimate needs two samples");
    }
    return state_;
  }

 private:
  double cutoff_;
  Vec3 prev_ = Vec3::Zero();
  Vec3 state_ = Vec3::Zero();
  bool seeded_ = false;
  int samples_ = 0;
};

}  // namespace orthoglide
