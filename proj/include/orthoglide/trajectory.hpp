#pragma once

#include <cmath>
#include <utility>
#include <vector>

#include "orthoglide/errors.hpp"
#include "orthoglide/kinematics.hpp"
#include "orthoglide/types.hpp"

// Reference paths: point-to-point quintic profiles and the square/circle test
// paths, sampled analytically with consistent velocity and acceleration.

namespace orthoglide {

// Peak of |s''| for the unit quintic, attained at tau = (3 -+ sqrt(3))/6.
inline constexpr double kQuinticPeakAccel = 5.7735026918962573;  // 10/sqrt(3)
// Peak of |s'|, attained at tau = 1/2.
inline constexpr double kQuinticPeakVel = 1.875;  // 15/8

// Unit quintic s(tau) = 10 tau^3 - 15 tau^4 + 6 tau^5 and its time
// derivatives over a segment of duration T.
struct ProfileSample {
  double s, sd, sdd;
};

inline ProfileSample quintic(double t, double T) {
  if (!(T > 0.0) || t < 0.0 || t > T) {
    throw OutOfRange("quintic profile sampled outside [0, T]");
  }
  const double tau = t / T;
  const double tau2 = tau * tau, tau3 = tau2 * tau;
  ProfileSample out;
  out.s = tau3 * (10.0 - 15.0 * tau + 6.0 * tau2);
  out.sd = tau2 * (30.0 - 60.0 * tau + 30.0 * tau2) / T;
  out.sdd = tau * (60.0 - 180.0 * tau + 120.0 * tau2) / (T * T);
  return out;
}

struct PathSpec {
  enum class Kind { Square, Circle } kind = Kind::Circle;
  double side = 0.05;             // m, square edge
  double radius = 0.025;          // m
  Pose center = Pose(0.0, 0.0, 0.20);
  double accel_limit = 3.0;       // m/s^2
  double speed_limit = 0.0;       // m/s, <= 0 means unconstrained
  double workspace_margin = 0.05; // paths must keep delta_i > margin * d4
};

class Path {
 public:
  double duration() const { return duration_; }
  Pose start() const { return sample(0.0).pos; }

  Setpoint sample(double t) const {
    if (t < 0.0 || t > duration_ + 1e-12) {
      throw OutOfRange("path sampled outside its duration");
    }
    t = std::min(t, duration_);
    for (const Segment& seg : segments_) {
      if (t <= seg.t0 + seg.T || &seg == &segments_.back()) {
        return sample_segment(seg, std::min(t - seg.t0, seg.T));
      }
    }
    throw OutOfRange("path sampled outside its duration");
  }

  // Point-to-point quintic move (also used as a dwell when from == to).
  static Path line(const Pose& from, const Pose& to, double accel_limit,
                   double speed_limit = 0.0) {
    Path p;
    p.append_line(from, to, accel_limit, speed_limit);
    return p;
  }

  static Path dwell(const Pose& at, double T) {
    Path p;
    p.segments_.push_back({Segment::Line, at, at, 0.0, 0.0, T});
    p.duration_ = T;
    return p;
  }

  // Four point-to-point quintic edges with full stops at the corners, in the
  // XY plane, centered on spec.center.
  static Path square(const PathSpec& spec, const GeomParams& geom) {
    if (!(spec.side > 0.0)) throw OutOfRange("square side must be positive");
    const double h = 0.5 * spec.side;
    const Pose c = spec.center;
    const Pose corners[5] = {c + Vec3(-h, -h, 0), c + Vec3(h, -h, 0),
                             c + Vec3(h, h, 0), c + Vec3(-h, h, 0),
                             c + Vec3(-h, -h, 0)};
    Path p;
    for (int i = 0; i < 4; ++i) {
      p.append_line(corners[i], corners[i + 1], spec.accel_limit,
                    spec.speed_limit);
    }
    p.check_workspace(geom, spec.workspace_margin);
    return p;
  }

  // Full circle in the XY plane; the angle follows a quintic from 0 to 2*pi
  // with the duration chosen minimal against the combined tangential plus
  // centripetal acceleration bound (and the speed bound when present).
  static Path circle(const PathSpec& spec, const GeomParams& geom) {
    if (!(spec.radius > 0.0)) throw OutOfRange("circle radius must be positive");
    const double r = spec.radius;
    auto peak_ok = [&](double T) {
      const auto [vmax, amax] = circle_peaks(r, T);
      if (amax > spec.accel_limit) return false;
      if (spec.speed_limit > 0.0 && vmax > spec.speed_limit) return false;
      return true;
    };
    double lo = 1e-3, hi = 1e-3;
    while (!peak_ok(hi)) hi *= 2.0;
    while (peak_ok(lo) && lo > 1e-9) lo *= 0.5;
    // bisection on the duration, tolerance 1e-9 s
    while (hi - lo > 1e-9) {
      const double mid = 0.5 * (lo + hi);
      (peak_ok(mid) ? hi : lo) = mid;
    }
    Path p;
    p.segments_.push_back({Segment::Circle, spec.center, Pose::Zero(), r, 0.0, hi});
    p.duration_ = hi;
    p.check_workspace(geom, spec.workspace_margin);
    return p;
  }

  static Path make(const PathSpec& spec, const GeomParams& geom) {
    return spec.kind == PathSpec::Kind::Square ? square(spec, geom)
                                               : circle(spec, geom);
  }

 private:
  struct Segment {
    enum Kind { Line, Circle } kind;
    Pose a;       // line: from, circle: center
    Pose b;       // line: to
    double radius = 0.0;
    double t0 = 0.0;
    double T = 0.0;
  };

  void append_line(const Pose& from, const Pose& to, double accel_limit,
                   double speed_limit) {
    const double dist = (to - from).norm();
    double T = 0.0;
    if (dist > 0.0) {
      if (!(accel_limit > 0.0)) throw OutOfRange("acceleration limit must be positive");
      T = std::sqrt(kQuinticPeakAccel * dist / accel_limit);
      if (speed_limit > 0.0) T = std::max(T, kQuinticPeakVel * dist / speed_limit);
    }
    segments_.push_back({Segment::Line, from, to, 0.0, duration_, T});
    duration_ += T;
  }

  static Setpoint sample_segment(const Segment& seg, double tl) {
    Setpoint sp;
    sp.t = seg.t0 + tl;
    if (seg.T <= 0.0) {  // zero-length dwell edge case
      sp.pos = seg.a;
      sp.vel = Vec3::Zero();
      sp.acc = Vec3::Zero();
      return sp;
    }
    const ProfileSample pr = quintic(tl, seg.T);
    if (seg.kind == Segment::Line) {
      const Vec3 d = seg.b - seg.a;
      sp.pos = seg.a + pr.s * d;
      sp.vel = pr.sd * d;
      sp.acc = pr.sdd * d;
    } else {
      const double th = 2.0 * M_PI * pr.s;
      const double thd = 2.0 * M_PI * pr.sd;
      const double thdd = 2.0 * M_PI * pr.sdd;
      const Vec3 radial(std::cos(th), std::sin(th), 0.0);
      const Vec3 tangent(-std::sin(th), std::cos(th), 0.0);
      sp.pos = seg.a + seg.radius * radial;
      sp.vel = seg.radius * thd * tangent;
      sp.acc = seg.radius * (thdd * tangent - thd * thd * radial);
    }
    return sp;
  }

  // Peak speed and acceleration magnitude of the circle timing law, found by
  // dense sampling with golden-section refinement around the grid maximum.
  static std::pair<double, double> circle_peaks(double r, double T) {
    auto accel_at = [&](double t) {
      const ProfileSample pr = quintic(t, T);
      const double thd = 2.0 * M_PI * pr.sd;
      const double thdd = 2.0 * M_PI * pr.sdd;
      return r * std::sqrt(thdd * thdd + thd * thd * thd * thd);
    };
    const int n = 2048;
    double amax = 0.0;
    int kmax = 0;
    for (int k = 0; k <= n; ++k) {
      const double v = accel_at(T * k / n);
      if (v > amax) { amax = v; kmax = k; }
    }
    // golden-section refinement in the bracketing interval
    double lo = T * std::max(0, kmax - 1) / n;
    double hi = T * std::min(n, kmax + 1) / n;
    const double phi = 0.5 * (std::sqrt(5.0) - 1.0);
    double x1 = hi - phi * (hi - lo), x2 = lo + phi * (hi - lo);
    double f1 = accel_at(x1), f2 = accel_at(x2);
    for (int it = 0; it < 80 && hi - lo > 1e-14 * T; ++it) {
      if (f1 > f2) {
        hi = x2; x2 = x1; f2 = f1;
        x1 = hi - phi * (hi - lo); f1 = accel_at(x1);
      } else {
        lo = x1; x1 = x2; f1 = f2;
        x2 = lo + phi * (hi - lo); f2 = accel_at(x2);
      }
    }
    amax = std::max(amax, std::max(f1, f2));
    const double vmax = r * 2.0 * M_PI * kQuinticPeakVel / T;
    return {vmax, amax};
  }

  void check_workspace(const GeomParams& geom, double margin) const {
    const double floor2 = (margin * geom.d4) * (margin * geom.d4);
    const int n = 2000;
    for (int k = 0; k <= n; ++k) {
      const Pose pos = sample(duration_ * k / n).pos;
      if (!(pos.z() > 0.0)) {
        throw WorkspaceViolation("path leaves the z > 0 assembly half-space");
      }
      const auto d2 = delta_squares(pos, geom);
      if (d2[0] <= floor2 || d2[1] <= floor2 || d2[2] <= floor2) {
        throw WorkspaceViolation("path too close to the workspace boundary");
      }
    }
  }

  std::vector<Segment> segments_;
  double duration_ = 0.0;
};

}  // namespace orthoglide
