#pragma once

#include <Eigen/Dense>

namespace orthoglide {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;  // row/column semantics follow Eigen (column-major
                               // storage, standard math indexing M(row, col))

// End-effector Cartesian position [X_e, Y_e, Z_e] in meters.
using Pose = Vec3;

// Actuated prismatic joint positions [q11, q12, q13] in meters.
using ActiveJoints = Vec3;

// Geometric parameters of the machine.
struct GeomParams {
  double d4 = 0.31;  // leg bar length, m (must be > 0)
  double d6 = 0.03;  // tool offset along the leg axis, m
  double a = 0.20;   // base frame offset of legs 2 and 3, m
};

// Dynamic parameters. Legs are modeled as lumped masses: the slider (foot)
// plus half the bar mass translate with the actuated joint, the other half
// of the bar mass rides with the platform attachment point.
struct DynParams {
  double m_platform = 3.0;  // kg
  double m_foot = 2.0;      // kg, per leg
  double m_bar = 0.5;       // kg, per leg, lumped half at each bar end
  double rod_inertia = 0.0; // kg*m^2, optional bar second moment about its pivot
  Vec3 gravity = Vec3(0.0, 0.0, -9.81);  // m/s^2
};

struct MachineParams {
  GeomParams geom;
  DynParams dyn;
};

// Sines/cosines of the two passive revolute angles of each leg.
struct LegTrig {
  double s2, c2, s3, c3;
};

struct PassiveTrig {
  LegTrig leg[3];
};

struct CartesianState {
  Pose pose;
  Vec3 vel = Vec3::Zero();
  Vec3 acc = Vec3::Zero();
};

// Actuated generalized forces, newtons.
using Torques = Vec3;

// Reference sample of an analytic trajectory.
struct Setpoint {
  Pose pos;
  Vec3 vel;
  Vec3 acc;
  double t = 0.0;
};

enum class LegIndex { Leg1 = 0, Leg2 = 1, Leg3 = 2 };

}  // namespace orthoglide
