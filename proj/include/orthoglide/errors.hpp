#pragma once

#include <stdexcept>
#include <string>

namespace orthoglide {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Kinematics
struct UnreachablePose : Error { using Error::Error; };
struct NoAssembly : Error { using Error::Error; };
struct DegenerateBranch : Error { using Error::Error; };
struct AssemblyModeViolation : Error { using Error::Error; };
struct NearSingular : Error { using Error::Error; };
struct LegSingularity : Error { using Error::Error; };

// Dynamics
struct IllConditioned : Error { using Error::Error; };

// Trajectory
struct OutOfRange : Error { using Error::Error; };
struct WorkspaceViolation : Error { using Error::Error; };

// Sensors
struct NotYetAvailable : Error { using Error::Error; };
struct InsufficientHistory : Error { using Error::Error; };

// Simulation / CLI
struct SimDiverged : Error { using Error::Error; };
struct EmptyWindow : Error { using Error::Error; };
struct ConfigError : Error { using Error::Error; };

}  // namespace orthoglide
