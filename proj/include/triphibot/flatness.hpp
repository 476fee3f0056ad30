#ifndef TRIPHIBOT_FLATNESS_HPP
#define TRIPHIBOT_FLATNESS_HPP

// Differential flatness: flat-output trajectories with derivatives mapped to
// full reference states and rotor inputs, for aerial and terrestrial modes.

#include <array>

#include <Eigen/Dense>

#include "triphibot/core_model.hpp"
#include "triphibot/dynamics.hpp"

namespace triphibot {

struct FlatTrajectoryPoint {
    // p[k] is the k-th time derivative of world position (aerial uses up to
    // order 4, terrestrial up to order 3).
    std::array<Eigen::Vector3d, 5> p{Eigen::Vector3d::Zero(), Eigen::Vector3d::Zero(),
                                     Eigen::Vector3d::Zero(), Eigen::Vector3d::Zero(),
                                     Eigen::Vector3d::Zero()};
    std::array<double, 3> psi{0, 0, 0};      // aerial yaw and derivatives
    std::array<double, 3> theta_T{0, 0, 0};  // terrestrial pitch and derivatives
    double kappa = 1.0;                      // direction flag, +1 forward / -1 backward
};

struct ReferencePoint {
    HybridState state;
    RotorCommand u_ref = RotorCommand::Zero();
    Wrench wrench_ref;
    // Time derivative of the reference state, for consistency checks.
    StateDerivative deriv;
};

// Aerial flatness (air): position + yaw to attitude, rates, rate derivatives,
// collective thrust and rotor commands. Throws on vanishing thrust.
ReferencePoint aerial_flatness(const FlatTrajectoryPoint& pt, const VehicleParams& params);

// Terrestrial flatness (land or seabed); psi_fallback is used below the
// zero-speed heading threshold (1e-3 m/s).
ReferencePoint terrestrial_flatness(const FlatTrajectoryPoint& pt, const VehicleParams& params,
                                    Medium medium = Medium::Air, double psi_fallback = 0.0);

// || f(x_ref, u_ref) - xdot_ref || over the coordinates active in the mode.
double flatness_roundtrip_check(const FlatTrajectoryPoint& pt, const VehicleParams& params,
                                MotionMode mode, double psi_fallback = 0.0);

}  // namespace triphibot

#endif
