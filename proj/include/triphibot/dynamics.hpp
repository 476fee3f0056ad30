#ifndef TRIPHIBOT_DYNAMICS_HPP
#define TRIPHIBOT_DYNAMICS_HPP

// Hybrid continuous-time dynamics: flight mode (air/water) and ground mode
// (land/seabed), hydrodynamic forces, and the two thrust/torque allocation
// maps with sign-dependent rotor coefficients.

#include <Eigen/Dense>

#include "triphibot/core_model.hpp"

namespace triphibot {

enum class WrenchFrame { A, T };

struct Wrench {
    double T = 0.0;                 // collective thrust, N
    Eigen::Vector3d tau{0, 0, 0};   // torque, N m
    WrenchFrame frame = WrenchFrame::A;
};

struct HydroForces {
    Eigen::Vector3d f_drag{0, 0, 0};   // body frame A, N
    Eigen::Vector3d tau_drag{0, 0, 0}; // body frame A, N m
    Eigen::Vector3d F_B{0, 0, 0};      // world frame, N
    Eigen::Vector3d tau_buo{0, 0, 0};  // body frame A, N m
};

struct StateDerivative {
    Eigen::Vector3d dp_W{0, 0, 0};
    Eigen::Vector3d dv_A{0, 0, 0};
    Eigen::Vector3d dTheta_A{0, 0, 0};
    double dtheta_T = 0.0;
    double dpsi_T = 0.0;
    Eigen::Vector3d dw_A{0, 0, 0};
    Eigen::Vector3d dw_T{0, 0, 0};
    double dv_l = 0.0;
};

HydroForces hydro_forces(const HybridState& state, const VehicleParams& params, Medium medium);

// [T, tau_A] = B_A * u, with the CoG-offset terms in the pitch row and the
// yaw column built from c_m / c_t(medium, sign of each rotor thrust).
Wrench allocate_aerial(const RotorCommand& u, const VehicleParams& params, Medium medium);

// [T, tau_T] = B_T * u (symmetric rows, no offset terms).
Wrench allocate_terrestrial(const RotorCommand& u, const VehicleParams& params, Medium medium);

// Inverse allocation with a fixed-point iteration over the per-rotor
// thrust-sign coefficient selection. Throws on non-convergence after 8
// iterations. If within_bounds is non-null it reports whether the result
// respects the medium's input box (the command is never clipped).
RotorCommand invert_allocation(const Wrench& wrench, const VehicleParams& params, Medium medium,
                               bool* within_bounds = nullptr);

// Flight-mode dynamics (frame A). Valid for FlightAir / FlightWater.
StateDerivative flight_derivative(const HybridState& state, const RotorCommand& u,
                                  const VehicleParams& params, Medium medium);

// Ground-mode dynamics (frame T). Roll about x_T is a bilateral wheel
// constraint: w_T,x is slaved to -sin(theta_T) * dpsi_T rather than driven
// by the x torque row.
StateDerivative ground_derivative(const HybridState& state, const RotorCommand& u,
                                  const VehicleParams& params, Medium medium);

// Ground-mode drag force magnitude used in the planar speed equation,
// evaluated from the body velocity reconstructed from (v_l, theta_T, psi_T).
double ground_drag_magnitude(double v_l, const VehicleParams& params, Medium medium);

// Torque required in ground mode for a desired (w_T, dw_T) motion, with the
// x component fixed to zero (no rotation about x_T wanted). Shared between
// flatness and the controllers.
Eigen::Vector3d ground_torque_for(const Eigen::Vector3d& w_T, const Eigen::Vector3d& dw_T,
                                  double theta_T, double psi_T, const VehicleParams& params,
                                  Medium medium);

}  // namespace triphibot

#endif
