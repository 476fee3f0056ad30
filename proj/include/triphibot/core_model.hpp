#ifndef TRIPHIBOT_CORE_MODEL_HPP
#define TRIPHIBOT_CORE_MODEL_HPP

// Shared domain types, physical parameters, frame conventions and transforms.
//
// Frames: world W (z up), mass frame A at the CoG (z_A along the thrust
// axis), geometric frame T at the geometric center (x_T forward, y_T along
// the wheel axle). T is related to A by a fixed 90 deg rotation about y_A;
// in coordinates v_T = Ry(+90deg) * v_A, which maps z_A onto x_T.

#include <array>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

#include "triphibot/config.hpp"

namespace triphibot {

enum class Medium { Air = 0, Water = 1 };

inline double medium_flag(Medium m) { return m == Medium::Water ? 1.0 : 0.0; }

enum class MotionMode {
    FlightAir,
    FlightWater,
    GroundLand,
    GroundSeabed,
    WaterSurface,
};

inline Medium medium_of(MotionMode mode) {
    switch (mode) {
        case MotionMode::FlightWater:
        case MotionMode::GroundSeabed:
        case MotionMode::WaterSurface:
            return Medium::Water;
        default:
            return Medium::Air;
    }
}

inline bool is_ground(MotionMode mode) {
    return mode == MotionMode::GroundLand || mode == MotionMode::GroundSeabed;
}

std::string to_string(MotionMode mode);

// Per-rotor thrust command [T1..T4], N, signed (bidirectional props).
using RotorCommand = Eigen::Vector4d;

struct VehicleParams {
    double m = 1.1;           // total mass, kg
    double m_a = 0.525;       // added mass, kg (0.5 * rho_w * V_disp)
    Eigen::Vector3d M_A{0.0113, 0.0018, 0.0125};  // inertia at CoG, kg m^2
    Eigen::Vector3d M_T{0.0125, 0.0018, 0.0113};  // inertia at geometric center
    Eigen::Vector3d M_a{0.00339, 0.00054, 0.00375};  // added inertia (0.3 * M_A)
    double lambda = 0.08;     // arm length, m
    double delta = 0.015;     // CoG offset along -z_T, m
    double c_m = 2.56e-10;    // rotor torque coefficient, N m per RPM^2
    double c_t_air_fwd = 1.6e-8;    // thrust coefficients, N per RPM^2
    double c_t_air_rev = 7.79e-9;
    double c_t_water_fwd = 1.83e-5;
    double c_t_water_rev = 8.68e-6;
    Eigen::Vector3d C_f{8.0, 8.0, 10.0};    // translational drag, N s^2/m^2
    Eigen::Vector3d C_t{0.05, 0.05, 0.05};  // rotational drag, N m s^2
    double rho_w = 1000.0;    // water density, kg/m^3
    double V_disp = 1.05e-3;  // displaced volume, m^3 (~95% neutral buoyancy)
    Eigen::Vector3d r_buoy{0.0, 0.0, 0.01};  // CoG -> center of buoyancy, m
    double g = 9.81;

    // Input box per medium (derived from the 1200 RPM underwater ceiling
    // and the air operating envelope; overridable).
    double u_min_air = -2.0, u_max_air = 4.0;
    double u_min_water = -12.5, u_max_water = 26.3;

    double contact_height = 0.17;   // wheel-contact CoG height, m (assumption)
    double rolling_resistance = 0.0;  // optional linear coefficient, N s/m

    void validate() const;
    static VehicleParams from_config(const Config& cfg);

    double thrust_coeff(Medium medium, double thrust_sign) const {
        if (medium == Medium::Water)
            return thrust_sign >= 0.0 ? c_t_water_fwd : c_t_water_rev;
        return thrust_sign >= 0.0 ? c_t_air_fwd : c_t_air_rev;
    }
    double u_min(Medium medium) const { return medium == Medium::Water ? u_min_water : u_min_air; }
    double u_max(Medium medium) const { return medium == Medium::Water ? u_max_water : u_max_air; }

    // Rotor speed (RPM, signed) realizing a signed thrust in the given medium.
    double rpm_for_thrust(double thrust, Medium medium) const {
        double c = thrust_coeff(medium, thrust);
        double w = std::sqrt(std::abs(thrust) / c);
        return thrust >= 0.0 ? w : -w;
    }
};

// Full vehicle state of the hybrid system with a mode tag. In flight mode
// the aerial fields are integrated and the terrestrial ones derived; in
// ground mode the reverse.
struct HybridState {
    Eigen::Vector3d p_W{0, 0, 0};      // world position, m
    Eigen::Vector3d v_A{0, 0, 0};      // body velocity in frame A, m/s
    Eigen::Vector3d Theta_A{0, 0, 0};  // aerial attitude (phi, theta, psi), rad
    double theta_T = 0.0;              // terrestrial pitch, rad
    double psi_T = 0.0;                // terrestrial heading, rad
    Eigen::Vector3d w_A{0, 0, 0};      // body rates in frame A, rad/s
    Eigen::Vector3d w_T{0, 0, 0};      // body rates in frame T, rad/s
    double v_l = 0.0;                  // signed planar speed, m/s
    MotionMode mode = MotionMode::FlightAir;
};

// ZYX Euler rotation matrix from frame A to world.
Eigen::Matrix3d rotation_A_to_W(const Eigen::Vector3d& Theta_A);

// Euler-rate transform W such that dTheta/dt = W * omega.
// Throws std::domain_error near the theta = +-pi/2 singularity.
Eigen::Matrix3d euler_rate_matrix(const Eigen::Vector3d& Theta_A);

// Fixed 90 deg rotation about y_A relating frames: v_T = frame_T_from_A(v_A).
Eigen::Vector3d frame_T_from_A(const Eigen::Vector3d& v_in_A);
Eigen::Vector3d frame_A_from_T(const Eigen::Vector3d& v_in_T);
Eigen::Matrix3d rotation_A_to_T();

// Attitude of frame T in the world given (theta_T, psi_T) with roll fixed at 0.
Eigen::Matrix3d rotation_T_to_W(double theta_T, double psi_T);

// Cross-derivations between the redundant attitude representations.
// Ground pose -> aerial Euler/rates; aerial attitude -> ground pose.
void sync_aerial_from_terrestrial(HybridState& state);
void sync_terrestrial_from_aerial(HybridState& state);

}  // namespace triphibot

#endif
