#ifndef TRIPHIBOT_PID_STACK_HPP
#define TRIPHIBOT_PID_STACK_HPP

// Cascaded PID attitude control for underwater operation and the
// water-to-air transition, with medium-aware allocation.

#include <Eigen/Dense>

#include "triphibot/core_model.hpp"
#include "triphibot/dynamics.hpp"

namespace triphibot {

struct PidGains {
    Eigen::Vector3d K_p{6.0, 6.0, 6.0};
    Eigen::Vector3d K_i{0.5, 0.5, 0.5};
    Eigen::Vector3d K_d{0.0, 0.0, 0.0};
    Eigen::Vector3d rate_K_p{0.8, 0.8, 0.8};
    Eigen::Vector3d rate_K_i{0.2, 0.2, 0.2};
    Eigen::Vector3d rate_K_d{0.0, 0.0, 0.0};
    double integral_limit = 1.0;       // per-axis clamp on the integral state
    double output_limit = 5.0;         // torque clamp, N m
    double derivative_cutoff_hz = 20.0;

    static PidGains from_config(const Config& cfg, const std::string& section);
};

// Angle-loop PID producing a desired torque; derivative acts on the
// (filtered) measurement to avoid set-point kick. Errors are wrapped per
// axis into (-pi, pi].
class AttitudePid {
public:
    explicit AttitudePid(const PidGains& gains) : gains_(gains) {}

    Eigen::Vector3d step(const Eigen::Vector3d& Theta_des, const Eigen::Vector3d& Theta,
                         double dt);
    void reset();
    const Eigen::Vector3d& integral() const { return integral_; }

private:
    PidGains gains_;
    Eigen::Vector3d integral_{0, 0, 0};
    Eigen::Vector3d filtered_meas_{0, 0, 0};
    Eigen::Vector3d prev_filtered_{0, 0, 0};
    bool has_prev_ = false;
};

// Inner rate loop: PID on angular-velocity error, torque out.
class RatePid {
public:
    explicit RatePid(const PidGains& gains) : gains_(gains) {}

    Eigen::Vector3d step(const Eigen::Vector3d& omega_des, const Eigen::Vector3d& omega,
                         double dt);
    void reset();
    const Eigen::Vector3d& integral() const { return integral_; }

private:
    PidGains gains_;
    Eigen::Vector3d integral_{0, 0, 0};
    Eigen::Vector3d prev_meas_{0, 0, 0};
    bool has_prev_ = false;
};

// Maps desired torque + collective to rotor thrusts with the
// medium-appropriate allocation matrix. Saturating commands are scaled
// toward the collective-only solution, keeping the torque direction.
struct PidAllocation {
    RotorCommand u;
    bool saturated = false;
};
PidAllocation pid_allocate(const Eigen::Vector3d& tau_des, double T_collective, Medium medium,
                           MotionMode mode, const VehicleParams& params);

enum class WaterExitPhase { Floating, ThrustRamp, Airborne, Stable, Aborted };

struct WaterExitConfig {
    double ramp_time = 1.0;            // collective ramp to the liftoff target, s
    double thrust_target_factor = 1.6; // liftoff collective as a multiple of m g
    double airborne_rpm = 3000.0;      // all-rotor speed threshold, RPM
    double stable_attitude_deg = 5.0;
    double stable_hold_time = 0.3;
    double timeout = 5.0;
};

// Water-to-air transition controller: aerial attitude cascade plus a
// collective ramp; declares airborne from rotor speeds and stable from a
// dwell on attitude error, then hands off to the trajectory controller.
class WaterExitController {
public:
    WaterExitController(const PidGains& gains, const WaterExitConfig& cfg,
                        const VehicleParams& params)
        : gains_(gains), rate_(gains), cfg_(cfg), params_(params) {}

    struct Output {
        RotorCommand u;
        WaterExitPhase phase;
    };
    Output step(const HybridState& state, const Eigen::Vector3d& target_attitude,
                const Eigen::Vector4d& rotor_rpm, double dt);

    WaterExitPhase phase() const { return phase_; }
    double time_airborne() const { return t_airborne_; }
    double time_stable() const { return t_stable_; }

private:
    PidGains gains_;
    RatePid rate_;
    WaterExitConfig cfg_;
    VehicleParams params_;
    WaterExitPhase phase_ = WaterExitPhase::Floating;
    double t_ = 0.0;
    double t_airborne_ = -1.0;
    double t_stable_ = -1.0;
    double stable_since_ = -1.0;
};

// Wraps an angle difference into (-pi, pi].
double wrap_angle(double a);

}  // namespace triphibot

#endif
