#include "triphibot/supervisor.hpp"

#include <cmath>
#include <stdexcept>

namespace triphibot {

std::string to_string(ActiveController c) {
    switch (c) {
        case ActiveController::Hnmpc: return "hnmpc";
        case ActiveController::PidWaterExit: return "pid_water_exit";
        case ActiveController::PidUnderwater: return "pid_underwater";
    }
    return "?";
}

SupervisorConfig SupervisorConfig::from_config(const Config& cfg) {
    SupervisorConfig s;
    s.h_judge = cfg.get_double("supervisor.h_judge", s.h_judge);
    s.hysteresis = cfg.get_double("supervisor.hysteresis", s.hysteresis);
    s.dwell = cfg.get_double("supervisor.dwell", s.dwell);
    s.contact_eps = cfg.get_double("supervisor.contact_eps", s.contact_eps);
    s.landing_z = cfg.get_double("supervisor.landing_z", s.landing_z);
    s.reorient_deg = cfg.get_double("supervisor.reorient_deg", s.reorient_deg);
    s.liftoff_force = cfg.get_double("supervisor.liftoff_force", s.liftoff_force);
    s.water_surface_z = cfg.get_double("supervisor.water_surface_z", s.water_surface_z);
    s.seabed_z = cfg.get_double("supervisor.seabed_z", s.seabed_z);
    return s;
}

Supervisor::Supervisor(const SupervisorConfig& cfg, MotionMode initial_mode)
    : cfg_(cfg), mode_(initial_mode), controller_(controller_for(initial_mode)) {}

ActiveController Supervisor::controller_for(MotionMode mode) const {
    switch (mode) {
        case MotionMode::FlightWater:
        case MotionMode::GroundSeabed:
            return ActiveController::PidUnderwater;
        case MotionMode::WaterSurface:
            return exit_requested_ ? ActiveController::PidWaterExit
                                   : ActiveController::PidUnderwater;
        default:
            return ActiveController::Hnmpc;
    }
}

void Supervisor::transition(double t, MotionMode to, ActiveController ctrl,
                            const std::string& label) {
    events_.push_back({t, mode_, to, ctrl, label});
    mode_ = to;
    controller_ = ctrl;
    last_transition_t_ = t;
}

void Supervisor::request_mode(double t, MotionMode mode) {
    if (mode == mode_) return;
    bool underwater = mode == MotionMode::FlightWater || mode == MotionMode::GroundSeabed;
    if (underwater && controller_for(mode) == ActiveController::Hnmpc)
        throw std::invalid_argument("supervisor: HNMPC cannot be active underwater");
    transition(t, mode, controller_for(mode), "commanded");
}

void Supervisor::request_water_exit(double t) {
    if (mode_ != MotionMode::WaterSurface)
        throw std::invalid_argument("supervisor: water exit only from the surface");
    exit_requested_ = true;
    controller_ = ActiveController::PidWaterExit;
    events_.push_back({t, mode_, mode_, controller_, "water_exit_engaged"});
    last_transition_t_ = t;
}

void Supervisor::step(const SupervisorInput& in) {
    const double z = in.state.p_W.z();
    const double vz_world =
        (rotation_A_to_W(in.state.Theta_A) * in.state.v_A).z();
    const bool dwell_ok = in.t - last_transition_t_ >= cfg_.dwell;

    switch (mode_) {
        case MotionMode::GroundLand: {
            // Liftoff once pitched over and the vertical thrust component
            // unloads the wheels (z itself is frozen by the contact
            // constraint, so it cannot gate the transition).
            const bool reoriented =
                std::abs(in.state.theta_T) >= cfg_.reorient_deg * M_PI / 180.0;
            const double up_thrust = -std::sin(in.state.theta_T) * in.rotor_thrust.sum();
            if (dwell_ok && reoriented && up_thrust >= cfg_.liftoff_force)
                transition(in.t, MotionMode::FlightAir, ActiveController::Hnmpc, "takeoff");
            break;
        }
        case MotionMode::FlightAir: {
            // Landing: descending below the switching band; the sim loop
            // projects onto the wheel-contact constraint from there.
            if (dwell_ok && vz_world <= 0.0 && z <= cfg_.landing_z)
                transition(in.t, MotionMode::GroundLand, ActiveController::Hnmpc, "landing");
            break;
        }
        case MotionMode::WaterSurface: {
            if (exit_requested_ && in.exit_phase == WaterExitPhase::Airborne &&
                z > cfg_.water_surface_z)
                transition(in.t, MotionMode::FlightAir, ActiveController::PidWaterExit,
                           "water_detach");
            break;
        }
        case MotionMode::FlightWater: {
            if (z <= cfg_.seabed_z + cfg_.contact_eps && vz_world <= 0.0 && dwell_ok)
                transition(in.t, MotionMode::GroundSeabed, ActiveController::PidUnderwater,
                           "seabed_contact");
            if (z > cfg_.water_surface_z && dwell_ok)
                transition(in.t, MotionMode::WaterSurface, controller_for(MotionMode::WaterSurface),
                           "surfaced");
            break;
        }
        case MotionMode::GroundSeabed: {
            if (z > cfg_.seabed_z + 2.0 * cfg_.contact_eps && dwell_ok)
                transition(in.t, MotionMode::FlightWater, ActiveController::PidUnderwater,
                           "seabed_liftoff");
            break;
        }
    }

    // Water-exit handoff: once the transition controller reports a stable
    // aerial attitude, trajectory control returns to the HNMPC.
    if (exit_requested_ && mode_ == MotionMode::FlightAir &&
        in.exit_phase == WaterExitPhase::Stable &&
        controller_ == ActiveController::PidWaterExit) {
        exit_requested_ = false;
        controller_ = ActiveController::Hnmpc;
        events_.push_back({in.t, mode_, mode_, controller_, "hnmpc_handoff"});
    }
}

}  // namespace triphibot
