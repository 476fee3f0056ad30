#ifndef TRIPHIBOT_SUPERVISOR_HPP
#define TRIPHIBOT_SUPERVISOR_HPP

// Finite-state machine selecting the active motion mode and controller:
// trajectory tracking (HNMPC) on ground and in air, cascaded PID underwater,
// and the dedicated water-exit controller on the surface-to-air transition.

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "triphibot/core_model.hpp"
#include "triphibot/pid_stack.hpp"

namespace triphibot {

enum class ActiveController { Hnmpc, PidWaterExit, PidUnderwater };

std::string to_string(ActiveController c);

struct SupervisorConfig {
    double h_judge = 0.25;          // air/ground switching altitude, m
    double hysteresis = 0.05;       // band around h_judge, m
    double dwell = 0.3;             // minimum time between transitions, s
    double contact_eps = 0.01;      // seabed contact slack, m
    double landing_z = 0.18;        // air->ground wheel-contact altitude, m
    double reorient_deg = 60.0;     // |theta_T| needed before takeoff
    double liftoff_force = 10.79;   // vertical thrust unloading the wheels, N
    double water_surface_z = 0.0;   // world z of the water surface, m
    double seabed_z = -1e9;         // world z of the seabed (off by default)

    static SupervisorConfig from_config(const Config& cfg);
};

struct TransitionEvent {
    double t;
    MotionMode from;
    MotionMode to;
    ActiveController controller;
    std::string label;
};

struct SupervisorInput {
    double t = 0.0;
    HybridState state;
    Eigen::Vector4d rotor_rpm = Eigen::Vector4d::Zero();
    Eigen::Vector4d rotor_thrust = Eigen::Vector4d::Zero();
    WaterExitPhase exit_phase = WaterExitPhase::Floating;
};

class Supervisor {
public:
    Supervisor(const SupervisorConfig& cfg, MotionMode initial_mode);

    // Advances the FSM; emitted events are appended to events().
    void step(const SupervisorInput& in);

    // Scenario-driven requests (dive, surface-exit). Illegal combinations
    // (e.g. HNMPC underwater) throw std::invalid_argument.
    void request_mode(double t, MotionMode mode);
    void request_water_exit(double t);

    MotionMode mode() const { return mode_; }
    ActiveController controller() const { return controller_; }
    const std::vector<TransitionEvent>& events() const { return events_; }

private:
    void transition(double t, MotionMode to, ActiveController ctrl, const std::string& label);
    ActiveController controller_for(MotionMode mode) const;

    SupervisorConfig cfg_;
    MotionMode mode_;
    ActiveController controller_;
    std::vector<TransitionEvent> events_;
    double last_transition_t_ = -1e9;
    bool exit_requested_ = false;
};

}  // namespace triphibot

#endif
