#ifndef TRIPHIBOT_SIMKIT_HPP
#define TRIPHIBOT_SIMKIT_HPP

// Fixed-step simulation engine: scenario loading, the 1 kHz physics /
// 200 Hz controller loop, deterministic CSV logging and log reading.

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "triphibot/core_model.hpp"
#include "triphibot/hnmpc.hpp"
#include "triphibot/pid_stack.hpp"
#include "triphibot/propulsion.hpp"
#include "triphibot/reference.hpp"
#include "triphibot/supervisor.hpp"

namespace triphibot {

struct Obstacle {
    Eigen::Vector3d position{0, 0, 0};
    double height = 0.0;
};

struct EnvironmentConfig {
    bool has_water = false;
    double water_surface_z = 0.0;
    double seabed_z = -1e9;
    double noise_pos_sigma = 0.0;        // sensor noise on controller-visible position, m
    double pitch_disturbance = 0.0;      // external pitch torque pulse amplitude, N m
    double disturbance_period = 0.0;     // pulse train period, s (0 = off)
    double disturbance_duty = 0.5;
    std::vector<Obstacle> obstacles;
};

struct Scenario {
    std::string name = "scenario";
    VehicleParams vehicle;
    TrajectorySpec trajectory;
    HybridState initial;
    OcpConfig ocp;
    PidGains pid;
    WaterExitConfig water_exit;
    SupervisorConfig supervisor;
    EnvironmentConfig environment;
    std::string propulsion = "ideal";    // ideal | foc
    MotorParams motor;
    double duration = 10.0;
    uint32_t seed = 1;
    bool water_exit_at_start = false;    // engage the exit controller at t = 0
    bool rmse_as_printed = false;
    double max_rmse = -1.0;              // declared threshold; < 0 = unchecked

    void validate() const;
};

// Scenario from a config file / parsed config ([vehicle], [trajectory],
// [controller], [environment], [run] sections).
Scenario load_scenario(const std::string& path);
Scenario scenario_from_config(const Config& cfg);

struct LogRow {
    double t = 0.0;
    int mode = 0, eta = 0, controller = 0, ctrl_tick = 0;
    HybridState state;
    Eigen::Vector3d ref_p{0, 0, 0};
    double ref_theta_t = 0.0;
    double ref_pitch = 0.0;  // aerial pitch reference, rad
    RotorCommand u = RotorCommand::Zero();
    Eigen::Vector4d rpm = Eigen::Vector4d::Zero();
    double kkt = 0.0;
    int sqp_iters = 0;
    double solve_ms = 0.0;
    std::string event;
};

struct RunLog {
    std::string name;
    std::vector<LogRow> rows;
    std::vector<TransitionEvent> events;
    double mean_solve_ms = 0.0;
    double max_solve_ms = 0.0;
    bool aborted = false;
    std::string abort_reason;
};

// One RK4 physics step; ground modes re-project the holonomic constraints
// (z and roll fixed) and keep the aerial coordinates synced. tau_ext is an
// external torque in the mode-active body frame.
HybridState integrate_step(const HybridState& state, const RotorCommand& u,
                           const VehicleParams& params, Medium medium, MotionMode mode, double dt,
                           const Eigen::Vector3d& tau_ext = Eigen::Vector3d::Zero());

RunLog run(const Scenario& scenario);

// Versioned CSV (`triphibot-log-v1`), 9-significant-digit decimals.
void write_csv(const RunLog& log, std::ostream& os);
void save_csv(const RunLog& log, const std::string& path);

struct LogTable {
    std::vector<std::string> columns;
    std::vector<std::vector<double>> rows;     // numeric columns only
    std::vector<std::string> events;           // per-row event string ("" if none)

    int col(const std::string& name) const;    // -1 if absent
    std::vector<double> series(const std::string& name) const;
};

LogTable read_log(const std::string& path);

}  // namespace triphibot

#endif
