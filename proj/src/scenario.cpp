#include <cmath>
#include <stdexcept>

#include "triphibot/simkit.hpp"

namespace triphibot {

namespace {

MotionMode parse_mode(const std::string& s) {
    if (s == "flight_air" || s == "air") return MotionMode::FlightAir;
    if (s == "flight_water" || s == "underwater") return MotionMode::FlightWater;
    if (s == "ground_land" || s == "ground") return MotionMode::GroundLand;
    if (s == "ground_seabed" || s == "seabed") return MotionMode::GroundSeabed;
    if (s == "water_surface" || s == "surface") return MotionMode::WaterSurface;
    throw std::invalid_argument("scenario: unknown mode '" + s + "'");
}

TrajectorySpec build_trajectory(const Config& cfg, const VehicleParams& vp, double fallback_dur) {
    const std::string type = cfg.get_string("trajectory.type", "hold");
    const MotionMode mode = parse_mode(cfg.get_string("trajectory.mode", "air"));
    const Eigen::Vector3d pos = cfg.get_vec3("trajectory.position", {0, 0, 1});

    if (type == "lissajous8") {
        return make_lissajous8(cfg.get_double("trajectory.vmax", 2.0),
                               cfg.get_double("trajectory.amax", 2.0), mode, pos,
                               cfg.get_double("trajectory.periods", 1.0));
    }
    if (type == "line") {
        return make_line(pos, cfg.get_vec3("trajectory.dir", {1, 0, 0}),
                         cfg.get_double("trajectory.length", 2.0),
                         cfg.get_double("trajectory.vmax", 1.0),
                         cfg.get_double("trajectory.amax", 1.0), mode);
    }
    if (type == "attitude_sine") {
        const double amp = cfg.get_double("trajectory.amp_deg", 35.0) * M_PI / 180.0;
        return make_attitude_sine(amp, cfg.get_double("trajectory.period", 1.0),
                                  cfg.get_double("trajectory.duration", fallback_dur), mode, pos);
    }
    if (type == "combined_mission") return make_combined_mission(vp);
    if (type == "hold") {
        TrajectorySegment seg;
        seg.kind = PrimitiveKind::Hold;
        seg.mode = mode;
        seg.p0 = pos;
        seg.theta0 = cfg.get_double("trajectory.theta_deg", 0.0) * M_PI / 180.0;
        seg.duration = cfg.get_double("trajectory.duration", fallback_dur);
        return TrajectorySpec{{seg}};
    }
    throw std::invalid_argument("scenario: unknown trajectory type '" + type + "'");
}

}  // namespace

Scenario scenario_from_config(const Config& cfg) {
    Scenario sc;
    sc.vehicle = VehicleParams::from_config(cfg);
    sc.ocp = OcpConfig::from_config(cfg);
    sc.pid = PidGains::from_config(cfg, "controller");
    sc.supervisor = SupervisorConfig::from_config(cfg);
    sc.motor = MotorParams::from_config(cfg);
    sc.propulsion = cfg.get_string("controller.propulsion", "ideal");
    if (sc.propulsion != "ideal" && sc.propulsion != "foc")
        throw std::invalid_argument("scenario: propulsion must be ideal or foc");

    sc.water_exit.ramp_time = cfg.get_double("controller.exit_ramp_time", sc.water_exit.ramp_time);
    sc.water_exit.thrust_target_factor =
        cfg.get_double("controller.exit_thrust_factor", sc.water_exit.thrust_target_factor);
    sc.water_exit.airborne_rpm = cfg.get_double("controller.exit_airborne_rpm", sc.water_exit.airborne_rpm);
    sc.water_exit.stable_attitude_deg =
        cfg.get_double("controller.exit_stable_deg", sc.water_exit.stable_attitude_deg);
    sc.water_exit.stable_hold_time =
        cfg.get_double("controller.exit_stable_hold", sc.water_exit.stable_hold_time);
    sc.water_exit.timeout = cfg.get_double("controller.exit_timeout", sc.water_exit.timeout);

    EnvironmentConfig& env = sc.environment;
    env.has_water = cfg.get_bool("environment.water", false);
    env.water_surface_z = cfg.get_double("environment.water_surface_z", env.water_surface_z);
    env.seabed_z = cfg.get_double("environment.seabed_z", env.seabed_z);
    env.noise_pos_sigma = cfg.get_double("environment.noise_pos_sigma", 0.0);
    env.pitch_disturbance = cfg.get_double("environment.pitch_disturbance", 0.0);
    env.disturbance_period = cfg.get_double("environment.disturbance_period", 0.0);
    env.disturbance_duty = cfg.get_double("environment.disturbance_duty", 0.5);
    if (cfg.has("environment.obstacle")) {
        const std::vector<double> o = cfg.get_list("environment.obstacle");
        if (o.size() != 4)
            throw std::invalid_argument("scenario: obstacle needs x, y, z, height");
        sc.environment.obstacles.push_back({{o[0], o[1], o[2]}, o[3]});
    }
    // The supervisor shares the environment geometry and the MPC threshold.
    sc.supervisor.water_surface_z = env.water_surface_z;
    if (env.seabed_z > -1e8) sc.supervisor.seabed_z = env.seabed_z;
    sc.supervisor.h_judge = sc.ocp.h_judge;
    if (!cfg.has("supervisor.liftoff_force"))
        sc.supervisor.liftoff_force = sc.vehicle.m * sc.vehicle.g;

    sc.duration = cfg.get_double("run.duration", 10.0);
    sc.trajectory = build_trajectory(cfg, sc.vehicle, sc.duration);
    sc.name = cfg.get_string("run.name", "scenario");
    sc.seed = static_cast<uint32_t>(cfg.get_int("run.seed", 1));
    sc.water_exit_at_start = cfg.get_bool("run.water_exit", false);
    sc.rmse_as_printed = cfg.get_bool("run.rmse_as_printed", false);
    sc.max_rmse = cfg.get_double("run.max_rmse", -1.0);

    const std::string imode = cfg.get_string("run.initial_mode", "");
    if (imode.empty()) {
        sc.initial = reference_point(sc.trajectory, 0.0, sc.vehicle).state;
    } else {
        sc.initial = HybridState{};
        sc.initial.mode = parse_mode(imode);
        Eigen::Vector3d fb = cfg.get_vec3("trajectory.position", {0, 0, 0});
        sc.initial.p_W = cfg.get_vec3("run.initial_position", fb);
        sc.initial.theta_T =
            cfg.get_double("run.initial_theta_deg", is_ground(sc.initial.mode) ? 0.0 : -90.0) *
            M_PI / 180.0;
        if (!is_ground(sc.initial.mode)) {
            // Thrust-up pose: recover aerial Euler angles from the T pose.
            sync_aerial_from_terrestrial(sc.initial);
        }
    }
    sc.validate();
    return sc;
}

Scenario load_scenario(const std::string& path) {
    return scenario_from_config(Config::load(path));
}

}  // namespace triphibot
