#ifndef TRIPHIBOT_PROPULSION_HPP
#define TRIPHIBOT_PROPULSION_HPP

// Electrical-level simulation of one FOC propulsion unit: PMSM dq model,
// cascaded current/speed loops with an ideal 14-bit encoder, an ESC
// baseline with noisy speed estimation, and the medium-dependent propeller
// load. Used standalone for bench scenarios and optionally in-loop.

#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "triphibot/core_model.hpp"

namespace triphibot {

struct MotorParams {
    double R = 0.12;          // stator resistance, ohm
    double L_d = 25e-6;       // H
    double L_q = 25e-6;       // H
    double flux = 6.9e-4;     // rotor flux linkage, Wb (AT2312 KV1150 class)
    int pole_pairs = 7;
    double J = 2e-6;          // rotor + propeller inertia, kg m^2
    double friction = 1.2e-6; // viscous friction, N m s/rad
    double v_limit = 16.8;    // 4S pack, V
    double i_limit = 40.0;    // A
    double erpm_limit = 200000.0;

    void validate() const;
    double torque_constant() const { return 1.5 * pole_pairs * flux; }  // N m / A
    static MotorParams from_config(const Config& cfg);
};

struct MotorState {
    double i_d = 0.0;       // A
    double i_q = 0.0;       // A
    double angle_e = 0.0;   // electrical angle, rad
    double rpm = 0.0;       // mechanical speed, RPM (signed)

    double omega_mech() const { return rpm * 2.0 * M_PI / 60.0; }
    double omega_elec(const MotorParams& p) const { return omega_mech() * p.pole_pairs; }
};

// One electrical step (Euler, dt <= 50 us) of the dq plant under an applied
// dq voltage and a shaft load torque.
MotorState motor_step(const MotorState& state, const Eigen::Vector2d& v_dq, double tau_load,
                      const MotorParams& params, double dt);

// Propeller thrust and shaft load torque at a signed speed. The water torque
// coefficient is the air one scaled by the thrust-coefficient ratio, which
// puts the 420 RPM water load well above the 2100 RPM air load.
struct PropLoad {
    double thrust;      // N, signed
    double torque;      // N m, signed (same sign as speed)
};
PropLoad propeller_coupling(double rpm, Medium medium, const VehicleParams& vp);

struct FocGains {
    double speed_kp = 0.08;   // A per rad/s
    double speed_ki = 6.0;
    double current_kp = 0.31; // L * bandwidth
    double current_ki = 1500.0;
};

// Cascaded FOC: outer speed PID -> I_q_ref (I_d_ref = 0), inner PI current
// loops with decoupling feedforward. The encoder is ideal but quantized to
// 14 bits.
class FocController {
public:
    FocController(const MotorParams& params, const FocGains& gains = {})
        : params_(params), gains_(gains) {}

    Eigen::Vector2d step(double rpm_ref, const MotorState& state, double dt);
    double iq_ref() const { return iq_ref_; }
    void reset();

private:
    MotorParams params_;
    FocGains gains_;
    double speed_integral_ = 0.0;
    double id_integral_ = 0.0;
    double iq_integral_ = 0.0;
    double iq_ref_ = 0.0;
};

struct EscConfig {
    double kp = 0.004;           // V per RPM of estimate error
    double ki = 0.02;
    double update_period = 0.02; // speed-estimate latency, s
    double noise_low = 0.05;     // relative sigma at low speed
    double noise_high = 0.01;    // relative sigma at high speed
    double low_speed_rpm = 3000.0;
    double bias_low = 0.05;      // estimate bias below low_speed_rpm
    double stall_rpm = 300.0;
    uint32_t seed = 1;
};

// ESC baseline: zero-crossing-style speed estimate (noisy, latent, biased at
// low speed), PI voltage command without a torque-matching current loop, and
// a speed-dependent commutation angle error.
class EscController {
public:
    EscController(const MotorParams& params, const EscConfig& cfg = {})
        : params_(params), cfg_(cfg), rng_(cfg.seed) {}

    Eigen::Vector2d step(double rpm_ref, const MotorState& state, double dt);
    bool stall_flag() const { return stall_; }
    double estimate_rpm() const { return estimate_; }
    void reset();

private:
    MotorParams params_;
    EscConfig cfg_;
    std::mt19937 rng_;
    double estimate_ = 0.0;
    double since_update_ = 1e9;
    double integral_ = 0.0;
    bool stall_ = false;
};

// Bench trace row; the CSV columns of the bench CLI.
struct BenchSample {
    double t, rpm_ref, rpm, i_d, i_q, v_d, v_q, power, thrust;
};

struct PowerReport {
    double power = 0.0;            // W, mean over the steady window
    double specific_thrust = 0.0;  // N/W (0 by convention at zero thrust)
    double mean_rpm = 0.0;
    bool steady = false;
};

// Electrical power and specific thrust over the trailing steady-state
// window of a constant-setpoint trace.
PowerReport power_and_specific_thrust(const std::vector<BenchSample>& trace, double window_frac = 0.3);

enum class DriverKind { Foc, Esc };

struct BenchProfile {
    std::string name = "step";  // step | square | sweep
    double target_rpm = 420.0;
    double half_period = 0.25;  // square wave
    std::vector<double> sweep_rpm;
    double sweep_hold = 1.5;
    double duration = 2.0;
};

// Runs one motor + driver + propeller load at 20 kHz electrical rate with
// the controller at 1 kHz; returns samples at 1 kHz.
std::vector<BenchSample> run_motor_bench(const BenchProfile& profile, DriverKind driver,
                                         Medium medium, const MotorParams& mp,
                                         const VehicleParams& vp);

// Thrust response time constant of a rotor disc in each medium.
double rotor_lag(Medium medium);

// Ideal-mode rotor: commanded thrust realized through a first-order lag
// (30 ms air / 60 ms water), tracking the RPM implied by the coefficients.
class IdealRotor {
public:
    void step(double thrust_cmd, Medium medium, const VehicleParams& vp, double dt);
    void set(double thrust) { thrust_ = thrust; }
    double thrust() const { return thrust_; }
    double rpm(Medium medium, const VehicleParams& vp) const {
        return vp.rpm_for_thrust(thrust_, medium);
    }

private:
    double thrust_ = 0.0;
};

}  // namespace triphibot

#endif
