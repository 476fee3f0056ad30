#include "triphibot/propulsion.hpp"

#include <cmath>
#include <stdexcept>

namespace triphibot {

namespace {

constexpr double kRpmToRad = 2.0 * M_PI / 60.0;

double clamp(double x, double lo, double hi) { return std::min(std::max(x, lo), hi); }

// Speed seen through a 14-bit encoder differenced at 1 kHz, with 16x
// sub-count interpolation (RPM per LSB = 60 / (16384 * 1e-3) / 16).
double encoder_quantize_rpm(double rpm) {
    const double step = 60.0 / (16384.0 * 1e-3 * 16.0);
    return std::round(rpm / step) * step;
}

}  // namespace

void MotorParams::validate() const {
    if (R <= 0.0 || L_d <= 0.0 || L_q <= 0.0 || flux <= 0.0)
        throw std::invalid_argument("motor: electrical parameters must be positive");
    if (pole_pairs < 1) throw std::invalid_argument("motor: pole_pairs < 1");
    if (J <= 0.0) throw std::invalid_argument("motor: inertia must be positive");
    if (v_limit <= 0.0 || i_limit <= 0.0)
        throw std::invalid_argument("motor: limits must be positive");
}

MotorParams MotorParams::from_config(const Config& cfg) {
    MotorParams p;
    p.R = cfg.get_double("motor.R", p.R);
    p.L_d = cfg.get_double("motor.L_d", p.L_d);
    p.L_q = cfg.get_double("motor.L_q", p.L_q);
    p.flux = cfg.get_double("motor.flux", p.flux);
    p.pole_pairs = cfg.get_int("motor.pole_pairs", p.pole_pairs);
    p.J = cfg.get_double("motor.J", p.J);
    p.friction = cfg.get_double("motor.friction", p.friction);
    p.v_limit = cfg.get_double("motor.v_limit", p.v_limit);
    p.i_limit = cfg.get_double("motor.i_limit", p.i_limit);
    p.validate();
    return p;
}

MotorState motor_step(const MotorState& state, const Eigen::Vector2d& v_dq, double tau_load,
                      const MotorParams& p, double dt) {
    const double w_e = state.omega_elec(p);
    const double v_d = clamp(v_dq.x(), -p.v_limit, p.v_limit);
    const double v_q = clamp(v_dq.y(), -p.v_limit, p.v_limit);

    MotorState next = state;
    const double di_d = (v_d - p.R * state.i_d + w_e * p.L_q * state.i_q) / p.L_d;
    const double di_q = (v_q - p.R * state.i_q - w_e * (p.L_d * state.i_d + p.flux)) / p.L_q;
    next.i_d = clamp(state.i_d + di_d * dt, -p.i_limit, p.i_limit);
    next.i_q = clamp(state.i_q + di_q * dt, -p.i_limit, p.i_limit);

    const double T_e = p.torque_constant() * state.i_q;
    const double w_m = state.omega_mech();
    const double dw_m = (T_e - tau_load - p.friction * w_m) / p.J;
    next.rpm = state.rpm + dw_m * dt / kRpmToRad;
    next.angle_e = std::fmod(state.angle_e + w_e * dt, 2.0 * M_PI);
    return next;
}

PropLoad propeller_coupling(double rpm, Medium medium, const VehicleParams& vp) {
    PropLoad out;
    const double c_t = vp.thrust_coeff(medium, rpm >= 0.0 ? +1 : -1);
    out.thrust = c_t * rpm * std::abs(rpm);
    // Drag torque scales with the medium the same way thrust does.
    const double c_m = (medium == Medium::Water)
                           ? vp.c_m * (vp.c_t_water_fwd / vp.c_t_air_fwd)
                           : vp.c_m;
    out.torque = c_m * rpm * std::abs(rpm);
    return out;
}

Eigen::Vector2d FocController::step(double rpm_ref, const MotorState& state, double dt) {
    const double rpm_meas = encoder_quantize_rpm(state.rpm);
    const double e_w = (rpm_ref - rpm_meas) * kRpmToRad;

    speed_integral_ += e_w * dt;
    double iq_ref = gains_.speed_kp * e_w + gains_.speed_ki * speed_integral_;
    // Anti-windup: back off the integral when the current command saturates.
    if (std::abs(iq_ref) > params_.i_limit) {
        speed_integral_ -= e_w * dt;
        iq_ref = clamp(iq_ref, -params_.i_limit, params_.i_limit);
    }
    iq_ref_ = iq_ref;

    const double w_e = state.omega_elec(params_);
    const double e_d = 0.0 - state.i_d;
    const double e_q = iq_ref - state.i_q;
    id_integral_ += e_d * dt;
    iq_integral_ += e_q * dt;

    double v_d = gains_.current_kp * e_d + gains_.current_ki * id_integral_ -
                 w_e * params_.L_q * state.i_q;
    double v_q = gains_.current_kp * e_q + gains_.current_ki * iq_integral_ +
                 w_e * (params_.L_d * state.i_d + params_.flux);
    if (std::abs(v_d) > params_.v_limit) id_integral_ -= e_d * dt;
    if (std::abs(v_q) > params_.v_limit) iq_integral_ -= e_q * dt;
    v_d = clamp(v_d, -params_.v_limit, params_.v_limit);
    v_q = clamp(v_q, -params_.v_limit, params_.v_limit);
    return {v_d, v_q};
}

void FocController::reset() {
    speed_integral_ = id_integral_ = iq_integral_ = 0.0;
    iq_ref_ = 0.0;
}

Eigen::Vector2d EscController::step(double rpm_ref, const MotorState& state, double dt) {
    // Back-EMF zero-crossing speed estimate: latent, noisy and biased when
    // the crossings are sparse (low speed).
    since_update_ += dt;
    if (since_update_ >= cfg_.update_period) {
        since_update_ = 0.0;
        const double mag = std::abs(state.rpm);
        const double sigma = (mag < cfg_.low_speed_rpm) ? cfg_.noise_low : cfg_.noise_high;
        const double bias = (mag < cfg_.low_speed_rpm) ? cfg_.bias_low : 0.0;
        std::normal_distribution<double> noise(0.0, sigma * std::max(mag, 100.0));
        estimate_ = state.rpm * (1.0 + bias) + noise(rng_);
        stall_ = std::abs(estimate_) < cfg_.stall_rpm && std::abs(rpm_ref) >= cfg_.stall_rpm;
    }

    const double e = rpm_ref - estimate_;
    integral_ += e * dt;
    double v = cfg_.kp * e + cfg_.ki * integral_;
    if (std::abs(v) > params_.v_limit) {
        integral_ -= e * dt;
        v = clamp(v, -params_.v_limit, params_.v_limit);
    }

    // Sensorless commutation: the applied voltage vector leads/lags the true
    // q axis by an angle that grows as the back-EMF signal degrades.
    const double err = (70.0 * M_PI / 180.0) * std::exp(-std::abs(state.rpm) / 2500.0);
    return {v * std::sin(err), v * std::cos(err)};
}

void EscController::reset() {
    estimate_ = 0.0;
    since_update_ = 1e9;
    integral_ = 0.0;
    stall_ = false;
}

PowerReport power_and_specific_thrust(const std::vector<BenchSample>& trace, double window_frac) {
    PowerReport rep;
    if (trace.size() < 10) return rep;
    const size_t n = trace.size();
    const size_t start = static_cast<size_t>(n * (1.0 - window_frac));

    double p_sum = 0.0, t_sum = 0.0, w_sum = 0.0, w2_sum = 0.0;
    size_t count = 0;
    for (size_t i = start; i < n; ++i) {
        p_sum += trace[i].power;
        t_sum += trace[i].thrust;
        w_sum += trace[i].rpm;
        w2_sum += trace[i].rpm * trace[i].rpm;
        ++count;
    }
    rep.power = p_sum / count;
    rep.mean_rpm = w_sum / count;
    const double var = std::max(0.0, w2_sum / count - rep.mean_rpm * rep.mean_rpm);
    const double sd = std::sqrt(var);
    rep.steady = sd <= 0.2 * std::max(std::abs(rep.mean_rpm), 100.0);
    const double thrust = t_sum / count;
    rep.specific_thrust = (rep.power > 1e-9 && thrust > 0.0) ? thrust / rep.power : 0.0;
    return rep;
}

std::vector<BenchSample> run_motor_bench(const BenchProfile& profile, DriverKind driver,
                                         Medium medium, const MotorParams& mp,
                                         const VehicleParams& vp) {
    const double dt_e = 5e-5;   // 20 kHz electrical
    const double dt_c = 1e-3;   // 1 kHz controller / sampling
    const int sub = static_cast<int>(std::round(dt_c / dt_e));

    double duration = profile.duration;
    if (profile.name == "sweep")
        duration = profile.sweep_hold * static_cast<double>(profile.sweep_rpm.size());

    auto ref_at = [&](double t) -> double {
        if (profile.name == "square") {
            const int half = static_cast<int>(t / profile.half_period);
            return (half % 2 == 0) ? profile.target_rpm : -profile.target_rpm;
        }
        if (profile.name == "sweep") {
            size_t idx = static_cast<size_t>(t / profile.sweep_hold);
            idx = std::min(idx, profile.sweep_rpm.size() - 1);
            return profile.sweep_rpm[idx];
        }
        return profile.target_rpm;  // step
    };

    MotorState state;
    FocController foc(mp);
    EscController esc(mp);

    std::vector<BenchSample> trace;
    trace.reserve(static_cast<size_t>(duration / dt_c) + 1);

    const int steps = static_cast<int>(std::round(duration / dt_c));
    for (int k = 0; k < steps; ++k) {
        const double t = k * dt_c;
        const double ref = ref_at(t);
        const Eigen::Vector2d v_dq = (driver == DriverKind::Foc) ? foc.step(ref, state, dt_c)
                                                                 : esc.step(ref, state, dt_c);
        double p_acc = 0.0;
        for (int j = 0; j < sub; ++j) {
            const PropLoad load = propeller_coupling(state.rpm, medium, vp);
            state = motor_step(state, v_dq, load.torque, mp, dt_e);
            p_acc += 1.5 * (v_dq.x() * state.i_d + v_dq.y() * state.i_q);
        }
        const PropLoad load = propeller_coupling(state.rpm, medium, vp);
        BenchSample s;
        s.t = t + dt_c;
        s.rpm_ref = ref;
        s.rpm = state.rpm;
        s.i_d = state.i_d;
        s.i_q = state.i_q;
        s.v_d = v_dq.x();
        s.v_q = v_dq.y();
        s.power = p_acc / sub;
        s.thrust = load.thrust;
        trace.push_back(s);
    }
    return trace;
}

double rotor_lag(Medium medium) { return medium == Medium::Water ? 0.060 : 0.030; }

void IdealRotor::step(double thrust_cmd, Medium medium, const VehicleParams& vp, double dt) {
    const double alpha = 1.0 - std::exp(-dt / rotor_lag(medium));
    thrust_ = thrust_ + alpha * (thrust_cmd - thrust_);
    (void)vp;
}

}  // namespace triphibot
