#include "triphibot/pid_stack.hpp"

#include <cmath>

namespace triphibot {

double wrap_angle(double a) {
    a = std::fmod(a + M_PI, 2.0 * M_PI);
    if (a <= 0.0) a += 2.0 * M_PI;
    return a - M_PI;
}

PidGains PidGains::from_config(const Config& cfg, const std::string& section) {
    PidGains g;
    auto v = [&](const char* key, const Eigen::Vector3d& fb) {
        return cfg.get_vec3(section + "." + key, fb);
    };
    g.K_p = v("K_p", g.K_p);
    g.K_i = v("K_i", g.K_i);
    g.K_d = v("K_d", g.K_d);
    g.rate_K_p = v("rate_K_p", g.rate_K_p);
    g.rate_K_i = v("rate_K_i", g.rate_K_i);
    g.rate_K_d = v("rate_K_d", g.rate_K_d);
    g.integral_limit = cfg.get_double(section + ".integral_limit", g.integral_limit);
    g.output_limit = cfg.get_double(section + ".output_limit", g.output_limit);
    g.derivative_cutoff_hz = cfg.get_double(section + ".derivative_cutoff_hz", g.derivative_cutoff_hz);
    return g;
}

namespace {

Eigen::Vector3d clamp_each(const Eigen::Vector3d& v, double limit) {
    return v.cwiseMax(-limit).cwiseMin(limit);
}

}  // namespace

Eigen::Vector3d AttitudePid::step(const Eigen::Vector3d& Theta_des, const Eigen::Vector3d& Theta,
                                  double dt) {
    Eigen::Vector3d e;
    for (int i = 0; i < 3; ++i) e[i] = wrap_angle(Theta_des[i] - Theta[i]);

    integral_ = clamp_each(integral_ + e * dt, gains_.integral_limit);

    // Derivative on the low-pass-filtered measurement (no set-point kick).
    double alpha = dt * 2.0 * M_PI * gains_.derivative_cutoff_hz;
    alpha = alpha / (1.0 + alpha);
    Eigen::Vector3d deriv = Eigen::Vector3d::Zero();
    if (!has_prev_) {
        filtered_meas_ = Theta;
        has_prev_ = true;
    } else {
        Eigen::Vector3d next = filtered_meas_ + alpha * (Theta - filtered_meas_);
        deriv = (next - filtered_meas_) / dt;
        filtered_meas_ = next;
    }
    prev_filtered_ = filtered_meas_;

    Eigen::Vector3d tau = gains_.K_p.cwiseProduct(e) + gains_.K_i.cwiseProduct(integral_) -
                          gains_.K_d.cwiseProduct(deriv);
    return clamp_each(tau, gains_.output_limit);
}

void AttitudePid::reset() {
    integral_.setZero();
    has_prev_ = false;
}

Eigen::Vector3d RatePid::step(const Eigen::Vector3d& omega_des, const Eigen::Vector3d& omega,
                              double dt) {
    Eigen::Vector3d e = omega_des - omega;
    integral_ = clamp_each(integral_ + e * dt, gains_.integral_limit);
    Eigen::Vector3d deriv = Eigen::Vector3d::Zero();
    if (has_prev_) deriv = (omega - prev_meas_) / dt;
    prev_meas_ = omega;
    has_prev_ = true;
    Eigen::Vector3d tau = gains_.rate_K_p.cwiseProduct(e) + gains_.rate_K_i.cwiseProduct(integral_) -
                          gains_.rate_K_d.cwiseProduct(deriv);
    return clamp_each(tau, gains_.output_limit);
}

void RatePid::reset() {
    integral_.setZero();
    has_prev_ = false;
}

PidAllocation pid_allocate(const Eigen::Vector3d& tau_des, double T_collective, Medium medium,
                           MotionMode mode, const VehicleParams& params) {
    Wrench w;
    w.frame = is_ground(mode) ? WrenchFrame::T : WrenchFrame::A;
    w.T = T_collective;
    w.tau = tau_des;

    PidAllocation out;
    bool ok = false;
    out.u = invert_allocation(w, params, medium, &ok);
    if (ok) return out;

    // Scale the torque toward the collective-only solution until the box is
    // satisfied; the torque direction is preserved.
    out.saturated = true;
    double lo = 0.0, hi = 1.0;
    for (int i = 0; i < 24; ++i) {
        double mid = 0.5 * (lo + hi);
        Wrench ws = w;
        ws.tau = tau_des * mid;
        bool mid_ok = false;
        RotorCommand u = invert_allocation(ws, params, medium, &mid_ok);
        if (mid_ok) {
            lo = mid;
            out.u = u;
        } else {
            hi = mid;
        }
    }
    if (lo == 0.0) {
        Wrench ws = w;
        ws.tau.setZero();
        out.u = invert_allocation(ws, params, medium);
    }
    return out;
}

WaterExitController::Output WaterExitController::step(const HybridState& state,
                                                      const Eigen::Vector3d& target_attitude,
                                                      const Eigen::Vector4d& rotor_rpm,
                                                      double dt) {
    Output out;
    out.u = RotorCommand::Zero();

    if (phase_ == WaterExitPhase::Floating) phase_ = WaterExitPhase::ThrustRamp;

    Medium medium = medium_of(state.mode);
    bool already_airborne = state.mode == MotionMode::FlightAir;

    // Collective ramp toward the liftoff target.
    double target = cfg_.thrust_target_factor * params_.m * params_.g;
    double T = target * std::min(1.0, (t_ + dt) / cfg_.ramp_time);
    // Cap by what the current medium's box can deliver collectively.
    T = std::min(T, 4.0 * params_.u_max(medium) * 0.95);

    // Aerial attitude cascade: outer P on wrapped angle error, inner rate PID.
    Eigen::Vector3d e;
    for (int i = 0; i < 3; ++i) e[i] = wrap_angle(target_attitude[i] - state.Theta_A[i]);
    Eigen::Vector3d omega_des = gains_.K_p.cwiseProduct(e);
    Eigen::Vector3d tau = rate_.step(omega_des, state.w_A, dt);

    out.u = pid_allocate(tau, T, medium, state.mode, params_).u;
    t_ += dt;

    double att_err_deg = e.norm() * 180.0 / M_PI;
    bool speeds_above = already_airborne || (rotor_rpm.array().abs() > cfg_.airborne_rpm).all();

    if (phase_ == WaterExitPhase::ThrustRamp && speeds_above) {
        phase_ = WaterExitPhase::Airborne;
        t_airborne_ = t_;
    }
    if (phase_ == WaterExitPhase::Airborne) {
        if (att_err_deg < cfg_.stable_attitude_deg) {
            if (stable_since_ < 0.0) stable_since_ = t_;
            if (t_ - stable_since_ >= cfg_.stable_hold_time) {
                phase_ = WaterExitPhase::Stable;
                t_stable_ = t_;
            }
        } else {
            stable_since_ = -1.0;
        }
    }
    if (phase_ != WaterExitPhase::Stable && t_ > cfg_.timeout) phase_ = WaterExitPhase::Aborted;

    out.phase = phase_;
    return out;
}

}  // namespace triphibot
