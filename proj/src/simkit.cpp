#include "triphibot/simkit.hpp"

#include <array>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <random>
#include <sstream>
#include <stdexcept>

namespace triphibot {

namespace {

HybridState advance(const HybridState& s, const StateDerivative& d, double h, bool ground) {
    HybridState n = s;
    n.p_W += h * d.dp_W;
    if (ground) {
        n.v_l += h * d.dv_l;
        n.theta_T += h * d.dtheta_T;
        n.psi_T += h * d.dpsi_T;
        n.w_T += h * d.dw_T;
    } else {
        n.v_A += h * d.dv_A;
        n.Theta_A += h * d.dTheta_A;
        n.w_A += h * d.dw_A;
    }
    return n;
}

StateDerivative rk4_combine(const StateDerivative& k1, const StateDerivative& k2,
                            const StateDerivative& k3, const StateDerivative& k4) {
    StateDerivative d;
    auto mix3 = [](const Eigen::Vector3d& a, const Eigen::Vector3d& b, const Eigen::Vector3d& c,
                   const Eigen::Vector3d& e) { return (a + 2.0 * b + 2.0 * c + e) / 6.0; };
    auto mix1 = [](double a, double b, double c, double e) {
        return (a + 2.0 * b + 2.0 * c + e) / 6.0;
    };
    d.dp_W = mix3(k1.dp_W, k2.dp_W, k3.dp_W, k4.dp_W);
    d.dv_A = mix3(k1.dv_A, k2.dv_A, k3.dv_A, k4.dv_A);
    d.dTheta_A = mix3(k1.dTheta_A, k2.dTheta_A, k3.dTheta_A, k4.dTheta_A);
    d.dw_A = mix3(k1.dw_A, k2.dw_A, k3.dw_A, k4.dw_A);
    d.dw_T = mix3(k1.dw_T, k2.dw_T, k3.dw_T, k4.dw_T);
    d.dtheta_T = mix1(k1.dtheta_T, k2.dtheta_T, k3.dtheta_T, k4.dtheta_T);
    d.dpsi_T = mix1(k1.dpsi_T, k2.dpsi_T, k3.dpsi_T, k4.dpsi_T);
    d.dv_l = mix1(k1.dv_l, k2.dv_l, k3.dv_l, k4.dv_l);
    return d;
}

bool finite(const HybridState& s) {
    return s.p_W.allFinite() && s.v_A.allFinite() && s.Theta_A.allFinite() &&
           s.w_A.allFinite() && s.w_T.allFinite() && std::isfinite(s.v_l) &&
           std::isfinite(s.theta_T) && std::isfinite(s.psi_T);
}

}  // namespace

HybridState integrate_step(const HybridState& state, const RotorCommand& u,
                           const VehicleParams& params, Medium medium, MotionMode mode, double dt,
                           const Eigen::Vector3d& tau_ext) {
    const bool ground = is_ground(mode);
    const double zeta = medium_flag(medium);

    auto rhs = [&](const HybridState& s) {
        HybridState sm = s;
        sm.mode = mode;
        StateDerivative d = ground ? ground_derivative(sm, u, params, medium)
                                   : flight_derivative(sm, u, params, medium);
        if (!tau_ext.isZero()) {
            if (ground) {
                Eigen::Vector3d I = params.M_T + zeta * params.M_a;
                const double ey = tau_ext.y() / I.y();
                const double ez = tau_ext.z() / I.z();
                d.dw_T.y() += ey;
                d.dw_T.z() += ez;
                // The wheel-constraint roll rate follows the extra yaw accel.
                d.dw_T.x() += -std::tan(sm.theta_T) * ez;
            } else {
                d.dw_A += tau_ext.cwiseQuotient(params.M_A + zeta * params.M_a);
            }
        }
        return d;
    };

    StateDerivative k1 = rhs(state);
    StateDerivative k2 = rhs(advance(state, k1, 0.5 * dt, ground));
    StateDerivative k3 = rhs(advance(state, k2, 0.5 * dt, ground));
    StateDerivative k4 = rhs(advance(state, k3, dt, ground));
    HybridState next = advance(state, rk4_combine(k1, k2, k3, k4), dt, ground);
    next.mode = mode;

    if (ground) {
        next.p_W.z() = state.p_W.z();  // holonomic: wheel contact keeps z
        sync_aerial_from_terrestrial(next);
    } else {
        sync_terrestrial_from_aerial(next);
    }
    if (!finite(next)) throw std::runtime_error("integrate_step: nonfinite state");
    return next;
}

void Scenario::validate() const {
    if (duration <= 0.0) throw std::invalid_argument("scenario: duration must be > 0");
    vehicle.validate();
    ocp.validate();
    if ((initial.mode == MotionMode::FlightWater || initial.mode == MotionMode::WaterSurface ||
         initial.mode == MotionMode::GroundSeabed) &&
        !environment.has_water)
        throw std::invalid_argument("scenario: water mode without a water environment");
    if (initial.mode == MotionMode::GroundLand &&
        std::abs(initial.p_W.z() - vehicle.contact_height) > 0.02)
        throw std::invalid_argument("scenario: ground start must sit at the contact height");
}

RunLog run(const Scenario& sc) {
    sc.validate();
    const double dt_p = 1e-3;
    const int ctrl_div = 5;
    const double dt_c = dt_p * ctrl_div;
    const VehicleParams& vp = sc.vehicle;
    const double traj_T = sc.trajectory.duration();

    Supervisor sup(sc.supervisor, sc.initial.mode);
    HnmpcSolver solver(sc.ocp, vp);
    AttitudePid att(sc.pid);
    RatePid rate(sc.pid);
    WaterExitController exitc(sc.pid, sc.water_exit, vp);
    std::array<IdealRotor, 4> rotors;
    std::array<MotorState, 4> motors{};
    std::vector<FocController> focs;
    for (int i = 0; i < 4; ++i) focs.emplace_back(sc.motor);
    std::mt19937 rng(sc.seed);
    std::normal_distribution<double> gauss(0.0, 1.0);

    HybridState state = sc.initial;
    if (is_ground(state.mode)) sync_aerial_from_terrestrial(state);
    else sync_terrestrial_from_aerial(state);

    auto traj_time = [&](double tt) {
        if (sc.trajectory.periodic && traj_T > 0.0) return std::fmod(tt, traj_T);
        return std::clamp(tt, 0.0, traj_T);
    };
    auto physical_medium = [&](const HybridState& s) {
        return (sc.environment.has_water && s.p_W.z() < sc.environment.water_surface_z)
                   ? Medium::Water
                   : Medium::Air;
    };
    auto prop_medium = [&](const HybridState& s) {
        // Floating at the surface the props sit above the waterline.
        return s.mode == MotionMode::WaterSurface ? Medium::Air : physical_medium(s);
    };

    // Start the rotors at the trim for the initial condition.
    RotorCommand u_cmd;
    if (medium_of(state.mode) == Medium::Water || state.mode == MotionMode::WaterSurface) {
        const double net = vp.m * vp.g - vp.rho_w * vp.V_disp * vp.g;
        u_cmd.setConstant(net / 4.0);
    } else {
        u_cmd = reference_point(sc.trajectory, 0.0, vp, state.psi_T).u_ref;
    }
    Eigen::Vector4d rpm;
    for (int i = 0; i < 4; ++i) {
        rotors[i].set(u_cmd[i]);
        motors[i].rpm = vp.rpm_for_thrust(u_cmd[i], prop_medium(state));
        rpm[i] = motors[i].rpm;
    }

    if (sc.water_exit_at_start) sup.request_water_exit(0.0);

    RunLog log;
    log.name = sc.name;
    const int steps = static_cast<int>(std::round(sc.duration / dt_p));
    log.rows.reserve(steps);

    double kkt = 0.0, solve_ms = 0.0, solve_sum = 0.0;
    int sqp_iters = 0, solves = 0, eta_log = is_ground(state.mode) ? 1 : 0;
    double tau_obs = 0.0, wy_pred = 0.0;
    bool obs_valid = false;
    Eigen::Vector3d ref_p = state.p_W;
    double ref_theta_t = state.theta_T, ref_pitch = state.Theta_A.y();
    size_t events_seen = 0;

    for (int k = 0; k < steps; ++k) {
        const double t = k * dt_p;
        const bool ctrl = (k % ctrl_div) == 0;
        std::string row_event;

        if (ctrl) {
            SupervisorInput in;
            in.t = t;
            in.state = state;
            in.rotor_rpm = rpm;
            for (int i = 0; i < 4; ++i)
                in.rotor_thrust[i] =
                    (sc.propulsion == "foc")
                        ? propeller_coupling(rpm[i], prop_medium(state), vp).thrust
                        : rotors[i].thrust();
            in.exit_phase = exitc.phase();
            sup.step(in);

            if (sup.mode() != state.mode) {
                const MotionMode m = sup.mode();
                if (is_ground(m) && !is_ground(state.mode)) {
                    // Touchdown: project onto the wheel-contact constraint.
                    sync_terrestrial_from_aerial(state);
                    state.p_W.z() = (m == MotionMode::GroundSeabed)
                                        ? sc.environment.seabed_z + vp.contact_height
                                        : vp.contact_height;
                    state.mode = m;
                    sync_aerial_from_terrestrial(state);
                } else {
                    state.mode = m;
                }
            }

            HybridState meas = state;
            if (sc.environment.noise_pos_sigma > 0.0)
                for (int j = 0; j < 3; ++j)
                    meas.p_W[j] += sc.environment.noise_pos_sigma * gauss(rng);

            // Pitch-axis torque disturbance observer (ground mode only): the
            // gap between the achieved pitch rate and the model's one-tick
            // prediction (which already includes tau_obs) is the estimation
            // error, folded back into tau_obs and handed to the MPC model.
            // Without it an unmodeled constant torque droops the pitch
            // toward the passive equilibrium.
            // Hold off after a mode transition: the touchdown snap produces
            // one discontinuous rate residual that would rail the estimate.
            const double since_switch =
                sup.events().empty() ? 1e9 : t - sup.events().back().t;
            const bool obs_on = is_ground(state.mode) &&
                                sup.controller() == ActiveController::Hnmpc &&
                                since_switch > 0.25;
            if (obs_on && obs_valid) {
                const Medium omed = physical_medium(state);
                const double iy = vp.M_T.y() + medium_flag(omed) * vp.M_a.y();
                tau_obs += 0.55 * iy * (state.w_T.y() - wy_pred) / dt_c;
                tau_obs = std::clamp(tau_obs, -0.2, 0.2);
            }
            if (!obs_on) {
                tau_obs = 0.0;
                obs_valid = false;
            }
            solver.set_pitch_disturbance(tau_obs);

            switch (sup.controller()) {
                case ActiveController::Hnmpc: {
                    // The rotors are a first-order lag the prediction model
                    // treats as instantaneous. Compensate by predicting the
                    // measured state forward by the lag time under the thrust
                    // currently produced, and shifting the reference to match.
                    const Medium pmed0 = prop_medium(state);
                    const double lag = rotor_lag(pmed0);
                    RotorCommand u_now;
                    for (int i = 0; i < 4; ++i)
                        u_now[i] = (sc.propulsion == "foc")
                                       ? propeller_coupling(rpm[i], pmed0, vp).thrust
                                       : rotors[i].thrust();
                    const int nlag = std::max(1, static_cast<int>(std::round(lag / dt_c)));
                    try {
                        HybridState pred = meas;
                        for (int i = 0; i < nlag; ++i)
                            pred = integrate_step(pred, u_now, vp, physical_medium(pred),
                                                  state.mode, lag / nlag,
                                                  Eigen::Vector3d(0.0, tau_obs, 0.0));
                        meas = pred;
                    } catch (const std::exception&) {
                        // Near the ground-model pitch singularity the forward
                        // prediction can fail; fall back to the raw state.
                    }

                    std::vector<ReferencePoint> refs;
                    refs.reserve(sc.ocp.N + 1);
                    for (int i = 0; i <= sc.ocp.N; ++i) {
                        const double tt = traj_time(t + lag + i * sc.ocp.dt);
                        refs.push_back(reference_point(sc.trajectory, tt, vp, state.psi_T));
                    }
                    ModeSchedule sched = eta_schedule(refs, sc.ocp);
                    // Descent hysteresis: below h_judge but above the contact
                    // height the reference is still airborne. Ground-weighting
                    // those stages would have the model hold against a gravity
                    // lean torque the free-flying plant does not feel, pitching
                    // it through vertical before touchdown.
                    if (state.mode == MotionMode::FlightAir) {
                        for (int i = 0; i <= sc.ocp.N; ++i)
                            if (sched.eta[i] == 1 &&
                                refs[i].state.mode == MotionMode::FlightAir &&
                                refs[i].state.p_W.z() > vp.contact_height + 0.005)
                                sched.eta[i] = 0;
                    }
                    Solution sol = solver.solve(meas, refs, sched);
                    u_cmd = sol.u[0];
                    kkt = sol.kkt;
                    sqp_iters = sol.iterations;
                    solve_ms = sol.solve_time_s * 1e3;
                    solve_sum += solve_ms;
                    log.max_solve_ms = std::max(log.max_solve_ms, solve_ms);
                    ++solves;
                    eta_log = sched.eta[0];
                    // Log the reference at the current time, not the shifted one.
                    const ReferencePoint now =
                        reference_point(sc.trajectory, traj_time(t), vp, state.psi_T);
                    ref_p = now.state.p_W;
                    ref_theta_t = now.state.theta_T;
                    ref_pitch = now.state.Theta_A.y();
                    break;
                }
                case ActiveController::PidUnderwater: {
                    FlatTrajectoryPoint pt = sample(sc.trajectory, traj_time(t));
                    const Eigen::Vector3d Theta_des(0.0, pt.theta_T[0], 0.0);
                    Eigen::Vector3d omega_des = att.step(Theta_des, meas.Theta_A, dt_c);
                    Eigen::Vector3d tau = rate.step(omega_des, meas.w_A, dt_c);
                    // Depth hold around the net (weight - buoyancy) deficit.
                    const double net = vp.m * vp.g - vp.rho_w * vp.V_disp * vp.g;
                    const Eigen::Vector3d v_W = rotation_A_to_W(meas.Theta_A) * meas.v_A;
                    double T = net + 4.0 * (pt.p[0].z() - meas.p_W.z()) - 3.0 * v_W.z();
                    const double tilt =
                        std::cos(meas.Theta_A.x()) * std::cos(meas.Theta_A.y());
                    if (std::abs(tilt) > 0.3) T /= tilt;
                    u_cmd = pid_allocate(tau, T, medium_of(state.mode), state.mode, vp).u;
                    ref_p = pt.p[0];
                    ref_pitch = pt.theta_T[0];
                    ref_theta_t = state.theta_T;
                    eta_log = is_ground(state.mode) ? 1 : 0;
                    break;
                }
                case ActiveController::PidWaterExit: {
                    auto out = exitc.step(state, Eigen::Vector3d::Zero(), rpm, dt_c);
                    u_cmd = out.u;
                    ref_p = state.p_W;  // no positional reference during the exit
                    ref_pitch = 0.0;
                    ref_theta_t = state.theta_T;
                    eta_log = 0;
                    break;
                }
            }

            if (obs_on) {
                // One-tick pitch-rate prediction under the realized thrusts
                // and the current estimate (so the residual stays the gap to
                // the true disturbance, not its full value).
                const Medium omed = physical_medium(state);
                RotorCommand u_real;
                for (int i = 0; i < 4; ++i)
                    u_real[i] = (sc.propulsion == "foc")
                                    ? propeller_coupling(rpm[i], prop_medium(state), vp).thrust
                                    : rotors[i].thrust();
                StateDerivative d = ground_derivative(state, u_real, vp, omed);
                const double iy = vp.M_T.y() + medium_flag(omed) * vp.M_a.y();
                wy_pred = state.w_T.y() + dt_c * (d.dw_T.y() + tau_obs / iy);
                obs_valid = true;
            }

            while (events_seen < sup.events().size()) {
                const TransitionEvent& e = sup.events()[events_seen++];
                log.events.push_back(e);
                if (!row_event.empty()) row_event += ";";
                row_event += e.label + ":" + to_string(e.from) + ">" + to_string(e.to);
            }
        }

        const Medium med = physical_medium(state);
        const Medium pmed = prop_medium(state);
        const RotorCommand u_box = u_cmd.cwiseMax(vp.u_min(pmed)).cwiseMin(vp.u_max(pmed));

        RotorCommand u_act;
        if (sc.propulsion == "foc") {
            for (int i = 0; i < 4; ++i) {
                const double rpm_ref = vp.rpm_for_thrust(u_box[i], pmed);
                const Eigen::Vector2d v = focs[i].step(rpm_ref, motors[i], dt_p);
                for (int s = 0; s < 20; ++s) {
                    const double tau_load = propeller_coupling(motors[i].rpm, pmed, vp).torque;
                    motors[i] = motor_step(motors[i], v, tau_load, sc.motor, dt_p / 20.0);
                }
                rpm[i] = motors[i].rpm;
                u_act[i] = propeller_coupling(rpm[i], pmed, vp).thrust;
            }
        } else {
            for (int i = 0; i < 4; ++i) {
                rotors[i].step(u_box[i], pmed, vp, dt_p);
                u_act[i] = rotors[i].thrust();
                rpm[i] = rotors[i].rpm(pmed, vp);
            }
        }

        Eigen::Vector3d tau_ext = Eigen::Vector3d::Zero();
        if (sc.environment.pitch_disturbance != 0.0 && sc.environment.disturbance_period > 0.0) {
            const double ph = std::fmod(t, sc.environment.disturbance_period);
            if (ph < sc.environment.disturbance_duty * sc.environment.disturbance_period)
                tau_ext.y() = sc.environment.pitch_disturbance;
        }

        LogRow row;
        try {
            state = integrate_step(state, u_act, vp, med, state.mode, dt_p, tau_ext);
        } catch (const std::exception& e) {
            log.aborted = true;
            log.abort_reason = e.what();
            row.t = t + dt_p;
            row.event = std::string("abort:") + e.what();
            log.rows.push_back(row);
            break;
        }

        row.t = t + dt_p;
        row.mode = static_cast<int>(state.mode);
        row.eta = eta_log;
        row.controller = static_cast<int>(sup.controller());
        row.ctrl_tick = ctrl ? 1 : 0;
        row.state = state;
        row.ref_p = ref_p;
        row.ref_theta_t = ref_theta_t;
        row.ref_pitch = ref_pitch;
        row.u = u_cmd;
        row.rpm = rpm;
        row.kkt = kkt;
        row.sqp_iters = sqp_iters;
        row.solve_ms = solve_ms;
        row.event = row_event;
        log.rows.push_back(row);
    }

    log.mean_solve_ms = solves > 0 ? solve_sum / solves : 0.0;
    return log;
}

namespace {

const char* kLogVersion = "triphibot-log-v1";
const char* kColumns =
    "t,mode,eta,controller,ctrl_tick,px,py,pz,vax,vay,vaz,phi,theta,psi,theta_t,psi_t,v_l,"
    "wax,way,waz,wtx,wty,wtz,ref_px,ref_py,ref_pz,ref_theta_t,ref_pitch,"
    "u1,u2,u3,u4,rpm1,rpm2,rpm3,rpm4,kkt,sqp_iters,solve_ms,event";

void fmt(std::string& out, double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.9g", v);
    out += buf;
    out += ',';
}

}  // namespace

void write_csv(const RunLog& log, std::ostream& os) {
    os << kLogVersion << "\n" << kColumns << "\n";
    std::string line;
    for (const LogRow& r : log.rows) {
        line.clear();
        fmt(line, r.t);
        fmt(line, r.mode);
        fmt(line, r.eta);
        fmt(line, r.controller);
        fmt(line, r.ctrl_tick);
        for (int i = 0; i < 3; ++i) fmt(line, r.state.p_W[i]);
        for (int i = 0; i < 3; ++i) fmt(line, r.state.v_A[i]);
        for (int i = 0; i < 3; ++i) fmt(line, r.state.Theta_A[i]);
        fmt(line, r.state.theta_T);
        fmt(line, r.state.psi_T);
        fmt(line, r.state.v_l);
        for (int i = 0; i < 3; ++i) fmt(line, r.state.w_A[i]);
        for (int i = 0; i < 3; ++i) fmt(line, r.state.w_T[i]);
        for (int i = 0; i < 3; ++i) fmt(line, r.ref_p[i]);
        fmt(line, r.ref_theta_t);
        fmt(line, r.ref_pitch);
        for (int i = 0; i < 4; ++i) fmt(line, r.u[i]);
        for (int i = 0; i < 4; ++i) fmt(line, r.rpm[i]);
        fmt(line, r.kkt);
        fmt(line, r.sqp_iters);
        fmt(line, r.solve_ms);
        line += r.event;
        os << line << "\n";
    }
}

void save_csv(const RunLog& log, const std::string& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("save_csv: cannot open " + path);
    write_csv(log, os);
}

int LogTable::col(const std::string& name) const {
    for (size_t i = 0; i < columns.size(); ++i)
        if (columns[i] == name) return static_cast<int>(i);
    return -1;
}

std::vector<double> LogTable::series(const std::string& name) const {
    const int c = col(name);
    if (c < 0) throw std::out_of_range("log: no column " + name);
    std::vector<double> out;
    out.reserve(rows.size());
    for (const auto& r : rows) out.push_back(r[c]);
    return out;
}

LogTable read_log(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("read_log: cannot open " + path);
    std::string line;
    if (!std::getline(is, line) || line != kLogVersion)
        throw std::runtime_error("read_log: missing " + std::string(kLogVersion) + " header");
    if (!std::getline(is, line)) throw std::runtime_error("read_log: missing column header");

    LogTable table;
    std::stringstream hs(line);
    std::string tok;
    while (std::getline(hs, tok, ',')) table.columns.push_back(tok);
    if (table.columns.empty() || table.columns.back() != "event")
        throw std::runtime_error("read_log: unexpected column layout");
    const size_t ncol = table.columns.size() - 1;  // numeric columns

    while (std::getline(is, line)) {
        if (line.empty()) continue;
        std::vector<double> row;
        row.reserve(ncol);
        size_t pos = 0;
        for (size_t i = 0; i < ncol; ++i) {
            const size_t comma = line.find(',', pos);
            row.push_back(std::strtod(line.c_str() + pos, nullptr));
            pos = comma + 1;
        }
        table.rows.push_back(std::move(row));
        table.events.push_back(line.substr(pos));
    }
    table.columns.pop_back();
    return table;
}

}  // namespace triphibot
