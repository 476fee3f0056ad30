#include "triphibot/hnmpc.hpp"

#include <chrono>
#include <cmath>
#include <stdexcept>

#include "triphibot/algebra.hpp"
#include "triphibot/dual.hpp"
#include "triphibot/pid_stack.hpp"

namespace triphibot {

namespace {

constexpr int kNv = kNx + kNu;  // dual directions: state then control

template <typename T>
using Arr = std::array<T, kNx>;

template <typename T>
T clamp_unit(const T& x) {
    if (value(x) > 1.0) return T(1.0);
    if (value(x) < -1.0) return T(-1.0);
    return x;
}

// Continuous-time prediction model (air medium), mirroring flight_derivative
// and ground_derivative with the attitude as a quaternion. The eta-inactive
// coordinates are frozen.
template <typename T>
Arr<T> prediction_rhs(const Arr<T>& x, const std::array<T, kNu>& u, int eta,
                      const VehicleParams& p, double tau_y, double lean_gain) {
    using std::cos;
    using std::sin;
    using std::tan;

    Arr<T> dx{};
    const double a = p.lambda / std::sqrt(2.0);
    std::array<double, 4> c;
    for (int i = 0; i < 4; ++i)
        c[i] = p.c_m / p.thrust_coeff(Medium::Air, value(u[i]) >= 0.0 ? 1.0 : -1.0);
    const T T_tot = u[0] + u[1] + u[2] + u[3];
    const T tau_yaw = -c[0] * u[0] - c[1] * u[1] + c[2] * u[2] + c[3] * u[3];

    if (eta == 0) {
        Quat<T> q{x[6], x[7], x[8], x[9]};
        Mat3<T> R = q.to_rotation();
        Vec3<T> v{x[3], x[4], x[5]};
        Vec3<T> w{x[10], x[11], x[12]};

        Vec3<T> dp = R * v;
        dx[0] = dp.x; dx[1] = dp.y; dx[2] = dp.z;

        Vec3<T> g_body = R.tmul(Vec3<T>{T(0), T(0), T(-p.m * p.g)});
        Vec3<T> f{g_body.x, g_body.y, g_body.z + T_tot};
        Vec3<T> dv = -w.cross(v) + f / T(p.m);
        dx[3] = dv.x; dx[4] = dv.y; dx[5] = dv.z;

        Quat<T> dq = q.derivative(w);
        dx[6] = dq.w; dx[7] = dq.x; dx[8] = dq.y; dx[9] = dq.z;

        Vec3<T> tau{-a * u[0] + a * u[1] + a * u[2] - a * u[3],
                    (p.delta - a) * u[0] + (a + p.delta) * u[1] + (p.delta - a) * u[2] +
                        (a + p.delta) * u[3] + T(tau_y),
                    tau_yaw};
        Vec3<T> M{T(p.M_A.x()), T(p.M_A.y()), T(p.M_A.z())};
        Vec3<T> Mw = M.cwise(w);
        Vec3<T> rhs = tau - w.cross(Mw);
        dx[10] = rhs.x / M.x; dx[11] = rhs.y / M.y; dx[12] = rhs.z / M.z;
        return dx;
    }

    // Ground (land): planar rolling with the bilateral wheel constraint.
    const T v_l = x[13], th = x[14], ps = x[15];
    Vec3<T> w{x[16], x[17], x[18]};
    const T cth = cos(th), sth = sin(th);
    const T cps = cos(ps), sps = sin(ps);

    dx[0] = v_l * cps;
    dx[1] = v_l * sps;
    dx[13] = (T_tot * cth - p.rolling_resistance * v_l) / T(p.m);

    // Saturate sec(theta) near the vertical-pose singularity. The prediction
    // saturates earlier (80 deg) than the plant (87.5 deg): the sec^2 steering
    // feedback would otherwise make the dt = 0.05 shooting rollout unstable
    // for stages that sit near the vertical pose after a landing reset.
    T cth_s = cth;
    const double c_min = std::cos(80.0 * M_PI / 180.0);
    if (std::abs(value(cth)) < c_min)
        cth_s = T(std::copysign(c_min, value(cth) == 0.0 ? 1.0 : value(cth)));
    const T sec = T(1.0) / cth_s;
    dx[14] = w.y;
    dx[15] = w.z * sec;

    // w_T,x is algebraic under the wheel constraint (-sin(theta) * dpsi);
    // integrating its exact derivative chain couples sec^2 feedback into the
    // gyroscopic terms and blows up the coarse shooting rollout near vertical
    // poses. Use the constraint value directly and relax the state onto it.
    const T wx_alg = -sth * sec * w.z;
    T tau_pitch = -a * u[0] + a * u[1] - a * u[2] + a * u[3] + T(tau_y);
    // Gyroscopic products through the slaved w_T,x channel are negligible in
    // the rolling regime (theta near 0) but finite-time unstable under the
    // saturated constraint at coarse shooting steps, so they are omitted here;
    // the remaining pitch/yaw balance matches ground_derivative to O(w^2).
    // lean_gain scales the state-feedback part of the lean torque: near the
    // flat pose it is a stable restoring spring the model must keep, near the
    // vertical pose an inverted pendulum whose open-loop sensitivity grows
    // exponentially over the horizon; the caller moves the remainder into
    // tau_y as a reference-pitch feedforward.
    T tau_g = T(lean_gain * p.m * p.g * p.delta) * sth;
    dx[16] = (wx_alg - w.x) * T(10.0);
    dx[17] = (tau_pitch - tau_g) / T(p.M_T.y());
    dx[18] = tau_yaw / T(p.M_T.z());
    return dx;
}

template <typename T>
Arr<T> rk4_step(const Arr<T>& x, const std::array<T, kNu>& u, int eta, const VehicleParams& p,
                double dt, int substeps, double tau_y, double lean_gain) {
    Arr<T> out = x;
    const double h = dt / substeps;
    for (int s = 0; s < substeps; ++s) {
        Arr<T> k1 = prediction_rhs(out, u, eta, p, tau_y, lean_gain);
        Arr<T> tmp;
        for (int i = 0; i < kNx; ++i) tmp[i] = out[i] + (0.5 * h) * k1[i];
        Arr<T> k2 = prediction_rhs(tmp, u, eta, p, tau_y, lean_gain);
        for (int i = 0; i < kNx; ++i) tmp[i] = out[i] + (0.5 * h) * k2[i];
        Arr<T> k3 = prediction_rhs(tmp, u, eta, p, tau_y, lean_gain);
        for (int i = 0; i < kNx; ++i) tmp[i] = out[i] + h * k3[i];
        Arr<T> k4 = prediction_rhs(tmp, u, eta, p, tau_y, lean_gain);
        for (int i = 0; i < kNx; ++i)
            out[i] = out[i] + (h / 6.0) * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        // Keep the attitude on the unit sphere (differentiably).
        Quat<T> q{out[6], out[7], out[8], out[9]};
        q = q.normalized();
        out[6] = q.w; out[7] = q.x; out[8] = q.y; out[9] = q.z;
    }
    return out;
}

// Representation reset at an eta switch: re-derive the coordinates that the
// incoming mode integrates from those the outgoing mode owned.
template <typename T>
Arr<T> reset_map(const Arr<T>& x, int eta_from, int eta_to) {
    using std::asin;
    using std::atan2;
    using std::cos;
    using std::sin;
    if (eta_from == eta_to) return x;
    Arr<T> out = x;
    if (eta_from == 1) {
        // Ground -> air: R_WA = Rz(psi_T) Ry(theta_T + pi/2).
        const T th = x[14], ps = x[15];
        Quat<T> qz{cos(T(0.5) * ps), T(0), T(0), sin(T(0.5) * ps)};
        T half = T(0.5) * (th + T(M_PI / 2.0));
        Quat<T> qy{cos(half), T(0), sin(half), T(0)};
        Quat<T> q = qz * qy;
        out[6] = q.w; out[7] = q.x; out[8] = q.y; out[9] = q.z;

        Mat3<T> R = q.to_rotation();
        Vec3<T> v_W{x[13] * cos(ps), x[13] * sin(ps), T(0)};
        Vec3<T> v_A = R.tmul(v_W);
        out[3] = v_A.x; out[4] = v_A.y; out[5] = v_A.z;
        // w_A = frame_A_from_T(w_T)
        out[10] = -x[18]; out[11] = x[17]; out[12] = x[16];
    } else {
        // Air -> ground: R_WT = R_WA Ry(-pi/2); col 0 of R_WT is col 2 of R_WA.
        Quat<T> q{x[6], x[7], x[8], x[9]};
        Mat3<T> R = q.to_rotation();
        // atan2 form of asin(-R(2,2)): at the vertical pose the asin argument
        // sits on +-1 where its dual derivative degenerates to 0/0.
        const T hx0 = R(0, 2), hy0 = R(1, 2);
        using std::sqrt;
        out[14] = atan2(-R(2, 2), sqrt(hx0 * hx0 + hy0 * hy0 + T(1e-12)));
        // Wheel heading from the forward axis, except near the vertical pose
        // where that projection vanishes (atan2(0, 0) and its derivatives
        // blow up); there the roll-free body-y axis carries the heading.
        const T hx = R(0, 2), hy = R(1, 2);
        if (value(hx) * value(hx) + value(hy) * value(hy) < 0.02)
            out[15] = atan2(-R(0, 1), R(1, 1));
        else
            out[15] = atan2(hy, hx);
        Vec3<T> v_W = R * Vec3<T>{x[3], x[4], x[5]};
        out[13] = cos(out[15]) * v_W.x + sin(out[15]) * v_W.y;
        // w_T = frame_T_from_A(w_A)
        out[16] = x[12]; out[17] = x[11]; out[18] = -x[10];
    }
    return out;
}

Arr<double> to_arr(const StateVector& x) {
    Arr<double> a;
    for (int i = 0; i < kNx; ++i) a[i] = x[i];
    return a;
}

StateVector from_arr(const Arr<double>& a) {
    StateVector x;
    for (int i = 0; i < kNx; ++i) x[i] = a[i];
    return x;
}

// Euler angles (ZYX) from a rotation matrix, with the phi = 0 branch at the
// theta = +-pi/2 degeneracy.
Eigen::Vector3d euler_from_rotation(const Eigen::Matrix3d& R) {
    double sth = std::clamp(-R(2, 0), -1.0, 1.0);
    double theta = std::asin(sth);
    double phi, psi;
    if (std::abs(std::cos(theta)) < 1e-9) {
        phi = 0.0;
        psi = std::atan2(-R(0, 1), R(1, 1));
    } else {
        phi = std::atan2(R(2, 1), R(2, 2));
        psi = std::atan2(R(1, 0), R(0, 0));
    }
    return {phi, theta, psi};
}

}  // namespace

void OcpConfig::validate() const {
    if (N < 2) throw std::invalid_argument("ocp: N must be >= 2");
    if (dt <= 0.0) throw std::invalid_argument("ocp: dt must be > 0");
    if (u_min >= u_max) throw std::invalid_argument("ocp: input bounds inverted");
    auto nonneg = [](const auto& v) { return (v.array() >= 0.0).all(); };
    if (!nonneg(Q_p) || !nonneg(Q_v) || !nonneg(Q_quat) || !nonneg(Q_w) || !nonneg(Q_u) ||
        !nonneg(Q_wT) || Q_vl < 0.0 || Q_theta < 0.0 || Q_psi < 0.0)
        throw std::invalid_argument("ocp: weights must be >= 0");
}

OcpConfig OcpConfig::from_config(const Config& cfg) {
    OcpConfig c;
    c.N = cfg.get_int("controller.N", c.N);
    c.dt = cfg.get_double("controller.dt", c.dt);
    c.Q_p = cfg.get_vec3("controller.Q_p", c.Q_p);
    c.Q_v = cfg.get_vec3("controller.Q_v", c.Q_v);
    double qq = cfg.get_double("controller.Q_quat", c.Q_quat[0]);
    c.Q_quat.setConstant(qq);
    c.Q_w = cfg.get_vec3("controller.Q_w", c.Q_w);
    double qu = cfg.get_double("controller.Q_u", c.Q_u[0]);
    c.Q_u.setConstant(qu);
    c.Q_vl = cfg.get_double("controller.Q_vl", c.Q_vl);
    c.Q_theta = cfg.get_double("controller.Q_theta", c.Q_theta);
    c.Q_psi = cfg.get_double("controller.Q_psi", c.Q_psi);
    c.Q_wT = cfg.get_vec3("controller.Q_wT", c.Q_wT);
    c.u_min = cfg.get_double("controller.u_min", c.u_min);
    c.u_max = cfg.get_double("controller.u_max", c.u_max);
    c.h_judge = cfg.get_double("controller.h_judge", c.h_judge);
    c.sqp_iters = cfg.get_int("controller.sqp_iters", c.sqp_iters);
    c.kkt_tol = cfg.get_double("controller.kkt_tol", c.kkt_tol);
    c.substeps = cfg.get_int("controller.substeps", c.substeps);
    c.validate();
    return c;
}

ModeSchedule eta_schedule(const std::vector<ReferencePoint>& reference, const OcpConfig& cfg) {
    if (static_cast<int>(reference.size()) < cfg.N + 1)
        throw std::invalid_argument("eta_schedule: reference shorter than the horizon");
    ModeSchedule s;
    s.eta.resize(cfg.N + 1);
    for (int i = 0; i <= cfg.N; ++i)
        s.eta[i] = reference[i].state.p_W.z() < cfg.h_judge ? 1 : 0;
    return s;
}

StateDerivative hybrid_dynamics(const HybridState& x, const RotorCommand& u, int eta,
                                const VehicleParams& params) {
    if (eta != 0 && eta != 1) throw std::invalid_argument("hybrid_dynamics: eta must be 0 or 1");
    Medium medium = medium_of(x.mode);
    return eta == 1 ? ground_derivative(x, u, params, medium)
                    : flight_derivative(x, u, params, medium);
}

StateVector pack_state(const HybridState& state) {
    HybridState s = state;
    if (is_ground(s.mode)) sync_aerial_from_terrestrial(s);
    else sync_terrestrial_from_aerial(s);

    // ZYX Euler to quaternion, scalar-first.
    const double hphi = 0.5 * s.Theta_A.x(), hth = 0.5 * s.Theta_A.y(), hps = 0.5 * s.Theta_A.z();
    Eigen::Vector4d qx(std::cos(hphi), std::sin(hphi), 0, 0);
    Eigen::Vector4d qy(std::cos(hth), 0, std::sin(hth), 0);
    Eigen::Vector4d qz(std::cos(hps), 0, 0, std::sin(hps));
    auto mul = [](const Eigen::Vector4d& a, const Eigen::Vector4d& b) {
        return Eigen::Vector4d(
            a[0] * b[0] - a[1] * b[1] - a[2] * b[2] - a[3] * b[3],
            a[0] * b[1] + a[1] * b[0] + a[2] * b[3] - a[3] * b[2],
            a[0] * b[2] - a[1] * b[3] + a[2] * b[0] + a[3] * b[1],
            a[0] * b[3] + a[1] * b[2] - a[2] * b[1] + a[3] * b[0]);
    };
    Eigen::Vector4d q = mul(mul(qz, qy), qx);

    StateVector x;
    x.segment<3>(0) = s.p_W;
    x.segment<3>(3) = s.v_A;
    x.segment<4>(6) = q;
    x.segment<3>(10) = s.w_A;
    x[13] = s.v_l;
    x[14] = s.theta_T;
    x[15] = s.psi_T;
    x.segment<3>(16) = s.w_T;
    return x;
}

HybridState unpack_state(const StateVector& x, MotionMode mode) {
    HybridState s;
    s.mode = mode;
    s.p_W = x.segment<3>(0);
    s.v_A = x.segment<3>(3);
    Quat<double> q{x[6], x[7], x[8], x[9]};
    q = q.normalized();
    Mat3<double> Rm = q.to_rotation();
    Eigen::Matrix3d R;
    for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 3; ++c) R(r, c) = Rm(r, c);
    s.Theta_A = euler_from_rotation(R);
    s.w_A = x.segment<3>(10);
    s.v_l = x[13];
    s.theta_T = x[14];
    s.psi_T = x[15];
    s.w_T = x.segment<3>(16);
    return s;
}

StateVector predict_step(const StateVector& x, const RotorCommand& u, int eta,
                         const VehicleParams& params, double dt, int substeps, double tau_y,
                         double lean_gain) {
    std::array<double, kNu> ua{u[0], u[1], u[2], u[3]};
    return from_arr(rk4_step(to_arr(x), ua, eta, params, dt, substeps, tau_y, lean_gain));
}

StateVector mode_reset(const StateVector& x, int eta_from, int eta_to) {
    return from_arr(reset_map(to_arr(x), eta_from, eta_to));
}

void linearize(const StateVector& x, const RotorCommand& u, int eta, const VehicleParams& params,
               double dt, int substeps, Eigen::Matrix<double, kNx, kNx>& A,
               Eigen::Matrix<double, kNx, kNu>& B, double tau_y, double lean_gain) {
    using D = Dual<kNv>;
    Arr<D> xd;
    for (int i = 0; i < kNx; ++i) xd[i] = D::seed(x[i], i);
    std::array<D, kNu> ud;
    for (int i = 0; i < kNu; ++i) ud[i] = D::seed(u[i], kNx + i);
    Arr<D> next = rk4_step(xd, ud, eta, params, dt, substeps, tau_y, lean_gain);
    for (int r = 0; r < kNx; ++r) {
        for (int c = 0; c < kNx; ++c) A(r, c) = next[r].d[c];
        for (int c = 0; c < kNu; ++c) B(r, c) = next[r].d[kNx + c];
    }
}

namespace {

// Jacobian of the reset map (no control dependence).
Eigen::Matrix<double, kNx, kNx> reset_jacobian(const StateVector& x, int eta_from, int eta_to) {
    using D = Dual<kNx>;
    Arr<D> xd;
    for (int i = 0; i < kNx; ++i) xd[i] = D::seed(x[i], i);
    Arr<D> out = reset_map(xd, eta_from, eta_to);
    Eigen::Matrix<double, kNx, kNx> J;
    for (int r = 0; r < kNx; ++r)
        for (int c = 0; c < kNx; ++c) J(r, c) = out[r].d[c];
    return J;
}

// Projected-Newton solver for min 0.5 d'Hd + g'd, lo <= d <= hi.
Eigen::VectorXd solve_box_qp(const Eigen::MatrixXd& H, const Eigen::VectorXd& g,
                             const Eigen::VectorXd& lo, const Eigen::VectorXd& hi) {
    const int n = static_cast<int>(g.size());
    Eigen::VectorXd d = Eigen::VectorXd::Zero(n).cwiseMax(lo).cwiseMin(hi);
    auto obj = [&](const Eigen::VectorXd& v) { return 0.5 * v.dot(H * v) + g.dot(v); };

    for (int iter = 0; iter < 12; ++iter) {
        Eigen::VectorXd grad = g + H * d;
        std::vector<int> free;
        free.reserve(n);
        for (int k = 0; k < n; ++k) {
            const bool at_lo = d[k] <= lo[k] + 1e-12 && grad[k] > 0.0;
            const bool at_hi = d[k] >= hi[k] - 1e-12 && grad[k] < 0.0;
            if (!at_lo && !at_hi) free.push_back(k);
        }
        // Projected-gradient stationarity.
        Eigen::VectorXd pg = d - (d - grad).cwiseMax(lo).cwiseMin(hi);
        if (pg.lpNorm<Eigen::Infinity>() < 1e-10) break;
        if (free.empty()) break;

        const int nf = static_cast<int>(free.size());
        Eigen::MatrixXd Hf(nf, nf);
        Eigen::VectorXd gf(nf);
        for (int r = 0; r < nf; ++r) {
            gf[r] = grad[free[r]];
            for (int c = 0; c < nf; ++c) Hf(r, c) = H(free[r], free[c]);
        }
        Hf.diagonal().array() += 1e-9;
        Eigen::VectorXd pf = Hf.ldlt().solve(-gf);
        Eigen::VectorXd p = Eigen::VectorXd::Zero(n);
        for (int r = 0; r < nf; ++r) p[free[r]] = pf[r];

        bool accepted = false;
        const double f0 = obj(d);
        for (double alpha = 1.0; alpha > 1e-4; alpha *= 0.5) {
            Eigen::VectorXd cand = (d + alpha * p).cwiseMax(lo).cwiseMin(hi);
            if (obj(cand) < f0 - 1e-14) {
                d = cand;
                accepted = true;
                break;
            }
        }
        if (!accepted) {
            for (double alpha = 1.0; alpha > 1e-6; alpha *= 0.5) {
                Eigen::VectorXd cand = (d - alpha * grad).cwiseMax(lo).cwiseMin(hi);
                if (obj(cand) < f0 - 1e-14) {
                    d = cand;
                    accepted = true;
                    break;
                }
            }
        }
        if (!accepted) break;
    }
    return d;
}

}  // namespace

HnmpcSolver::HnmpcSolver(const OcpConfig& cfg, const VehicleParams& params)
    : cfg_(cfg), params_(params) {
    cfg_.validate();
}

double HnmpcSolver::stage_cost(const StateVector& x, int i) const {
    StateVector r = x - xref_[i];
    if (x.segment<4>(6).dot(xref_[i].segment<4>(6)) < 0.0)
        r.segment<4>(6) = x.segment<4>(6) + xref_[i].segment<4>(6);
    r[14] = wrap_angle(r[14]);
    r[15] = wrap_angle(r[15]);
    return 0.5 * r.dot(wx_[i].cwiseProduct(r));
}

HnmpcSolver::Rollout HnmpcSolver::rollout(const StateVector& x0, const Eigen::VectorXd& U) const {
    const int N = cfg_.N;
    Rollout ro;
    ro.x.resize(N + 1);
    ro.x[0] = x0;
    ro.cost = 0.0;
    const auto& eta = sched_->eta;
    for (int i = 0; i < N; ++i) {
        ro.cost += stage_cost(ro.x[i], i);
        Eigen::Vector4d ru = U.segment<4>(4 * i) - uref_[i];
        ro.cost += 0.5 * ru.dot(cfg_.Q_u.cwiseProduct(ru));
        StateVector next = predict_step(ro.x[i], U.segment<4>(4 * i), eta[i], params_, cfg_.dt,
                                        cfg_.substeps, tau_stage_[i], lean_stage_[i]);
        if (eta[i + 1] != eta[i]) next = mode_reset(next, eta[i], eta[i + 1]);
        if (!next.allFinite()) {
            // Diverged shooting trajectory: hold the last finite state so the
            // linearization stays usable and make the cost reject the step.
            for (int j = i + 1; j <= N; ++j) ro.x[j] = ro.x[i];
            ro.cost = std::numeric_limits<double>::infinity();
            return ro;
        }
        ro.x[i + 1] = next;
    }
    ro.cost += stage_cost(ro.x[N], N);
    return ro;
}

Solution HnmpcSolver::solve(const HybridState& x0, const std::vector<ReferencePoint>& reference,
                            const ModeSchedule& schedule) {
    const auto t_start = std::chrono::steady_clock::now();
    const int N = cfg_.N;
    const int nu = 4 * N;
    if (static_cast<int>(reference.size()) < N + 1)
        throw std::invalid_argument("hnmpc: reference shorter than the horizon");
    if (static_cast<int>(schedule.eta.size()) < N + 1)
        throw std::invalid_argument("hnmpc: schedule shorter than the horizon");

    ref_ = &reference;
    sched_ = &schedule;
    xref_.resize(N + 1);
    uref_.resize(N);
    wx_.resize(N + 1);
    tau_stage_.resize(N);
    lean_stage_.resize(N);
    // Offset-free input target: shift u_ref by the differential that cancels
    // the known external pitch torque (pure pitch couple in either frame),
    // so full rejection carries no input-deviation penalty at steady state.
    const double arm = params_.lambda / std::sqrt(2.0);
    const Eigen::Vector4d trim =
        Eigen::Vector4d(1.0, -1.0, 1.0, -1.0) * (tau_pitch_ / (4.0 * arm));
    for (int i = 0; i < N; ++i) {
        uref_[i] = reference[i].u_ref + trim;
        // Around touchdown the reference segment is still airborne while the
        // stage already carries ground weights; its hover feedforward would
        // drag the landed vehicle back over the liftoff-thrust threshold.
        // Substitute the zero-net-thrust pitch-hold trim for those stages.
        if (schedule.eta[i] == 1 && reference[i].state.mode == MotionMode::FlightAir) {
            const double d =
                -params_.m * params_.g * params_.delta * std::sin(reference[i].state.theta_T) /
                (4.0 * arm);
            uref_[i] = Eigen::Vector4d(d, -d, d, -d) + trim;
        }
    }
    for (int i = 0; i <= N; ++i) {
        xref_[i] = pack_state(reference[i].state);
        // Aerial-segment references sync to the vertical thrust-up pose;
        // keep ground-weighted stages short of the rolling-model pitch
        // singularity so a not-yet-airborne plant is never pulled onto it.
        if (schedule.eta[i] == 1) {
            const double cap = 84.0 * M_PI / 180.0;
            xref_[i][14] = std::clamp(xref_[i][14], -cap, cap);
        }
        // Known pitch torque for the interval model: the estimated
        // disturbance plus, on ground stages, the part of the lean torque
        // carried as a reference-pitch feedforward (see prediction_rhs).
        if (i < N) {
            tau_stage_[i] = tau_pitch_;
            lean_stage_[i] = 1.0;
            if (schedule.eta[i] == 1) {
                const double c = std::cos(xref_[i][14]);
                lean_stage_[i] = c * c;
                tau_stage_[i] -= (1.0 - lean_stage_[i]) * params_.m * params_.g *
                                 params_.delta * std::sin(xref_[i][14]);
            }
        }
        const double eta = schedule.eta[i];
        Eigen::Matrix<double, kNx, 1> w;
        w.segment<3>(0) = cfg_.Q_p;
        w.segment<3>(3) = (1.0 - eta) * cfg_.Q_v;
        w.segment<4>(6) = (1.0 - eta) * cfg_.Q_quat;
        w.segment<3>(10) = (1.0 - eta) * cfg_.Q_w;
        w[13] = eta * cfg_.Q_vl;
        w[14] = eta * cfg_.Q_theta;
        w[15] = eta * cfg_.Q_psi;
        w.segment<3>(16) = eta * cfg_.Q_wT;
        wx_[i] = w;
    }

    // A warm start carried across an eta flip at the plant (landing/liftoff)
    // is a solution for the other model; two SQP iterations cannot bend it
    // back and the half-corrected inputs point the wrong way. Restart cold.
    if (schedule.eta[0] != eta0_prev_) warm_valid_ = false;
    eta0_prev_ = schedule.eta[0];

    Eigen::VectorXd U(nu);
    if (warm_valid_ && U_prev_.size() == nu) {
        U = U_prev_;
    } else {
        for (int i = 0; i < N; ++i) U.segment<4>(4 * i) = reference[i].u_ref;
    }
    U = U.cwiseMax(cfg_.u_min).cwiseMin(cfg_.u_max);

    const StateVector x0v = pack_state(x0);
    Rollout ro = rollout(x0v, U);
    if (!std::isfinite(ro.cost) && warm_valid_) {
        // Poisoned warm start (e.g. across a schedule change): restart cold.
        for (int i = 0; i < N; ++i) U.segment<4>(4 * i) = reference[i].u_ref;
        U = U.cwiseMax(cfg_.u_min).cwiseMin(cfg_.u_max);
        ro = rollout(x0v, U);
    }

    Solution sol;
    std::vector<Eigen::Matrix<double, kNx, kNx>> As(N);
    std::vector<Eigen::Matrix<double, kNx, kNu>> Bs(N);
    Eigen::MatrixXd X(kNx, nu);
    Eigen::MatrixXd H(nu, nu);
    Eigen::VectorXd g(nu);

    for (int iter = 0; iter < cfg_.sqp_iters; ++iter) {
        // Pass 1: step Jacobians (with reset composition) and the gradient.
        g.setZero();
        X.setZero();
        for (int i = 0; i <= N; ++i) {
            StateVector r = ro.x[i] - xref_[i];
            if (ro.x[i].segment<4>(6).dot(xref_[i].segment<4>(6)) < 0.0)
                r.segment<4>(6) = ro.x[i].segment<4>(6) + xref_[i].segment<4>(6);
            r[14] = wrap_angle(r[14]);
            r[15] = wrap_angle(r[15]);
            const Eigen::VectorXd wr = wx_[i].cwiseProduct(r);
            if (i > 0)
                g.head(4 * i).noalias() += X.leftCols(4 * i).transpose() * wr;
            if (i < N) {
                Eigen::Vector4d ru = U.segment<4>(4 * i) - uref_[i];
                g.segment<4>(4 * i) += cfg_.Q_u.cwiseProduct(ru);
                linearize(ro.x[i], U.segment<4>(4 * i), sched_->eta[i], params_, cfg_.dt,
                          cfg_.substeps, As[i], Bs[i], tau_stage_[i], lean_stage_[i]);
                if (sched_->eta[i + 1] != sched_->eta[i]) {
                    StateVector pre = predict_step(ro.x[i], U.segment<4>(4 * i), sched_->eta[i],
                                                   params_, cfg_.dt, cfg_.substeps,
                                                   tau_stage_[i], lean_stage_[i]);
                    Eigen::Matrix<double, kNx, kNx> Jr =
                        reset_jacobian(pre, sched_->eta[i], sched_->eta[i + 1]);
                    As[i] = Jr * As[i];
                    Bs[i] = Jr * Bs[i];
                }
                if (i > 0) X.leftCols(4 * i) = As[i] * X.leftCols(4 * i);
                X.block(0, 4 * i, kNx, 4) = Bs[i];
            }
        }

        sol.kkt = (U - (U - g).cwiseMax(cfg_.u_min).cwiseMin(cfg_.u_max))
                      .lpNorm<Eigen::Infinity>();
        if (sol.kkt <= cfg_.kkt_tol) {
            sol.converged = true;
            break;
        }

        // Pass 2: Gauss-Newton Hessian. Only rows with nonzero stage weight
        // contribute, so accumulate sqrt(w)-scaled active rows symmetrically.
        H.setZero();
        X.setZero();
        for (int i = 0; i <= N; ++i) {
            if (i > 0) {
                const int nc = 4 * i;
                int na = 0;
                Eigen::Matrix<double, kNx, Eigen::Dynamic> Xw(kNx, nc);
                for (int a = 0; a < kNx; ++a)
                    if (wx_[i][a] > 0.0)
                        Xw.row(na++) = std::sqrt(wx_[i][a]) * X.row(a).head(nc);
                H.topLeftCorner(nc, nc)
                    .selfadjointView<Eigen::Lower>()
                    .rankUpdate(Xw.topRows(na).transpose());
            }
            if (i < N) {
                for (int k = 0; k < 4; ++k) H(4 * i + k, 4 * i + k) += cfg_.Q_u[k];
                if (i > 0) X.leftCols(4 * i) = As[i] * X.leftCols(4 * i);
                X.block(0, 4 * i, kNx, 4) = Bs[i];
            }
        }
        H = H.selfadjointView<Eigen::Lower>();
        H.diagonal().array() += 1e-8;

        Eigen::VectorXd lo = Eigen::VectorXd::Constant(nu, cfg_.u_min) - U;
        Eigen::VectorXd hi = Eigen::VectorXd::Constant(nu, cfg_.u_max) - U;
        Eigen::VectorXd dU = solve_box_qp(H, g, lo, hi);

        const double gd = g.dot(dU);
        bool accepted = false;
        for (double alpha = 1.0; alpha > 1.0 / 128.0; alpha *= 0.5) {
            Eigen::VectorXd Ut = U + alpha * dU;
            Rollout rt = rollout(x0v, Ut);
            if (rt.cost <= ro.cost + 1e-4 * alpha * gd + 1e-12) {
                U = Ut;
                ro = rt;
                accepted = true;
                break;
            }
        }
        ++sol.iterations;
        if (!accepted) break;
    }

    sol.u.resize(N);
    for (int i = 0; i < N; ++i) sol.u[i] = U.segment<4>(4 * i);
    sol.x = ro.x;
    sol.cost = ro.cost;
    U_prev_ = U;
    warm_valid_ = true;
    sol.solve_time_s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
    return sol;
}

}  // namespace triphibot
