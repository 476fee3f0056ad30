#include "triphibot/flatness.hpp"

#include <cmath>

#include "triphibot/algebra.hpp"
#include "triphibot/jet.hpp"

namespace triphibot {

namespace {

constexpr double kSpeedEps = 1e-3;   // zero-speed heading threshold, m/s
constexpr double kThrustEps = 1e-6;  // thrust-direction singularity threshold

using JVec = Vec3<Jet2>;

Eigen::Vector3d values(const JVec& v) { return {v.x.v, v.y.v, v.z.v}; }

}  // namespace

ReferencePoint aerial_flatness(const FlatTrajectoryPoint& pt, const VehicleParams& params) {
    // Mass-normalized thrust vector as a time jet: a(t) + g z_W.
    JVec t{Jet2(pt.p[2].x(), pt.p[3].x(), pt.p[4].x()),
           Jet2(pt.p[2].y(), pt.p[3].y(), pt.p[4].y()),
           Jet2(pt.p[2].z() + params.g, pt.p[3].z(), pt.p[4].z())};
    Jet2 tn = t.norm();
    if (tn.v < kThrustEps)
        throw std::domain_error("aerial_flatness: thrust-producing acceleration vanishes");

    Jet2 psi(pt.psi[0], pt.psi[1], pt.psi[2]);
    JVec zB = t / tn;
    JVec xC{cos(psi), sin(psi), Jet2(0.0)};
    JVec yB_un = zB.cross(xC);
    Jet2 yn = yB_un.norm();
    if (yn.v < kThrustEps)
        throw std::domain_error("aerial_flatness: thrust axis parallel to yaw reference");
    JVec yB = yB_un / yn;
    JVec xB = yB.cross(zB);

    // R = [xB yB zB]; body rates from the skew part of R^T Rdot, and their
    // derivative from Rdot^T Rdot + R^T Rddot, all exact via the jets.
    std::array<JVec, 3> cols{xB, yB, zB};
    auto col_val = [&](int j) { return Eigen::Vector3d(cols[j].x.v, cols[j].y.v, cols[j].z.v); };
    auto col_d1 = [&](int j) { return Eigen::Vector3d(cols[j].x.d1, cols[j].y.d1, cols[j].z.d1); };
    auto col_d2 = [&](int j) { return Eigen::Vector3d(cols[j].x.d2, cols[j].y.d2, cols[j].z.d2); };

    // R^T Rdot = hat(w) with hat(w)(2,1) = w_x, (0,2) = w_y, (1,0) = w_z;
    // its time derivative picks up a symmetric Rdot^T Rdot part, so hat(dw)
    // is the antisymmetric half.
    auto S = [&](int i, int j) { return col_val(i).dot(col_d1(j)); };
    auto Sdot = [&](int i, int j) { return col_d1(i).dot(col_d1(j)) + col_val(i).dot(col_d2(j)); };
    Eigen::Vector3d w_A(S(2, 1), S(0, 2), S(1, 0));
    Eigen::Vector3d dw_A(0.5 * (Sdot(2, 1) - Sdot(1, 2)), 0.5 * (Sdot(0, 2) - Sdot(2, 0)),
                         0.5 * (Sdot(1, 0) - Sdot(0, 1)));

    Eigen::Matrix3d R;
    R.col(0) = col_val(0);
    R.col(1) = col_val(1);
    R.col(2) = col_val(2);

    ReferencePoint ref;
    ref.state.mode = MotionMode::FlightAir;
    ref.state.p_W = pt.p[0];
    ref.state.v_A = R.transpose() * pt.p[1];
    double theta = std::asin(std::clamp(-R(2, 0), -1.0, 1.0));
    ref.state.Theta_A = {std::atan2(R(2, 1), R(2, 2)), theta, std::atan2(R(1, 0), R(0, 0))};
    ref.state.w_A = w_A;
    sync_terrestrial_from_aerial(ref.state);

    Wrench wr;
    wr.frame = WrenchFrame::A;
    wr.T = params.m * tn.v;
    wr.tau = params.M_A.cwiseProduct(dw_A) + w_A.cross(params.M_A.cwiseProduct(w_A));
    ref.wrench_ref = wr;
    ref.u_ref = invert_allocation(wr, params, Medium::Air);

    ref.deriv.dp_W = pt.p[1];
    ref.deriv.dv_A = -w_A.cross(ref.state.v_A) + R.transpose() * pt.p[2];
    ref.deriv.dTheta_A = euler_rate_matrix(ref.state.Theta_A) * w_A;
    ref.deriv.dw_A = dw_A;
    return ref;
}

ReferencePoint terrestrial_flatness(const FlatTrajectoryPoint& pt, const VehicleParams& params,
                                    Medium medium, double psi_fallback) {
    double xd = pt.p[1].x(), yd = pt.p[1].y();
    double xdd = pt.p[2].x(), ydd = pt.p[2].y();
    double xddd = pt.p[3].x(), yddd = pt.p[3].y();
    double speed = std::hypot(xd, yd);
    double kappa = pt.kappa;

    double psi, dpsi, ddpsi, v_l, dv_l;
    if (speed < kSpeedEps) {
        psi = psi_fallback;
        dpsi = ddpsi = 0.0;
        v_l = kappa * speed;
        // At rest the tangential acceleration still defines dv_l along the
        // held heading.
        dv_l = std::cos(psi) * xdd + std::sin(psi) * ydd;
    } else {
        psi = std::atan2(kappa * yd, kappa * xd);
        double sp2 = speed * speed;
        double num = xd * ydd - yd * xdd;
        dpsi = num / sp2;
        double numdot = xd * yddd - yd * xddd;
        double sp2dot = 2.0 * (xd * xdd + yd * ydd);
        ddpsi = (numdot * sp2 - num * sp2dot) / (sp2 * sp2);
        v_l = kappa * speed;
        dv_l = kappa * (xd * xdd + yd * ydd) / speed;
    }

    double theta = pt.theta_T[0], dtheta = pt.theta_T[1], ddtheta = pt.theta_T[2];
    double st = std::sin(theta), ct = std::cos(theta);
    if (std::abs(ct) < 1e-6)
        throw std::domain_error("terrestrial_flatness: |theta_T| at pi/2 singularity");

    Eigen::Vector3d w_T(-st * dpsi, dtheta, dpsi * ct);
    Eigen::Vector3d dw_T(-ct * dtheta * dpsi - st * ddpsi, ddtheta, ddpsi * ct - dpsi * dtheta * st);

    double zeta = medium_flag(medium);
    double mass = params.m + zeta * params.m_a;
    double T = (mass * dv_l + zeta * ground_drag_magnitude(v_l, params, medium) +
                params.rolling_resistance * v_l) /
               ct;

    Wrench wr;
    wr.frame = WrenchFrame::T;
    wr.T = T;
    wr.tau = ground_torque_for(w_T, dw_T, theta, psi, params, medium);

    ReferencePoint ref;
    ref.state.mode = medium == Medium::Water ? MotionMode::GroundSeabed : MotionMode::GroundLand;
    ref.state.p_W = {pt.p[0].x(), pt.p[0].y(), params.contact_height};
    ref.state.v_l = v_l;
    ref.state.theta_T = theta;
    ref.state.psi_T = psi;
    ref.state.w_T = w_T;
    sync_aerial_from_terrestrial(ref.state);
    ref.wrench_ref = wr;
    ref.u_ref = invert_allocation(wr, params, medium);

    ref.deriv.dp_W = {v_l * std::cos(psi), v_l * std::sin(psi), 0.0};
    ref.deriv.dv_l = dv_l;
    ref.deriv.dtheta_T = dtheta;
    ref.deriv.dpsi_T = dpsi;
    ref.deriv.dw_T = dw_T;
    return ref;
}

double flatness_roundtrip_check(const FlatTrajectoryPoint& pt, const VehicleParams& params,
                                MotionMode mode, double psi_fallback) {
    Medium medium = medium_of(mode);
    if (is_ground(mode)) {
        ReferencePoint ref = terrestrial_flatness(pt, params, medium, psi_fallback);
        StateDerivative f = ground_derivative(ref.state, ref.u_ref, params, medium);
        double r2 = (f.dp_W - ref.deriv.dp_W).squaredNorm() +
                    (f.dw_T - ref.deriv.dw_T).squaredNorm() +
                    std::pow(f.dv_l - ref.deriv.dv_l, 2) +
                    std::pow(f.dtheta_T - ref.deriv.dtheta_T, 2) +
                    std::pow(f.dpsi_T - ref.deriv.dpsi_T, 2);
        return std::sqrt(r2);
    }
    ReferencePoint ref = aerial_flatness(pt, params);
    StateDerivative f = flight_derivative(ref.state, ref.u_ref, params, medium);
    double r2 = (f.dp_W - ref.deriv.dp_W).squaredNorm() + (f.dv_A - ref.deriv.dv_A).squaredNorm() +
                (f.dTheta_A - ref.deriv.dTheta_A).squaredNorm() +
                (f.dw_A - ref.deriv.dw_A).squaredNorm();
    return std::sqrt(r2);
}

}  // namespace triphibot
