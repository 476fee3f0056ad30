#include "triphibot/dynamics.hpp"

#include <cmath>

namespace triphibot {

namespace {

// Allocation matrix for a given frame and per-rotor thrust signs. Rotor
// spin directions fix the drag-torque signs (-,-,+,+ pattern).
Eigen::Matrix4d allocation_matrix(const VehicleParams& p, Medium medium, WrenchFrame frame,
                                  const Eigen::Vector4d& signs) {
    double a = p.lambda / std::sqrt(2.0);
    Eigen::Vector4d c;
    for (int i = 0; i < 4; ++i) c[i] = p.c_m / p.thrust_coeff(medium, signs[i]);
    Eigen::Matrix4d B;
    if (frame == WrenchFrame::A) {
        B << 1, 1, 1, 1,
             -a, a, a, -a,
             p.delta - a, a + p.delta, p.delta - a, a + p.delta,
             -c[0], -c[1], c[2], c[3];
    } else {
        B << 1, 1, 1, 1,
             -a, a, a, -a,
             -a, a, -a, a,
             -c[0], -c[1], c[2], c[3];
    }
    return B;
}

Wrench allocate(const RotorCommand& u, const VehicleParams& p, Medium medium, WrenchFrame frame) {
    Eigen::Vector4d signs;
    for (int i = 0; i < 4; ++i) signs[i] = u[i] >= 0.0 ? 1.0 : -1.0;
    Eigen::Vector4d w = allocation_matrix(p, medium, frame, signs) * u;
    Wrench out;
    out.T = w[0];
    out.tau = w.tail<3>();
    out.frame = frame;
    return out;
}

}  // namespace

HydroForces hydro_forces(const HybridState& state, const VehicleParams& params, Medium medium) {
    HydroForces h;
    if (medium == Medium::Air) return h;
    h.f_drag = params.C_f.cwiseProduct(state.v_A) * state.v_A.norm();
    h.tau_drag = params.C_t.cwiseProduct(state.w_A) * state.w_A.norm();
    h.F_B = Eigen::Vector3d(0, 0, params.rho_w * params.V_disp * params.g);
    Eigen::Matrix3d R = rotation_A_to_W(state.Theta_A);
    h.tau_buo = params.r_buoy.cross(R.transpose() * h.F_B);
    return h;
}

Wrench allocate_aerial(const RotorCommand& u, const VehicleParams& params, Medium medium) {
    return allocate(u, params, medium, WrenchFrame::A);
}

Wrench allocate_terrestrial(const RotorCommand& u, const VehicleParams& params, Medium medium) {
    return allocate(u, params, medium, WrenchFrame::T);
}

RotorCommand invert_allocation(const Wrench& wrench, const VehicleParams& params, Medium medium,
                               bool* within_bounds) {
    Eigen::Vector4d w;
    w << wrench.T, wrench.tau;
    Eigen::Vector4d signs = Eigen::Vector4d::Ones();
    if (wrench.T < 0.0) signs = -signs;
    RotorCommand u = RotorCommand::Zero();
    for (int iter = 0; iter < 8; ++iter) {
        u = allocation_matrix(params, medium, wrench.frame, signs).partialPivLu().solve(w);
        Eigen::Vector4d next;
        for (int i = 0; i < 4; ++i) next[i] = u[i] >= 0.0 ? 1.0 : -1.0;
        if (next == signs) {
            if (within_bounds) {
                *within_bounds = (u.array() >= params.u_min(medium)).all() &&
                                 (u.array() <= params.u_max(medium)).all();
            }
            return u;
        }
        signs = next;
    }
    throw std::runtime_error("invert_allocation: coefficient sign selection did not converge");
}

StateDerivative flight_derivative(const HybridState& state, const RotorCommand& u,
                                  const VehicleParams& params, Medium medium) {
    double zeta = medium_flag(medium);
    double mass = params.m + zeta * params.m_a;
    Eigen::Vector3d inertia = params.M_A + zeta * params.M_a;

    Eigen::Matrix3d R = rotation_A_to_W(state.Theta_A);
    Eigen::Matrix3d W = euler_rate_matrix(state.Theta_A);
    Wrench wr = allocate_aerial(u, params, medium);
    HydroForces hydro = hydro_forces(state, params, medium);

    StateDerivative d;
    d.dp_W = R * state.v_A;
    d.dTheta_A = W * state.w_A;

    // Body-frame translational dynamics. Gravity acts on the physical mass
    // only; added mass enters the inertia side and the buoyancy/drag terms.
    Eigen::Vector3d gravity_W(0, 0, -params.m * params.g);
    Eigen::Vector3d f = Eigen::Vector3d(0, 0, wr.T) + R.transpose() * gravity_W -
                        zeta * hydro.f_drag + zeta * R.transpose() * hydro.F_B;
    d.dv_A = (-state.w_A.cross(state.v_A) * mass + f) / mass;

    Eigen::Vector3d Mw = inertia.cwiseProduct(state.w_A);
    d.dw_A = (wr.tau - state.w_A.cross(Mw) - zeta * hydro.tau_drag).cwiseQuotient(inertia);
    return d;
}

double ground_drag_magnitude(double v_l, const VehicleParams& params, Medium medium) {
    if (medium == Medium::Air) return 0.0;
    // v_A reconstructed from (v_l, theta, psi) is v_l along z_A.
    return params.C_f.z() * v_l * v_l;
}

Eigen::Vector3d ground_torque_for(const Eigen::Vector3d& w_T, const Eigen::Vector3d& dw_T,
                                  double theta_T, double psi_T, const VehicleParams& params,
                                  Medium medium) {
    double zeta = medium_flag(medium);
    Eigen::Vector3d inertia = params.M_T + zeta * params.M_a;
    Eigen::Vector3d Mw = inertia.cwiseProduct(w_T);
    Eigen::Vector3d tau_g(0, params.m * params.g * params.delta * std::sin(theta_T), 0);
    Eigen::Vector3d tau_drag = zeta * params.C_t.cwiseProduct(w_T) * w_T.norm();
    Eigen::Vector3d tau_buo = Eigen::Vector3d::Zero();
    if (medium == Medium::Water) {
        Eigen::Vector3d F_B(0, 0, params.rho_w * params.V_disp * params.g);
        Eigen::Matrix3d R_WT = rotation_T_to_W(theta_T, psi_T);
        tau_buo = frame_T_from_A(params.r_buoy).cross(R_WT.transpose() * F_B);
    }
    Eigen::Vector3d tau = inertia.cwiseProduct(dw_T) + w_T.cross(Mw) + tau_g + tau_buo + tau_drag;
    tau.x() = 0.0;  // rotation about x_T is carried by the wheel constraint
    return tau;
}

StateDerivative ground_derivative(const HybridState& state, const RotorCommand& u,
                                  const VehicleParams& params, Medium medium) {
    if (std::abs(std::cos(state.theta_T)) < 1e-6)
        throw std::domain_error("ground_derivative: |theta_T| at pi/2 singularity");
    double zeta = medium_flag(medium);
    double mass = params.m + zeta * params.m_a;
    Eigen::Vector3d inertia = params.M_T + zeta * params.M_a;

    Wrench wr = allocate_terrestrial(u, params, medium);

    StateDerivative d;
    double cpsi = std::cos(state.psi_T), spsi = std::sin(state.psi_T);
    d.dp_W = Eigen::Vector3d(state.v_l * cpsi, state.v_l * spsi, 0.0);
    d.dv_l = (wr.T * std::cos(state.theta_T) - zeta * ground_drag_magnitude(state.v_l, params, medium) -
              params.rolling_resistance * state.v_l) /
             mass;
    // The no-side-slip constraint is singular at the vertical pose; saturate
    // sec(theta) within ~2.5 deg of it so a transient graze cannot inject an
    // unbounded steering rate.
    double cth = std::cos(state.theta_T);
    const double c_min = std::cos(87.5 * M_PI / 180.0);
    double sec = 1.0 / std::copysign(std::max(std::abs(cth), c_min), cth == 0.0 ? 1.0 : cth);
    d.dtheta_T = state.w_T.y();
    d.dpsi_T = state.w_T.z() * sec;

    Eigen::Vector3d Mw = inertia.cwiseProduct(state.w_T);
    Eigen::Vector3d tau_g(0, params.m * params.g * params.delta * std::sin(state.theta_T), 0);
    Eigen::Vector3d tau_drag = zeta * params.C_t.cwiseProduct(state.w_T) * state.w_T.norm();
    Eigen::Vector3d tau_buo = Eigen::Vector3d::Zero();
    if (medium == Medium::Water) {
        Eigen::Vector3d F_B(0, 0, params.rho_w * params.V_disp * params.g);
        Eigen::Matrix3d R_WT = rotation_T_to_W(state.theta_T, state.psi_T);
        tau_buo = frame_T_from_A(params.r_buoy).cross(R_WT.transpose() * F_B);
    }
    Eigen::Vector3d rhs = wr.tau - state.w_T.cross(Mw) - tau_g - tau_buo - tau_drag;
    d.dw_T = rhs.cwiseQuotient(inertia);

    // Bilateral wheel constraint: phi_T stays 0, so w_T,x follows
    // -sin(theta) * dpsi; its rate comes from differentiating that relation.
    double ddpsi = d.dw_T.z() * sec +
                   state.w_T.z() * sec * (std::sin(state.theta_T) * sec) * d.dtheta_T;
    d.dw_T.x() = -std::cos(state.theta_T) * d.dtheta_T * d.dpsi_T - std::sin(state.theta_T) * ddpsi;
    return d;
}

}  // namespace triphibot
