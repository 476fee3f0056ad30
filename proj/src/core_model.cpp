#include "triphibot/core_model.hpp"

#include <cmath>

namespace triphibot {

std::string to_string(MotionMode mode) {
    switch (mode) {
        case MotionMode::FlightAir: return "flight_air";
        case MotionMode::FlightWater: return "flight_water";
        case MotionMode::GroundLand: return "ground_land";
        case MotionMode::GroundSeabed: return "ground_seabed";
        case MotionMode::WaterSurface: return "water_surface";
    }
    return "?";
}

void VehicleParams::validate() const {
    if (m <= 0.0) throw std::invalid_argument("params: m must be > 0");
    if ((M_A.array() <= 0.0).any() || (M_T.array() <= 0.0).any())
        throw std::invalid_argument("params: inertia entries must be > 0");
    if (!(lambda > delta && delta > 0.0))
        throw std::invalid_argument("params: need lambda > delta > 0");
    if (rho_w * V_disp * g >= m * g)
        throw std::invalid_argument("params: buoyancy must be negative (rho_w*V*g < m*g)");
    if (c_t_air_fwd <= 0.0 || c_t_air_rev <= 0.0 || c_t_water_fwd <= 0.0 || c_t_water_rev <= 0.0)
        throw std::invalid_argument("params: thrust coefficients must be > 0");
    if (c_t_air_fwd < c_t_air_rev || c_t_water_fwd < c_t_water_rev)
        throw std::invalid_argument("params: forward coefficient must be >= reverse");
    if (u_min_air >= u_max_air || u_min_water >= u_max_water)
        throw std::invalid_argument("params: thrust bounds inverted");
}

VehicleParams VehicleParams::from_config(const Config& cfg) {
    VehicleParams p;
    auto d = [&](const char* key, double fb) { return cfg.get_double(std::string("vehicle.") + key, fb); };
    auto v = [&](const char* key, const Eigen::Vector3d& fb) {
        return cfg.get_vec3(std::string("vehicle.") + key, fb);
    };
    p.m = d("m", p.m);
    p.m_a = d("m_a", p.m_a);
    p.M_A = v("M_A", p.M_A);
    p.M_T = v("M_T", p.M_T);
    p.M_a = v("M_a", p.M_a);
    p.lambda = d("lambda", p.lambda);
    p.delta = d("delta", p.delta);
    p.c_m = d("c_m", p.c_m);
    p.c_t_air_fwd = d("c_t_air_fwd", p.c_t_air_fwd);
    p.c_t_air_rev = d("c_t_air_rev", p.c_t_air_rev);
    p.c_t_water_fwd = d("c_t_water_fwd", p.c_t_water_fwd);
    p.c_t_water_rev = d("c_t_water_rev", p.c_t_water_rev);
    p.C_f = v("C_f", p.C_f);
    p.C_t = v("C_t", p.C_t);
    p.rho_w = d("rho_w", p.rho_w);
    p.V_disp = d("V_disp", p.V_disp);
    p.r_buoy = v("r_buoy", p.r_buoy);
    p.g = d("g", p.g);
    p.u_min_air = d("u_min_air", p.u_min_air);
    p.u_max_air = d("u_max_air", p.u_max_air);
    p.u_min_water = d("u_min_water", p.u_min_water);
    p.u_max_water = d("u_max_water", p.u_max_water);
    p.contact_height = d("contact_height", p.contact_height);
    p.rolling_resistance = d("rolling_resistance", p.rolling_resistance);
    p.validate();
    return p;
}

Eigen::Matrix3d rotation_A_to_W(const Eigen::Vector3d& Theta_A) {
    double cphi = std::cos(Theta_A.x()), sphi = std::sin(Theta_A.x());
    double cth = std::cos(Theta_A.y()), sth = std::sin(Theta_A.y());
    double cpsi = std::cos(Theta_A.z()), spsi = std::sin(Theta_A.z());
    Eigen::Matrix3d r;
    r << cth * cpsi, sphi * sth * cpsi - cphi * spsi, cphi * sth * cpsi + sphi * spsi,
         cth * spsi, sphi * sth * spsi + cphi * cpsi, cphi * sth * spsi - sphi * cpsi,
         -sth,       sphi * cth,                      cphi * cth;
    return r;
}

Eigen::Matrix3d euler_rate_matrix(const Eigen::Vector3d& Theta_A) {
    double cth = std::cos(Theta_A.y());
    if (std::abs(cth) < 1e-6)
        throw std::domain_error("euler_rate_matrix: gimbal singularity at |theta| = pi/2");
    double cphi = std::cos(Theta_A.x()), sphi = std::sin(Theta_A.x());
    double tth = std::tan(Theta_A.y());
    Eigen::Matrix3d w;
    w << 1.0, sphi * tth, cphi * tth,
         0.0, cphi,       -sphi,
         0.0, sphi / cth, cphi / cth;
    return w;
}

Eigen::Matrix3d rotation_A_to_T() {
    // Ry(+pi/2): z_A -> x_T, y shared, x_A -> -z_T.
    Eigen::Matrix3d m;
    m << 0, 0, 1,
         0, 1, 0,
         -1, 0, 0;
    return m;
}

Eigen::Vector3d frame_T_from_A(const Eigen::Vector3d& v_in_A) {
    return {v_in_A.z(), v_in_A.y(), -v_in_A.x()};
}

Eigen::Vector3d frame_A_from_T(const Eigen::Vector3d& v_in_T) {
    return {-v_in_T.z(), v_in_T.y(), v_in_T.x()};
}

Eigen::Matrix3d rotation_T_to_W(double theta_T, double psi_T) {
    double ct = std::cos(theta_T), st = std::sin(theta_T);
    double cp = std::cos(psi_T), sp = std::sin(psi_T);
    Eigen::Matrix3d r;  // Rz(psi) * Ry(theta), roll fixed at 0
    r << cp * ct, -sp, cp * st,
         sp * ct,  cp, sp * st,
         -st,     0.0, ct;
    return r;
}

void sync_aerial_from_terrestrial(HybridState& state) {
    Eigen::Matrix3d R_WA = rotation_T_to_W(state.theta_T, state.psi_T) * rotation_A_to_T();
    double sth = -R_WA(2, 0);
    sth = std::clamp(sth, -1.0, 1.0);
    double theta = std::asin(sth);
    double phi, psi;
    if (std::abs(std::cos(theta)) < 1e-9) {
        phi = 0.0;  // degenerate at the 90 deg pose; pick the phi = 0 branch
        psi = std::atan2(-R_WA(0, 1), R_WA(1, 1));
    } else {
        phi = std::atan2(R_WA(2, 1), R_WA(2, 2));
        psi = std::atan2(R_WA(1, 0), R_WA(0, 0));
    }
    state.Theta_A = {phi, theta, psi};
    Eigen::Vector3d v_W{state.v_l * std::cos(state.psi_T), state.v_l * std::sin(state.psi_T), 0.0};
    state.v_A = R_WA.transpose() * v_W;
    state.w_A = frame_A_from_T(state.w_T);
}

void sync_terrestrial_from_aerial(HybridState& state) {
    Eigen::Matrix3d R_WA = rotation_A_to_W(state.Theta_A);
    Eigen::Matrix3d R_WT = R_WA * rotation_A_to_T().transpose();
    // Near the vertical pose the forward axis has no horizontal projection;
    // take the heading from the roll-free body-y axis there instead.
    if (R_WT(0, 0) * R_WT(0, 0) + R_WT(1, 0) * R_WT(1, 0) < 0.02)
        state.psi_T = std::atan2(-R_WT(0, 1), R_WT(1, 1));
    else
        state.psi_T = std::atan2(R_WT(1, 0), R_WT(0, 0));
    state.theta_T = std::asin(std::clamp(-R_WT(2, 0), -1.0, 1.0));
    Eigen::Vector3d v_W = R_WA * state.v_A;
    state.v_l = std::cos(state.psi_T) * v_W.x() + std::sin(state.psi_T) * v_W.y();
    state.w_T = frame_T_from_A(state.w_A);
}

}  // namespace triphibot
