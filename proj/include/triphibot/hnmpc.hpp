#ifndef TRIPHIBOT_HNMPC_HPP
#define TRIPHIBOT_HNMPC_HPP

// Hybrid nonlinear MPC over the eta-switched aerial/terrestrial dynamics:
// single-shooting Gauss-Newton SQP with exact forward-mode Jacobians, dense
// condensing and a projected-Newton box QP. The internal prediction state is
// 19-dimensional with a quaternion attitude; eta is fixed per step from the
// reference altitude, never optimized.

#include <vector>

#include <Eigen/Dense>

#include "triphibot/core_model.hpp"
#include "triphibot/dynamics.hpp"
#include "triphibot/flatness.hpp"

namespace triphibot {

// Prediction-state layout: p_W(3), v_A(3), q_WA(4, scalar first), w_A(3),
// v_l, theta_T, psi_T, w_T(3).
inline constexpr int kNx = 19;
inline constexpr int kNu = 4;

using StateVector = Eigen::Matrix<double, kNx, 1>;

struct OcpConfig {
    int N = 40;
    double dt = 0.05;

    Eigen::Vector3d Q_p{5000, 5000, 3000};
    Eigen::Vector3d Q_v{500, 500, 500};
    Eigen::Vector4d Q_quat{500, 500, 500, 500};
    Eigen::Vector3d Q_w{10, 10, 10};
    Eigen::Vector4d Q_u{100, 100, 100, 100};
    double Q_vl = 500, Q_theta = 500, Q_psi = 500;
    Eigen::Vector3d Q_wT{10, 10, 10};

    double u_min = -2.0, u_max = 4.0;  // air box, N per rotor
    double h_judge = 0.25;             // takeoff-judgement altitude, m
    int sqp_iters = 2;
    double kkt_tol = 1e-4;
    int substeps = 1;                  // RK4 sub-steps per dt

    void validate() const;
    static OcpConfig from_config(const Config& cfg);
};

struct ModeSchedule {
    std::vector<int> eta;  // size N+1; eta[i] = 1 terrestrial, 0 aerial
};

// eta_i = 1 iff the reference altitude at step i is below h_judge.
ModeSchedule eta_schedule(const std::vector<ReferencePoint>& reference, const OcpConfig& cfg);

// Convex-combination endpoints of the hybrid model: delegates to
// flight_derivative (eta = 0) or ground_derivative (eta = 1).
StateDerivative hybrid_dynamics(const HybridState& x, const RotorCommand& u, int eta,
                                const VehicleParams& params);

// HybridState <-> prediction vector; both redundant coordinate sets are
// filled (synced from the mode-active one).
StateVector pack_state(const HybridState& state);
HybridState unpack_state(const StateVector& x, MotionMode mode);

// One RK4 step of the prediction model (air medium). tau_y is a known
// external pitch torque held constant over the step. lean_gain scales the
// state-feedback part of the ground lean torque; stages near the vertical
// pose run it near 0 (the remainder moves into tau_y as a reference-pitch
// feedforward) so shooting sensitivities stay bounded.
StateVector predict_step(const StateVector& x, const RotorCommand& u, int eta,
                         const VehicleParams& params, double dt, int substeps = 1,
                         double tau_y = 0.0, double lean_gain = 1.0);

// Representation reset applied when eta changes between consecutive steps.
StateVector mode_reset(const StateVector& x, int eta_from, int eta_to);

// Exact discrete Jacobians of predict_step.
void linearize(const StateVector& x, const RotorCommand& u, int eta, const VehicleParams& params,
               double dt, int substeps, Eigen::Matrix<double, kNx, kNx>& A,
               Eigen::Matrix<double, kNx, kNu>& B, double tau_y = 0.0,
               double lean_gain = 1.0);

struct Solution {
    std::vector<RotorCommand> u;        // size N, within bounds
    std::vector<StateVector> x;         // size N+1, predicted trajectory
    double kkt = 0.0;                   // projected-gradient norm
    int iterations = 0;
    double solve_time_s = 0.0;
    double cost = 0.0;
    bool converged = false;
};

class HnmpcSolver {
public:
    HnmpcSolver(const OcpConfig& cfg, const VehicleParams& params);

    // reference must supply N+1 points (u_ref used for the first N).
    Solution solve(const HybridState& x0, const std::vector<ReferencePoint>& reference,
                   const ModeSchedule& schedule);

    void reset_warm_start() { warm_valid_ = false; }
    // Estimated external pitch torque included in the prediction model
    // (offset-free tracking under an unmodeled constant disturbance).
    void set_pitch_disturbance(double tau_y) { tau_pitch_ = tau_y; }
    const OcpConfig& config() const { return cfg_; }

private:
    struct Rollout {
        std::vector<StateVector> x;
        double cost;
    };
    Rollout rollout(const StateVector& x0, const Eigen::VectorXd& U) const;
    double stage_cost(const StateVector& x, int i) const;

    OcpConfig cfg_;
    VehicleParams params_;

    // Per-solve context (set in solve()).
    const std::vector<ReferencePoint>* ref_ = nullptr;
    const ModeSchedule* sched_ = nullptr;
    std::vector<StateVector> xref_;
    std::vector<Eigen::Vector4d> uref_;  // input targets, disturbance-trimmed
    std::vector<Eigen::Matrix<double, kNx, 1>> wx_;  // diagonal stage weights
    std::vector<double> tau_stage_;   // per-stage known pitch torque for the model
    std::vector<double> lean_stage_;  // per-stage lean-torque state-feedback gain

    Eigen::VectorXd U_prev_;
    bool warm_valid_ = false;
    int eta0_prev_ = -1;
    double tau_pitch_ = 0.0;
};

}  // namespace triphibot

#endif
