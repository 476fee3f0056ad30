#ifndef TRIPHIBOT_REFERENCE_HPP
#define TRIPHIBOT_REFERENCE_HPP

// Analytic flat-output trajectory generators: 8-shapes, lines, attitude
// sinusoids and multi-segment missions, sampled with closed-form derivatives.

#include <vector>

#include <Eigen/Dense>

#include "triphibot/flatness.hpp"

namespace triphibot {

enum class PrimitiveKind {
    Lissajous8,   // x = A sin(w t), y = B sin(2 w t)
    Line,         // trapezoidal speed profile along a direction
    Hold,         // position and attitude held
    ThetaRamp,    // terrestrial pitch reorientation, position held
    ZRamp,        // aerial vertical climb/descent, xy held
    AttitudeSine, // pitch sinusoid, position free/held (attitude scenarios)
};

struct TrajectorySegment {
    PrimitiveKind kind = PrimitiveKind::Hold;
    double duration = 1.0;
    MotionMode mode = MotionMode::FlightAir;

    Eigen::Vector3d p0{0, 0, 0};  // segment base position
    double yaw = 0.0;
    double kappa = 1.0;

    double amp_x = 0.0, amp_y = 0.0, period = 1.0;  // lissajous / sine
    Eigen::Vector3d dir{1, 0, 0};                   // line
    double length = 0.0, vmax = 1.0, amax = 1.0;    // line
    double theta0 = 0.0, theta1 = 0.0;              // theta ramp endpoints
    double z1 = 0.0;                                // z ramp target (from p0.z)
};

struct TrajectorySpec {
    std::vector<TrajectorySegment> segments;
    bool periodic = false;  // sampling past the end wraps instead of clamping
    double duration() const;
};

// Samples the flat output and derivatives at t; throws if t is out of range.
FlatTrajectoryPoint sample(const TrajectorySpec& spec, double t);

MotionMode mode_at(const TrajectorySpec& spec, double t);

// Full reference point (flatness applied per the segment's mode).
ReferencePoint reference_point(const TrajectorySpec& spec, double t, const VehicleParams& params,
                               double psi_fallback = 0.0);

// 1:2 Lissajous sized so dense-sampled peak speed / acceleration hit the
// given caps exactly.
TrajectorySpec make_lissajous8(double vmax, double amax, MotionMode mode,
                               const Eigen::Vector3d& center, double periods = 1.0);

TrajectorySpec make_line(const Eigen::Vector3d& start, const Eigen::Vector3d& dir, double length,
                         double vmax, double amax, MotionMode mode);

TrajectorySpec make_attitude_sine(double amp_rad, double period, double duration, MotionMode mode,
                                  const Eigen::Vector3d& position);

// The combined land -> air -> land mission: ground run, reorient, takeoff,
// aerial leg back over the start, descent, landing, reorient back.
TrajectorySpec make_combined_mission(const VehicleParams& params);

}  // namespace triphibot

#endif
