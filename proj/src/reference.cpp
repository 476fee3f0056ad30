#include "triphibot/reference.hpp"

#include <cmath>
#include <stdexcept>

namespace triphibot {

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;

// Rest-to-rest quintic blend on [0,1] and its derivatives.
void quintic(double tau, double& s, double& s1, double& s2) {
    s = ((6.0 * tau - 15.0) * tau + 10.0) * tau * tau * tau;
    s1 = ((30.0 * tau - 60.0) * tau + 30.0) * tau * tau;
    s2 = ((120.0 * tau - 180.0) * tau + 60.0) * tau;
}

// Trapezoidal (or triangular) profile: distance, speed, acceleration at t,
// plus total duration.
struct Profile {
    double t_acc, t_cruise, v_peak, acc;
    double duration() const { return 2.0 * t_acc + t_cruise; }
};

Profile line_profile(double length, double vmax, double amax) {
    Profile p{};
    p.acc = amax;
    double s_acc = vmax * vmax / (2.0 * amax);
    if (2.0 * s_acc >= length) {
        p.t_acc = std::sqrt(length / amax);
        p.v_peak = amax * p.t_acc;
        p.t_cruise = 0.0;
    } else {
        p.t_acc = vmax / amax;
        p.v_peak = vmax;
        p.t_cruise = (length - 2.0 * s_acc) / vmax;
    }
    return p;
}

void line_eval(const Profile& p, double t, double& s, double& v, double& a) {
    double t1 = p.t_acc, t2 = p.t_acc + p.t_cruise, t3 = p.duration();
    if (t <= t1) {
        a = p.acc;
        v = p.acc * t;
        s = 0.5 * p.acc * t * t;
    } else if (t <= t2) {
        a = 0.0;
        v = p.v_peak;
        s = 0.5 * p.acc * t1 * t1 + p.v_peak * (t - t1);
    } else if (t <= t3) {
        double td = t3 - t;
        a = -p.acc;
        v = p.acc * td;
        s = 0.5 * p.acc * t1 * t1 + p.v_peak * p.t_cruise + 0.5 * p.acc * (t1 * t1 - td * td);
    } else {
        a = 0.0;
        v = 0.0;
        s = 0.5 * p.acc * t1 * t1 + p.v_peak * p.t_cruise + 0.5 * p.acc * t1 * t1;
    }
}

FlatTrajectoryPoint eval_segment(const TrajectorySegment& seg, double t) {
    FlatTrajectoryPoint pt;
    pt.p[0] = seg.p0;
    pt.psi = {seg.yaw, 0.0, 0.0};
    pt.kappa = seg.kappa;
    switch (seg.kind) {
        case PrimitiveKind::Lissajous8: {
            double w = kTwoPi / seg.period;
            double A = seg.amp_x, B = seg.amp_y;
            double wt = w * t;
            for (int k = 0; k <= 4; ++k) {
                // d^k/dt^k of (A sin(wt), B sin(2wt))
                double ax = A * std::pow(w, k), ay = B * std::pow(2.0 * w, k);
                double phx = wt + 0.5 * M_PI * k, phy = 2.0 * wt + 0.5 * M_PI * k;
                Eigen::Vector3d d(ax * std::sin(phx), ay * std::sin(phy), 0.0);
                pt.p[k] = (k == 0) ? seg.p0 + d : d;
            }
            break;
        }
        case PrimitiveKind::Line: {
            Profile prof = line_profile(seg.length, seg.vmax, seg.amax);
            double s, v, a;
            line_eval(prof, t, s, v, a);
            Eigen::Vector3d dir = seg.dir.normalized();
            pt.p[0] = seg.p0 + s * dir;
            pt.p[1] = v * dir;
            pt.p[2] = a * dir;
            break;
        }
        case PrimitiveKind::Hold: {
            pt.theta_T = {seg.theta0, 0.0, 0.0};
            break;
        }
        case PrimitiveKind::ThetaRamp: {
            double s, s1, s2;
            quintic(std::clamp(t / seg.duration, 0.0, 1.0), s, s1, s2);
            double span = seg.theta1 - seg.theta0;
            double inv = 1.0 / seg.duration;
            pt.theta_T = {seg.theta0 + span * s, span * s1 * inv, span * s2 * inv * inv};
            break;
        }
        case PrimitiveKind::ZRamp: {
            double s, s1, s2;
            quintic(std::clamp(t / seg.duration, 0.0, 1.0), s, s1, s2);
            double span = seg.z1 - seg.p0.z();
            double inv = 1.0 / seg.duration;
            pt.p[0].z() = seg.p0.z() + span * s;
            pt.p[1] = Eigen::Vector3d(0, 0, span * s1 * inv);
            pt.p[2] = Eigen::Vector3d(0, 0, span * s2 * inv * inv);
            // 3rd/4th derivatives of the quintic, for aerial flatness
            double tau = std::clamp(t / seg.duration, 0.0, 1.0);
            double s3 = (360.0 * tau - 360.0) * tau + 60.0;
            double s4 = 720.0 * tau - 360.0;
            pt.p[3] = Eigen::Vector3d(0, 0, span * s3 * inv * inv * inv);
            pt.p[4] = Eigen::Vector3d(0, 0, span * s4 * inv * inv * inv * inv);
            break;
        }
        case PrimitiveKind::AttitudeSine: {
            double w = kTwoPi / seg.period;
            pt.theta_T = {seg.amp_x * std::sin(w * t), seg.amp_x * w * std::cos(w * t),
                          -seg.amp_x * w * w * std::sin(w * t)};
            break;
        }
    }
    return pt;
}

}  // namespace

double TrajectorySpec::duration() const {
    double d = 0.0;
    for (const auto& s : segments) d += s.duration;
    return d;
}

namespace {

const TrajectorySegment& segment_at(const TrajectorySpec& spec, double t, double& local_t) {
    if (t < 0.0 || spec.segments.empty())
        throw std::out_of_range("trajectory: t out of range");
    double acc = 0.0;
    for (const auto& s : spec.segments) {
        if (t <= acc + s.duration || &s == &spec.segments.back()) {
            local_t = std::min(t - acc, s.duration);
            if (local_t < 0.0 || t > spec.duration() + 1e-9)
                throw std::out_of_range("trajectory: t out of range");
            return s;
        }
        acc += s.duration;
    }
    throw std::out_of_range("trajectory: t out of range");
}

}  // namespace

FlatTrajectoryPoint sample(const TrajectorySpec& spec, double t) {
    double local_t = 0.0;
    const TrajectorySegment& seg = segment_at(spec, t, local_t);
    return eval_segment(seg, local_t);
}

MotionMode mode_at(const TrajectorySpec& spec, double t) {
    double local_t = 0.0;
    return segment_at(spec, t, local_t).mode;
}

ReferencePoint reference_point(const TrajectorySpec& spec, double t, const VehicleParams& params,
                               double psi_fallback) {
    double local_t = 0.0;
    const TrajectorySegment& seg = segment_at(spec, t, local_t);
    FlatTrajectoryPoint pt = eval_segment(seg, local_t);
    if (is_ground(seg.mode))
        return terrestrial_flatness(pt, params, medium_of(seg.mode), psi_fallback);
    return aerial_flatness(pt, params);
}

TrajectorySpec make_lissajous8(double vmax, double amax, MotionMode mode,
                               const Eigen::Vector3d& center, double periods) {
    // Fit A and w of (A sin(wt), A/2 sin(2wt)) so dense-sampled speed and
    // acceleration peaks land exactly on the caps.
    const int n = 2000;
    double s_peak = 0.0, a_peak = 0.0;
    for (int i = 0; i <= n; ++i) {
        double t = kTwoPi * i / n;
        double vx = std::cos(t), vy = std::cos(2.0 * t);
        double ax = -std::sin(t), ay = -2.0 * std::sin(2.0 * t);
        s_peak = std::max(s_peak, std::hypot(vx, vy));
        a_peak = std::max(a_peak, std::hypot(ax, ay));
    }
    double w = (amax / a_peak) * (s_peak / vmax);
    double A = vmax / (s_peak * w);

    TrajectorySegment seg;
    seg.kind = PrimitiveKind::Lissajous8;
    seg.mode = mode;
    seg.p0 = center;
    seg.amp_x = A;
    seg.amp_y = 0.5 * A;
    seg.period = kTwoPi / w;
    seg.duration = periods * seg.period;
    TrajectorySpec spec{{seg}};
    spec.periodic = true;
    return spec;
}

TrajectorySpec make_line(const Eigen::Vector3d& start, const Eigen::Vector3d& dir, double length,
                         double vmax, double amax, MotionMode mode) {
    TrajectorySegment seg;
    seg.kind = PrimitiveKind::Line;
    seg.mode = mode;
    seg.p0 = start;
    seg.dir = dir;
    seg.length = length;
    seg.vmax = vmax;
    seg.amax = amax;
    seg.duration = line_profile(length, vmax, amax).duration();
    return TrajectorySpec{{seg}};
}

TrajectorySpec make_attitude_sine(double amp_rad, double period, double duration, MotionMode mode,
                                  const Eigen::Vector3d& position) {
    TrajectorySegment seg;
    seg.kind = PrimitiveKind::AttitudeSine;
    seg.mode = mode;
    seg.p0 = position;
    seg.amp_x = amp_rad;
    seg.period = period;
    seg.duration = duration;
    return TrajectorySpec{{seg}};
}

TrajectorySpec make_combined_mission(const VehicleParams& params) {
    const double zc = params.contact_height;
    const double alt = 1.0;
    const double run = 1.5;
    const double takeoff_pitch = -80.0 * M_PI / 180.0;  // x_T tilted toward vertical

    TrajectorySpec spec;
    auto add = [&](TrajectorySegment s) { spec.segments.push_back(s); };

    // Ground run out.
    TrajectorySpec leg =
        make_line({0, 0, zc}, {1, 0, 0}, run, 2.0, 2.0, MotionMode::GroundLand);
    add(leg.segments[0]);

    TrajectorySegment hold;
    hold.kind = PrimitiveKind::Hold;
    hold.mode = MotionMode::GroundLand;
    hold.p0 = {run, 0, zc};
    hold.duration = 0.3;
    add(hold);

    // Reorient for takeoff.
    TrajectorySegment ramp;
    ramp.kind = PrimitiveKind::ThetaRamp;
    ramp.mode = MotionMode::GroundLand;
    ramp.p0 = {run, 0, zc};
    ramp.theta0 = 0.0;
    ramp.theta1 = takeoff_pitch;
    ramp.duration = 1.2;
    add(ramp);

    // Climb out (eta flips when the reference crosses h_judge).
    TrajectorySegment climb;
    climb.kind = PrimitiveKind::ZRamp;
    climb.mode = MotionMode::FlightAir;
    climb.p0 = {run, 0, zc};
    climb.z1 = alt;
    climb.duration = 1.6;
    add(climb);

    // Aerial leg back over the start.
    TrajectorySpec back =
        make_line({run, 0, alt}, {-1, 0, 0}, run, 2.0, 2.0, MotionMode::FlightAir);
    add(back.segments[0]);

    TrajectorySegment hover;
    hover.kind = PrimitiveKind::Hold;
    hover.mode = MotionMode::FlightAir;
    hover.p0 = {0, 0, alt};
    hover.duration = 0.5;
    add(hover);

    // Descend and land.
    TrajectorySegment descend;
    descend.kind = PrimitiveKind::ZRamp;
    descend.mode = MotionMode::FlightAir;
    descend.p0 = {0, 0, alt};
    descend.z1 = zc;
    descend.duration = 1.8;
    add(descend);

    // Settle on the wheels in the thrust-up pose for a full horizon before
    // pitching down, so the down-ramp never enters the horizon while the
    // vehicle is still airborne.
    TrajectorySegment settle;
    settle.kind = PrimitiveKind::Hold;
    settle.mode = MotionMode::GroundLand;
    settle.p0 = {0, 0, zc};
    settle.theta0 = -86.0 * M_PI / 180.0;
    settle.duration = 2.0;
    add(settle);

    // Reorient back to the rolling pose.
    TrajectorySegment down;
    down.kind = PrimitiveKind::ThetaRamp;
    down.mode = MotionMode::GroundLand;
    down.p0 = {0, 0, zc};
    down.theta0 = -86.0 * M_PI / 180.0;  // just off the sec(theta) singularity
    down.theta1 = 0.0;
    down.duration = 1.2;
    add(down);

    TrajectorySegment rest;
    rest.kind = PrimitiveKind::Hold;
    rest.mode = MotionMode::GroundLand;
    rest.p0 = {0, 0, zc};
    rest.duration = 0.5;
    add(rest);

    return spec;
}

}  // namespace triphibot
