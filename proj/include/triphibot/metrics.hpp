#ifndef TRIPHIBOT_METRICS_HPP
#define TRIPHIBOT_METRICS_HPP

// Trajectory and signal metrics: RMSE, pitch excursions, rise time,
// cross-correlation phase lag, and the ground-clearance model.

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "triphibot/simkit.hpp"

namespace triphibot {

// sqrt(mean ||p - ref||^2). With as_printed the inner norm is not squared
// (the formula as sometimes printed); kept only for comparison.
double rmse(const std::vector<Eigen::Vector3d>& p, const std::vector<Eigen::Vector3d>& ref,
            bool as_printed = false);

// 10-90% rise time of y toward y_target from y0; negative if never reached.
double rise_time_10_90(const std::vector<double>& t, const std::vector<double>& y, double y0,
                       double y_target);

// Phase lag (s, positive = y lags y_ref) via integer-shift cross-correlation.
double phase_lag(const std::vector<double>& t, const std::vector<double>& y,
                 const std::vector<double>& y_ref);

struct PitchStats {
    double min_rad = 0.0;
    double max_rad = 0.0;
};
PitchStats pitch_range(const std::vector<double>& pitch, size_t from = 0);

// Chord clearance model: 2 cm belly clearance in the level pose, growing
// with pitch as the body rotates about the wheel axle.
struct ClearanceResult {
    bool pass = false;
    double clearance = 0.0;  // m
};
ClearanceResult clearance_check(double theta_T, double obstacle_height);

struct MetricsReport {
    double rmse_m = -1.0;
    double pitch_min_deg = 0.0, pitch_max_deg = 0.0;
    double phase_lag_s = -1.0;
    double mean_solve_ms = -1.0;
    std::vector<std::string> events;  // "t label" lines
    std::vector<std::string> notes;
};

// Metric bundle from a parsed log; metrics that do not apply are flagged in
// notes and left at their sentinel values.
MetricsReport metrics(const LogTable& log);

}  // namespace triphibot

#endif
