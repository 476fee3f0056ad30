#include "triphibot/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace triphibot {

double rmse(const std::vector<Eigen::Vector3d>& p, const std::vector<Eigen::Vector3d>& ref,
            bool as_printed) {
    if (p.size() != ref.size()) throw std::invalid_argument("rmse: length mismatch");
    if (p.empty()) throw std::invalid_argument("rmse: empty series");
    double acc = 0.0;
    for (size_t i = 0; i < p.size(); ++i) {
        const double n = (p[i] - ref[i]).norm();
        acc += as_printed ? n : n * n;
    }
    return std::sqrt(acc / static_cast<double>(p.size()));
}

double rise_time_10_90(const std::vector<double>& t, const std::vector<double>& y, double y0,
                       double y_target) {
    if (t.size() != y.size() || t.empty())
        throw std::invalid_argument("rise_time: bad series");
    const double span = y_target - y0;
    if (span == 0.0) return 0.0;
    double t10 = -1.0, t90 = -1.0;
    for (size_t i = 0; i < y.size(); ++i) {
        const double progress = (y[i] - y0) / span;
        if (t10 < 0.0 && progress >= 0.1) t10 = t[i];
        if (progress >= 0.9) {
            t90 = t[i];
            break;
        }
    }
    return (t10 >= 0.0 && t90 >= 0.0) ? t90 - t10 : -1.0;
}

double phase_lag(const std::vector<double>& t, const std::vector<double>& y,
                 const std::vector<double>& y_ref) {
    if (t.size() != y.size() || t.size() != y_ref.size() || t.size() < 4)
        throw std::invalid_argument("phase_lag: bad series");
    const size_t n = t.size();
    const double dt = (t.back() - t.front()) / static_cast<double>(n - 1);
    auto mean = [](const std::vector<double>& v) {
        return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
    };
    const double my = mean(y), mr = mean(y_ref);

    // y(t) ~ y_ref(t - lag): positive lag maximizes sum y[i] * y_ref[i - k].
    const int kmax = static_cast<int>(n / 4);
    int best_k = 0;
    double best_c = -1e300;
    for (int k = -kmax; k <= kmax; ++k) {
        double c = 0.0;
        int count = 0;
        for (int i = std::max(0, k); i < static_cast<int>(n); ++i) {
            const int j = i - k;
            if (j < 0 || j >= static_cast<int>(n)) continue;
            c += (y[i] - my) * (y_ref[j] - mr);
            ++count;
        }
        if (count > 0) c /= count;
        if (c > best_c) {
            best_c = c;
            best_k = k;
        }
    }
    return best_k * dt;
}

PitchStats pitch_range(const std::vector<double>& pitch, size_t from) {
    if (from >= pitch.size()) throw std::invalid_argument("pitch_range: empty window");
    PitchStats s;
    s.min_rad = s.max_rad = pitch[from];
    for (size_t i = from; i < pitch.size(); ++i) {
        s.min_rad = std::min(s.min_rad, pitch[i]);
        s.max_rad = std::max(s.max_rad, pitch[i]);
    }
    return s;
}

ClearanceResult clearance_check(double theta_T, double obstacle_height) {
    ClearanceResult r;
    // Level belly clearance 2 cm; pitching rotates the chassis chord about
    // the wheel axle, lifting the belly by up to the 9 cm half-chord.
    r.clearance = 0.02 + 0.09 * std::sin(std::abs(theta_T));
    r.pass = r.clearance >= obstacle_height;
    return r;
}

MetricsReport metrics(const LogTable& log) {
    MetricsReport rep;
    if (log.rows.empty()) {
        rep.notes.push_back("empty log");
        return rep;
    }
    const auto t = log.series("t");

    const int cpx = log.col("px"), crx = log.col("ref_px");
    if (cpx >= 0 && crx >= 0) {
        std::vector<Eigen::Vector3d> p, r;
        p.reserve(log.rows.size());
        for (const auto& row : log.rows) {
            p.emplace_back(row[cpx], row[cpx + 1], row[cpx + 2]);
            r.emplace_back(row[crx], row[crx + 1], row[crx + 2]);
        }
        rep.rmse_m = rmse(p, r);
    } else {
        rep.notes.push_back("rmse: position columns absent");
    }

    if (log.col("theta_t") >= 0) {
        PitchStats ps = pitch_range(log.series("theta_t"));
        rep.pitch_min_deg = ps.min_rad * 180.0 / M_PI;
        rep.pitch_max_deg = ps.max_rad * 180.0 / M_PI;
    }

    // Phase lag only makes sense when the pitch reference actually moves.
    if (log.col("theta") >= 0 && log.col("ref_pitch") >= 0) {
        const auto ref = log.series("ref_pitch");
        const auto [lo, hi] = std::minmax_element(ref.begin(), ref.end());
        if (*hi - *lo > 1e-3) rep.phase_lag_s = phase_lag(t, log.series("theta"), ref);
        else rep.notes.push_back("phase lag: constant pitch reference");
    }

    if (log.col("solve_ms") >= 0 && log.col("ctrl_tick") >= 0) {
        const auto ms = log.series("solve_ms");
        const auto tick = log.series("ctrl_tick");
        double sum = 0.0;
        int n = 0;
        for (size_t i = 0; i < ms.size(); ++i)
            if (tick[i] > 0.5 && ms[i] > 0.0) {
                sum += ms[i];
                ++n;
            }
        if (n > 0) rep.mean_solve_ms = sum / n;
    }

    for (size_t i = 0; i < log.events.size(); ++i)
        if (!log.events[i].empty())
            rep.events.push_back(std::to_string(t[i]) + " " + log.events[i]);
    return rep;
}

}  // namespace triphibot
