#ifndef TRIPHIBOT_JET_HPP
#define TRIPHIBOT_JET_HPP

// Second-order time jet (value, d/dt, d2/dt2). Flatness builds the reference
// rotation as a jet so body rates and accelerations come out in closed form
// instead of by numeric differentiation.

#include <cmath>

namespace triphibot {

struct Jet2 {
    double v{0.0};   // value
    double d1{0.0};  // first time derivative
    double d2{0.0};  // second time derivative

    Jet2() = default;
    Jet2(double value) : v(value) {}  // NOLINT(google-explicit-constructor)
    Jet2(double value, double dot, double ddot) : v(value), d1(dot), d2(ddot) {}

    Jet2 operator-() const { return {-v, -d1, -d2}; }
    Jet2 operator+(const Jet2& o) const { return {v + o.v, d1 + o.d1, d2 + o.d2}; }
    Jet2 operator-(const Jet2& o) const { return {v - o.v, d1 - o.d1, d2 - o.d2}; }
    Jet2 operator*(const Jet2& o) const {
        return {v * o.v, d1 * o.v + v * o.d1, d2 * o.v + 2.0 * d1 * o.d1 + v * o.d2};
    }
    Jet2 operator/(const Jet2& o) const {
        double q = v / o.v;
        double q1 = (d1 - q * o.d1) / o.v;
        double q2 = (d2 - 2.0 * q1 * o.d1 - q * o.d2) / o.v;
        return {q, q1, q2};
    }
    Jet2& operator+=(const Jet2& o) { *this = *this + o; return *this; }
};

inline Jet2 operator*(double a, const Jet2& b) { return Jet2(a) * b; }
inline Jet2 operator+(double a, const Jet2& b) { return Jet2(a) + b; }
inline Jet2 operator-(double a, const Jet2& b) { return Jet2(a) - b; }

inline Jet2 sin(const Jet2& x) {
    double s = std::sin(x.v), c = std::cos(x.v);
    return {s, c * x.d1, c * x.d2 - s * x.d1 * x.d1};
}
inline Jet2 cos(const Jet2& x) {
    double s = std::sin(x.v), c = std::cos(x.v);
    return {c, -s * x.d1, -s * x.d2 - c * x.d1 * x.d1};
}
inline Jet2 sqrt(const Jet2& x) {
    double s = std::sqrt(x.v);
    double d1 = 0.5 * x.d1 / s;
    double d2 = 0.5 * x.d2 / s - 0.25 * x.d1 * x.d1 / (s * x.v);
    return {s, d1, d2};
}
inline Jet2 atan2(const Jet2& y, const Jet2& x) {
    // d/dt atan2(y,x) = (x*ydot - y*xdot) / (x^2 + y^2)
    double r2 = x.v * x.v + y.v * y.v;
    double num = x.v * y.d1 - y.v * x.d1;
    double d1 = num / r2;
    double numdot = x.v * y.d2 - y.v * x.d2;  // cross terms cancel
    double r2dot = 2.0 * (x.v * x.d1 + y.v * y.d1);
    double d2 = (numdot * r2 - num * r2dot) / (r2 * r2);
    return {std::atan2(y.v, x.v), d1, d2};
}

}  // namespace triphibot

#endif
