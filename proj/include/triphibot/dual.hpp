#ifndef TRIPHIBOT_DUAL_HPP
#define TRIPHIBOT_DUAL_HPP

// Forward-mode dual number with a fixed number of derivative directions.
// Running the prediction model on Dual<N> yields exact Jacobians of the
// discretized dynamics, avoiding finite-difference noise in the SQP.

#include <array>
#include <cmath>

namespace triphibot {

template <int N>
struct Dual {
    double v{0.0};
    std::array<double, N> d{};

    Dual() = default;
    Dual(double value) : v(value) {}  // NOLINT(google-explicit-constructor)
    static Dual seed(double value, int dir) {
        Dual r(value);
        r.d[dir] = 1.0;
        return r;
    }

    Dual operator-() const {
        Dual r(-v);
        for (int i = 0; i < N; ++i) r.d[i] = -d[i];
        return r;
    }
    Dual operator+(const Dual& o) const {
        Dual r(v + o.v);
        for (int i = 0; i < N; ++i) r.d[i] = d[i] + o.d[i];
        return r;
    }
    Dual operator-(const Dual& o) const {
        Dual r(v - o.v);
        for (int i = 0; i < N; ++i) r.d[i] = d[i] - o.d[i];
        return r;
    }
    Dual operator*(const Dual& o) const {
        Dual r(v * o.v);
        for (int i = 0; i < N; ++i) r.d[i] = d[i] * o.v + v * o.d[i];
        return r;
    }
    Dual operator/(const Dual& o) const {
        Dual r(v / o.v);
        double inv2 = 1.0 / (o.v * o.v);
        for (int i = 0; i < N; ++i) r.d[i] = (d[i] * o.v - v * o.d[i]) * inv2;
        return r;
    }
    Dual& operator+=(const Dual& o) { *this = *this + o; return *this; }
    Dual& operator-=(const Dual& o) { *this = *this - o; return *this; }
    Dual& operator*=(const Dual& o) { *this = *this * o; return *this; }

    bool operator<(const Dual& o) const { return v < o.v; }
    bool operator>(const Dual& o) const { return v > o.v; }
};

template <int N> Dual<N> operator+(double a, const Dual<N>& b) { return Dual<N>(a) + b; }
template <int N> Dual<N> operator-(double a, const Dual<N>& b) { return Dual<N>(a) - b; }
template <int N> Dual<N> operator*(double a, const Dual<N>& b) { return Dual<N>(a) * b; }
template <int N> Dual<N> operator/(double a, const Dual<N>& b) { return Dual<N>(a) / b; }

template <int N>
Dual<N> chain(double f, double fprime, const Dual<N>& x) {
    Dual<N> r(f);
    for (int i = 0; i < N; ++i) r.d[i] = fprime * x.d[i];
    return r;
}

template <int N> Dual<N> sin(const Dual<N>& x) { return chain(std::sin(x.v), std::cos(x.v), x); }
template <int N> Dual<N> cos(const Dual<N>& x) { return chain(std::cos(x.v), -std::sin(x.v), x); }
template <int N> Dual<N> tan(const Dual<N>& x) {
    double c = std::cos(x.v);
    return chain(std::tan(x.v), 1.0 / (c * c), x);
}
template <int N> Dual<N> sqrt(const Dual<N>& x) {
    double s = std::sqrt(x.v);
    return chain(s, s > 0.0 ? 0.5 / s : 0.0, x);
}
template <int N> Dual<N> exp(const Dual<N>& x) {
    double e = std::exp(x.v);
    return chain(e, e, x);
}
template <int N> Dual<N> asin(const Dual<N>& x) {
    return chain(std::asin(x.v), 1.0 / std::sqrt(std::max(1e-12, 1.0 - x.v * x.v)), x);
}
template <int N> Dual<N> abs(const Dual<N>& x) {
    return x.v >= 0.0 ? x : -x;
}
template <int N> Dual<N> atan2(const Dual<N>& y, const Dual<N>& x) {
    double denom = x.v * x.v + y.v * y.v;
    Dual<N> r(std::atan2(y.v, x.v));
    for (int i = 0; i < N; ++i) r.d[i] = (x.v * y.d[i] - y.v * x.d[i]) / denom;
    return r;
}
template <int N> double value(const Dual<N>& x) { return x.v; }
inline double value(double x) { return x; }

}  // namespace triphibot

#endif
