#ifndef TRIPHIBOT_ALGEBRA_HPP
#define TRIPHIBOT_ALGEBRA_HPP

// Minimal fixed-size linear algebra templated on the scalar type, so the
// same model code runs on double, dual numbers (Jacobians) and time jets
// (flatness derivatives). Eigen is used at the double-typed public API;
// these types keep the templated core free of custom-scalar trait plumbing.

#include <array>
#include <cmath>

namespace triphibot {

template <typename T>
struct Vec3 {
    T x{}, y{}, z{};

    Vec3() = default;
    Vec3(T x_, T y_, T z_) : x(x_), y(y_), z(z_) {}

    Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
    Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
    Vec3 operator-() const { return {-x, -y, -z}; }
    Vec3& operator+=(const Vec3& o) { x += o.x; y += o.y; z += o.z; return *this; }

    template <typename S>
    friend Vec3 operator*(const S& s, const Vec3& v) { return {s * v.x, s * v.y, s * v.z}; }
    Vec3 operator*(const T& s) const { return {x * s, y * s, z * s}; }
    Vec3 operator/(const T& s) const { return {x / s, y / s, z / s}; }

    T dot(const Vec3& o) const { return x * o.x + y * o.y + z * o.z; }
    Vec3 cross(const Vec3& o) const {
        return {y * o.z - z * o.y, z * o.x - x * o.z, x * o.y - y * o.x};
    }
    T squared_norm() const { return dot(*this); }
    T norm() const { using std::sqrt; return sqrt(squared_norm()); }
    Vec3 cwise(const Vec3& o) const { return {x * o.x, y * o.y, z * o.z}; }
};

// Row-major 3x3 matrix.
template <typename T>
struct Mat3 {
    std::array<T, 9> a{};

    static Mat3 identity() {
        Mat3 m;
        m.a[0] = T(1); m.a[4] = T(1); m.a[8] = T(1);
        return m;
    }
    T& operator()(int r, int c) { return a[3 * r + c]; }
    const T& operator()(int r, int c) const { return a[3 * r + c]; }

    Vec3<T> operator*(const Vec3<T>& v) const {
        return {a[0] * v.x + a[1] * v.y + a[2] * v.z,
                a[3] * v.x + a[4] * v.y + a[5] * v.z,
                a[6] * v.x + a[7] * v.y + a[8] * v.z};
    }
    // R^T * v
    Vec3<T> tmul(const Vec3<T>& v) const {
        return {a[0] * v.x + a[3] * v.y + a[6] * v.z,
                a[1] * v.x + a[4] * v.y + a[7] * v.z,
                a[2] * v.x + a[5] * v.y + a[8] * v.z};
    }
    Mat3 operator*(const Mat3& o) const {
        Mat3 r;
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) {
                T s{};
                for (int k = 0; k < 3; ++k) s = s + (*this)(i, k) * o(k, j);
                r(i, j) = s;
            }
        return r;
    }
    Mat3 transposed() const {
        Mat3 r;
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) r(i, j) = (*this)(j, i);
        return r;
    }
};

// Unit quaternion, scalar-first (w, x, y, z).
template <typename T>
struct Quat {
    T w{1}, x{}, y{}, z{};

    Quat() = default;
    Quat(T w_, T x_, T y_, T z_) : w(w_), x(x_), y(y_), z(z_) {}

    Quat operator*(const Quat& q) const {
        return {w * q.w - x * q.x - y * q.y - z * q.z,
                w * q.x + x * q.w + y * q.z - z * q.y,
                w * q.y - x * q.z + y * q.w + z * q.x,
                w * q.z + x * q.y - y * q.x + z * q.w};
    }
    T norm() const { using std::sqrt; return sqrt(w * w + x * x + y * y + z * z); }
    Quat normalized() const {
        T n = norm();
        return {w / n, x / n, y / n, z / n};
    }
    Mat3<T> to_rotation() const {
        Mat3<T> r;
        T ww = w * w, xx = x * x, yy = y * y, zz = z * z;
        r(0, 0) = ww + xx - yy - zz;
        r(0, 1) = T(2) * (x * y - w * z);
        r(0, 2) = T(2) * (x * z + w * y);
        r(1, 0) = T(2) * (x * y + w * z);
        r(1, 1) = ww - xx + yy - zz;
        r(1, 2) = T(2) * (y * z - w * x);
        r(2, 0) = T(2) * (x * z - w * y);
        r(2, 1) = T(2) * (y * z + w * x);
        r(2, 2) = ww - xx - yy + zz;
        return r;
    }
    // dq/dt = 0.5 * q * (0, omega) for body-frame rates.
    Quat derivative(const Vec3<T>& omega) const {
        Quat o{T(0), omega.x, omega.y, omega.z};
        Quat d = (*this) * o;
        return {T(0.5) * d.w, T(0.5) * d.x, T(0.5) * d.y, T(0.5) * d.z};
    }
};

}  // namespace triphibot

#endif
