#pragma once

#include <array>
#include <cmath>
#include <charconv>
#include <cstdint>
#include <string>

namespace articraft {

inline constexpr double kPi = 3.14159265358979323846;

struct Vec3 {
    double x = 0.0, y = 0.0, z = 0.0;

    constexpr Vec3() = default;
    constexpr Vec3(double x_, double y_, double z_) : x(x_), y(y_), z(z_) {}

    constexpr Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
    constexpr Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
    constexpr Vec3 operator-() const { return {-x, -y, -z}; }
    constexpr Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }
    constexpr Vec3 operator/(double s) const { return {x / s, y / s, z / s}; }
    Vec3& operator+=(const Vec3& o) { x += o.x; y += o.y; z += o.z; return *this; }
    Vec3& operator-=(const Vec3& o) { x -= o.x; y -= o.y; z -= o.z; return *this; }
    Vec3& operator*=(double s) { x *= s; y *= s; z *= s; return *this; }
    constexpr bool operator==(const Vec3& o) const { return x == o.x && y == o.y && z == o.z; }

    constexpr double dot(const Vec3& o) const { return x * o.x + y * o.y + z * o.z; }
    constexpr Vec3 cross(const Vec3& o) const {
        return {y * o.z - z * o.y, z * o.x - x * o.z, x * o.y - y * o.x};
    }
    constexpr double norm2() const { return dot(*this); }
    double norm() const { return std::sqrt(norm2()); }
    Vec3 normalized() const { double n = norm(); return {x / n, y / n, z / n}; }

    constexpr double operator[](int i) const { return i == 0 ? x : (i == 1 ? y : z); }
    double& operator[](int i) { return i == 0 ? x : (i == 1 ? y : z); }
};

inline constexpr Vec3 operator*(double s, const Vec3& v) { return v * s; }

inline Vec3 min_components(const Vec3& a, const Vec3& b) {
    return {std::min(a.x, b.x), std::min(a.y, b.y), std::min(a.z, b.z)};
}
inline Vec3 max_components(const Vec3& a, const Vec3& b) {
    return {std::max(a.x, b.x), std::max(a.y, b.y), std::max(a.z, b.z)};
}

// Row-major 3x3 matrix. Only what rigid transforms and inertia tensors need.
struct Mat3 {
    std::array<double, 9> m{1, 0, 0, 0, 1, 0, 0, 0, 1};

    static Mat3 identity() { return {}; }
    static Mat3 zero() { Mat3 r; r.m = {0, 0, 0, 0, 0, 0, 0, 0, 0}; return r; }
    static Mat3 diagonal(double a, double b, double c) {
        Mat3 r = zero();
        r.m[0] = a; r.m[4] = b; r.m[8] = c;
        return r;
    }

    double operator()(int r, int c) const { return m[r * 3 + c]; }
    double& operator()(int r, int c) { return m[r * 3 + c]; }

    Mat3 operator*(const Mat3& o) const {
        Mat3 r = zero();
        for (int i = 0; i < 3; ++i)
            for (int k = 0; k < 3; ++k) {
                double a = (*this)(i, k);
                for (int j = 0; j < 3; ++j) r(i, j) += a * o(k, j);
            }
        return r;
    }
    Vec3 operator*(const Vec3& v) const {
        return {m[0] * v.x + m[1] * v.y + m[2] * v.z,
                m[3] * v.x + m[4] * v.y + m[5] * v.z,
                m[6] * v.x + m[7] * v.y + m[8] * v.z};
    }
    Mat3 operator+(const Mat3& o) const {
        Mat3 r;
        for (int i = 0; i < 9; ++i) r.m[i] = m[i] + o.m[i];
        return r;
    }
    Mat3 operator-(const Mat3& o) const {
        Mat3 r;
        for (int i = 0; i < 9; ++i) r.m[i] = m[i] - o.m[i];
        return r;
    }
    Mat3 operator*(double s) const {
        Mat3 r;
        for (int i = 0; i < 9; ++i) r.m[i] = m[i] * s;
        return r;
    }
    Mat3 transposed() const {
        Mat3 r;
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) r(i, j) = (*this)(j, i);
        return r;
    }
};

inline Mat3 rotation_x(double a) {
    double c = std::cos(a), s = std::sin(a);
    Mat3 r;
    r.m = {1, 0, 0, 0, c, -s, 0, s, c};
    return r;
}
inline Mat3 rotation_y(double a) {
    double c = std::cos(a), s = std::sin(a);
    Mat3 r;
    r.m = {c, 0, s, 0, 1, 0, -s, 0, c};
    return r;
}
inline Mat3 rotation_z(double a) {
    double c = std::cos(a), s = std::sin(a);
    Mat3 r;
    r.m = {c, -s, 0, s, c, 0, 0, 0, 1};
    return r;
}

// URDF convention: fixed-axis rpy, R = Rz(yaw) * Ry(pitch) * Rx(roll).
inline Mat3 rpy_to_matrix(const Vec3& rpy) {
    return rotation_z(rpy.z) * rotation_y(rpy.y) * rotation_x(rpy.x);
}

inline Vec3 matrix_to_rpy(const Mat3& r) {
    double sy = std::sqrt(r(0, 0) * r(0, 0) + r(1, 0) * r(1, 0));
    if (sy < 1e-12) {
        // Gimbal lock: pitch = +/- pi/2, fold everything into roll.
        return {std::atan2(-r(1, 2), r(1, 1)), std::atan2(-r(2, 0), sy), 0.0};
    }
    return {std::atan2(r(2, 1), r(2, 2)), std::atan2(-r(2, 0), sy), std::atan2(r(1, 0), r(0, 0))};
}

// Rodrigues rotation about a unit axis.
inline Mat3 axis_angle(const Vec3& axis, double angle) {
    double c = std::cos(angle), s = std::sin(angle), t = 1.0 - c;
    double x = axis.x, y = axis.y, z = axis.z;
    Mat3 r;
    r.m = {t * x * x + c,     t * x * y - s * z, t * x * z + s * y,
           t * x * y + s * z, t * y * y + c,     t * y * z - s * x,
           t * x * z - s * y, t * y * z + s * x, t * z * z + c};
    return r;
}

// Rigid transform stored as xyz translation + rpy rotation (URDF origin form).
struct Transform {
    Vec3 xyz;
    Vec3 rpy;

    static Transform identity() { return {}; }
    static Transform translation(const Vec3& t) { return {t, {}}; }

    Mat3 rotation() const { return rpy_to_matrix(rpy); }
    Vec3 apply(const Vec3& p) const { return rotation() * p + xyz; }

    bool is_identity(double tol = 1e-12) const {
        return std::abs(xyz.x) <= tol && std::abs(xyz.y) <= tol && std::abs(xyz.z) <= tol &&
               std::abs(rpy.x) <= tol && std::abs(rpy.y) <= tol && std::abs(rpy.z) <= tol;
    }
};

// Rigid pose as explicit matrix + translation. FK composes these and only
// converts back to rpy at the boundary, so chains stay exact.
struct Pose {
    Mat3 rot;
    Vec3 pos;

    static Pose identity() { return {}; }
    static Pose from_transform(const Transform& t) { return {t.rotation(), t.xyz}; }

    Pose operator*(const Pose& o) const { return {rot * o.rot, rot * o.pos + pos}; }
    Vec3 apply(const Vec3& p) const { return rot * p + pos; }
    Transform to_transform() const { return {pos, matrix_to_rpy(rot)}; }
};

// Shortest decimal that round-trips. Every serialized double in the project
// goes through here so exports and digests stay byte-identical.
inline std::string format_double(double v) {
    if (v == 0.0) v = 0.0;  // normalize -0
    char buf[32];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

inline std::string format_vec3(const Vec3& v, char sep = ' ') {
    std::string s = format_double(v.x);
    s += sep;
    s += format_double(v.y);
    s += sep;
    s += format_double(v.z);
    return s;
}

inline double clamp(double v, double lo, double hi) { return v < lo ? lo : (v > hi ? hi : v); }

}  // namespace articraft
