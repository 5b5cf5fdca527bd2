#ifndef GABORSPLAT_VEC_HPP
#define GABORSPLAT_VEC_HPP

#include <cmath>

#include "gaborsplat/core.hpp"

namespace gsp {

struct Vec2 {
    Real x = 0, y = 0;
};

inline Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
inline Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
inline Vec2 operator*(Real s, Vec2 a) { return {s * a.x, s * a.y}; }
inline Real dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
inline Real norm_sq(Vec2 a) { return dot(a, a); }
inline Real norm(Vec2 a) { return std::sqrt(norm_sq(a)); }

struct Vec3 {
    Real x = 0, y = 0, z = 0;

    Vec3& operator+=(const Vec3& o) {
        x += o.x;
        y += o.y;
        z += o.z;
        return *this;
    }
    Vec3& operator-=(const Vec3& o) {
        x -= o.x;
        y -= o.y;
        z -= o.z;
        return *this;
    }
    Vec3& operator*=(Real s) {
        x *= s;
        y *= s;
        z *= s;
        return *this;
    }
};

inline Vec3 operator+(Vec3 a, Vec3 b) { return {a.x + b.x, a.y + b.y, a.z + b.z}; }
inline Vec3 operator-(Vec3 a, Vec3 b) { return {a.x - b.x, a.y - b.y, a.z - b.z}; }
inline Vec3 operator-(Vec3 a) { return {-a.x, -a.y, -a.z}; }
inline Vec3 operator*(Real s, Vec3 a) { return {s * a.x, s * a.y, s * a.z}; }
inline Vec3 operator*(Vec3 a, Real s) { return s * a; }
inline Vec3 operator/(Vec3 a, Real s) { return {a.x / s, a.y / s, a.z / s}; }
// Component-wise product, used for per-channel color math.
inline Vec3 cmul(Vec3 a, Vec3 b) { return {a.x * b.x, a.y * b.y, a.z * b.z}; }

inline Real dot(Vec3 a, Vec3 b) { return a.x * b.x + a.y * b.y + a.z * b.z; }
inline Vec3 cross(Vec3 a, Vec3 b) {
    return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}
inline Real norm_sq(Vec3 a) { return dot(a, a); }
inline Real norm(Vec3 a) { return std::sqrt(norm_sq(a)); }
inline Vec3 normalized(Vec3 a) { return a / norm(a); }

struct Vec4 {
    Real w = 0, x = 0, y = 0, z = 0;
};

inline Vec4 operator+(Vec4 a, Vec4 b) { return {a.w + b.w, a.x + b.x, a.y + b.y, a.z + b.z}; }
inline Vec4 operator*(Real s, Vec4 a) { return {s * a.w, s * a.x, s * a.y, s * a.z}; }
inline Real dot(Vec4 a, Vec4 b) { return a.w * b.w + a.x * b.x + a.y * b.y + a.z * b.z; }
inline Real norm(Vec4 a) { return std::sqrt(dot(a, a)); }

// Row-major 3x3 matrix. Only what the engine needs: rotations and a few
// products.
struct Mat3 {
    Real m[3][3] = {{1, 0, 0}, {0, 1, 0}, {0, 0, 1}};

    static Mat3 identity() { return Mat3{}; }

    Vec3 row(int i) const { return {m[i][0], m[i][1], m[i][2]}; }
    Vec3 col(int j) const { return {m[0][j], m[1][j], m[2][j]}; }
};

inline Vec3 operator*(const Mat3& a, Vec3 v) {
    return {dot(a.row(0), v), dot(a.row(1), v), dot(a.row(2), v)};
}

inline Mat3 operator*(const Mat3& a, const Mat3& b) {
    Mat3 r;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
            r.m[i][j] = a.m[i][0] * b.m[0][j] + a.m[i][1] * b.m[1][j] + a.m[i][2] * b.m[2][j];
    return r;
}

inline Mat3 transpose(const Mat3& a) {
    Mat3 r;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) r.m[i][j] = a.m[j][i];
    return r;
}

inline Vec3 transposed_mul(const Mat3& a, Vec3 v) {
    return {dot(a.col(0), v), dot(a.col(1), v), dot(a.col(2), v)};
}

inline Real det(const Mat3& a) {
    return dot(a.col(0), cross(a.col(1), a.col(2)));
}

}  // namespace gsp

#endif
