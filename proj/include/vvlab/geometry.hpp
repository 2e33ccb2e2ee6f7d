#pragma once

#include <cmath>

namespace vvlab {

/// Plane vector; also used for points of the closed unit disk.
struct Vec2 {
    double x1 = 0.0;
    double x2 = 0.0;

    constexpr Vec2& operator+=(Vec2 o) { x1 += o.x1; x2 += o.x2; return *this; }
    constexpr Vec2& operator-=(Vec2 o) { x1 -= o.x1; x2 -= o.x2; return *this; }
    constexpr Vec2& operator*=(double s) { x1 *= s; x2 *= s; return *this; }
};

using Point = Vec2;

constexpr Vec2 operator+(Vec2 a, Vec2 b) { return {a.x1 + b.x1, a.x2 + b.x2}; }
constexpr Vec2 operator-(Vec2 a, Vec2 b) { return {a.x1 - b.x1, a.x2 - b.x2}; }
constexpr Vec2 operator-(Vec2 a) { return {-a.x1, -a.x2}; }
constexpr Vec2 operator*(double s, Vec2 a) { return {s * a.x1, s * a.x2}; }
constexpr Vec2 operator*(Vec2 a, double s) { return {s * a.x1, s * a.x2}; }
constexpr double dot(Vec2 a, Vec2 b) { return a.x1 * b.x1 + a.x2 * b.x2; }
constexpr double norm2(Vec2 a) { return dot(a, a); }
inline double norm(Vec2 a) { return std::hypot(a.x1, a.x2); }

/// Rotation by +pi/2: (a1, a2) -> (-a2, a1).
constexpr Vec2 perp(Vec2 a) { return {-a.x2, a.x1}; }

inline Vec2 polar(double r, double theta) { return {r * std::cos(theta), r * std::sin(theta)}; }

/// Symmetric 2x2 matrix [[h11, h12], [h12, h22]].
struct Sym2 {
    double h11 = 0.0;
    double h12 = 0.0;
    double h22 = 0.0;
};

constexpr double trace(Sym2 h) { return h.h11 + h.h22; }

}  // namespace vvlab
