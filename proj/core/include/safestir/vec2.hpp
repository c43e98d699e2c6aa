#pragma once

#include <cmath>

namespace safestir {

/// 2D point/vector in meters, table plane.
struct Vec2 {
    double x = 0.0;
    double y = 0.0;

    Vec2() = default;
    Vec2(double x_, double y_) : x(x_), y(y_) {}

    Vec2 operator+(const Vec2& o) const { return {x + o.x, y + o.y}; }
    Vec2 operator-(const Vec2& o) const { return {x - o.x, y - o.y}; }
    Vec2 operator*(double s) const { return {x * s, y * s}; }
    Vec2& operator+=(const Vec2& o) { x += o.x; y += o.y; return *this; }
    Vec2& operator-=(const Vec2& o) { x -= o.x; y -= o.y; return *this; }
    bool operator==(const Vec2& o) const = default;

    double dot(const Vec2& o) const { return x * o.x + y * o.y; }
    double norm() const { return std::sqrt(x * x + y * y); }

    /// Unit vector; fallback is used when the norm is (near) zero.
    Vec2 normalized(const Vec2& fallback = {1.0, 0.0}) const {
        double n = norm();
        if (n < 1e-15) return fallback;
        return {x / n, y / n};
    }

    bool finite() const { return std::isfinite(x) && std::isfinite(y); }
};

inline Vec2 operator*(double s, const Vec2& v) { return v * s; }

inline double distance(const Vec2& a, const Vec2& b) { return (a - b).norm(); }

/// Clip the vector norm to at most `max_norm` (direction preserved).
inline Vec2 clip_norm(const Vec2& v, double max_norm) {
    double n = v.norm();
    if (n <= max_norm || n == 0.0) return v;
    return v * (max_norm / n);
}

inline double clamp(double v, double lo, double hi) {
    return v < lo ? lo : (v > hi ? hi : v);
}

}  // namespace safestir
