#pragma once

#include <cmath>
#include <stdexcept>

namespace patswarm {

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kTwoPi = 2.0 * kPi;

inline double deg_to_rad(double deg) { return deg * kPi / 180.0; }
inline double rad_to_deg(double rad) { return rad * 180.0 / kPi; }

/// Wrap an angle to [-pi, pi).
inline double wrap_pi(double a) {
    double w = a - kTwoPi * std::floor((a + kPi) / kTwoPi);
    // floor rounding can land exactly on +pi for inputs just below a period boundary
    if (w >= kPi) w -= kTwoPi;
    return w;
}

/// Wrap an angle to [0, 2*pi).
inline double wrap_two_pi(double a) {
    double w = a - kTwoPi * std::floor(a / kTwoPi);
    if (w >= kTwoPi) w -= kTwoPi;
    if (w < 0.0) w += kTwoPi;
    return w;
}

struct Vec3 {
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;

    Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
    Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
    Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }
    Vec3 operator/(double s) const { return {x / s, y / s, z / s}; }
    Vec3 operator-() const { return {-x, -y, -z}; }
    Vec3& operator+=(const Vec3& o) { x += o.x; y += o.y; z += o.z; return *this; }
    Vec3& operator-=(const Vec3& o) { x -= o.x; y -= o.y; z -= o.z; return *this; }

    double dot(const Vec3& o) const { return x * o.x + y * o.y + z * o.z; }
    Vec3 cross(const Vec3& o) const {
        return {y * o.z - z * o.y, z * o.x - x * o.z, x * o.y - y * o.x};
    }
    double norm_sq() const { return dot(*this); }
    double norm() const { return std::sqrt(norm_sq()); }

    Vec3 normalized() const {
        double n = norm();
        if (n < 1e-12) throw std::invalid_argument("cannot normalize near-zero vector");
        return *this / n;
    }
};

inline Vec3 operator*(double s, const Vec3& v) { return v * s; }

/// Planar (x,y) distance, used for drive errors and station checks.
inline double planar_distance(const Vec3& a, const Vec3& b) {
    return std::hypot(a.x - b.x, a.y - b.y);
}

/// Rigid pose: position plus yaw about +z, then pitch about the body +y axis.
/// Local frame convention: +z is the emitting normal of a board lying flat.
/// pitch = 0 keeps the normal on +z; pitch = pi/2 tips it into the horizontal
/// plane along the yaw heading.
struct Pose {
    Vec3 position{};
    double yaw = 0.0;   // rad, wrapped to [-pi, pi)
    double pitch = 0.0; // rad, [0, pi/2]

    /// Rotate a direction from the local frame into the world frame:
    /// Rz(yaw) * Ry(pitch).
    Vec3 to_world_dir(const Vec3& d) const {
        double cp = std::cos(pitch), sp = std::sin(pitch);
        double cy = std::cos(yaw), sy = std::sin(yaw);
        // Ry(pitch)
        Vec3 r{d.x * cp + d.z * sp, d.y, -d.x * sp + d.z * cp};
        // Rz(yaw)
        return {r.x * cy - r.y * sy, r.x * sy + r.y * cy, r.z};
    }

    Vec3 to_world_point(const Vec3& p) const { return position + to_world_dir(p); }

    /// Emitting normal (local +z) in world coordinates.
    Vec3 normal() const { return to_world_dir({0.0, 0.0, 1.0}); }

    /// Planar heading direction (local +x at pitch 0).
    Vec3 heading() const { return {std::cos(yaw), std::sin(yaw), 0.0}; }
};

/// Validated pose factory: wraps yaw, rejects pitch outside [0, pi/2].
inline Pose make_pose(const Vec3& position, double yaw, double pitch = 0.0) {
    if (!(pitch >= -1e-12 && pitch <= kPi / 2.0 + 1e-12))
        throw std::invalid_argument("pose pitch outside [0, pi/2]");
    Pose p;
    p.position = position;
    p.yaw = wrap_pi(yaw);
    p.pitch = std::min(std::max(pitch, 0.0), kPi / 2.0);
    return p;
}

} // namespace patswarm
