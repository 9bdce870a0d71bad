#pragma once

#include <array>
#include <cmath>
#include <limits>
#include <span>

#include "patswarm/geometry.hpp"
#include "patswarm/pi_control.hpp"

namespace patswarm::robot {

/// Fan of five range rays, bearings relative to the heading; positive is
/// counter-clockwise (left).
inline constexpr std::array<double, 5> kIrBearingsDeg = {-70.0, -35.0, 0.0, 35.0, 70.0};
inline constexpr double kIrMaxRange = 0.15;      // m
inline constexpr double kAvoidStopDistance = 0.05; // m
inline constexpr double kAvoidSlowDistance = 0.10; // m

struct Disc {
    Vec3 center{};
    double radius = 0.0;
};

/// Axis-aligned workspace; walls reflect IR like obstacles do.
struct Workspace {
    double xmin = -1.0, xmax = 1.0;
    double ymin = -1.0, ymax = 1.0;

    bool contains(const Vec3& p) const {
        return p.x >= xmin && p.x <= xmax && p.y >= ymin && p.y <= ymax;
    }
};

struct IRScan {
    std::array<double, 5> range{}; // m; +infinity when nothing within max range
};

namespace detail {

inline double ray_disc_distance(const Vec3& origin, double dir_x, double dir_y, const Disc& d) {
    double ocx = d.center.x - origin.x;
    double ocy = d.center.y - origin.y;
    double proj = ocx * dir_x + ocy * dir_y;
    if (proj <= 0.0) return std::numeric_limits<double>::infinity();
    double perp_sq = ocx * ocx + ocy * ocy - proj * proj;
    double r_sq = d.radius * d.radius;
    if (perp_sq > r_sq) return std::numeric_limits<double>::infinity();
    double t = proj - std::sqrt(r_sq - perp_sq);
    return t > 0.0 ? t : 0.0;
}

inline double ray_wall_distance(const Vec3& origin, double dir_x, double dir_y,
                                const Workspace& w) {
    double best = std::numeric_limits<double>::infinity();
    if (dir_x > 1e-12) best = std::min(best, (w.xmax - origin.x) / dir_x);
    if (dir_x < -1e-12) best = std::min(best, (w.xmin - origin.x) / dir_x);
    if (dir_y > 1e-12) best = std::min(best, (w.ymax - origin.y) / dir_y);
    if (dir_y < -1e-12) best = std::min(best, (w.ymin - origin.y) / dir_y);
    return best >= 0.0 ? best : 0.0;
}

} // namespace detail

/// Planar ray cast from the robot centre against obstacle discs and the
/// workspace walls. Readings beyond max_range report +infinity.
inline IRScan ir_scan(const Pose& pose, std::span<const Disc> obstacles,
                      const Workspace* bounds = nullptr, double max_range = kIrMaxRange) {
    IRScan scan;
    for (std::size_t i = 0; i < kIrBearingsDeg.size(); ++i) {
        double a = pose.yaw + deg_to_rad(kIrBearingsDeg[i]);
        double dx = std::cos(a), dy = std::sin(a);
        double best = std::numeric_limits<double>::infinity();
        for (const Disc& d : obstacles)
            best = std::min(best, detail::ray_disc_distance(pose.position, dx, dy, d));
        if (bounds) best = std::min(best, detail::ray_wall_distance(pose.position, dx, dy, *bounds));
        scan.range[i] = best <= max_range ? best : std::numeric_limits<double>::infinity();
    }
    return scan;
}

/// Reactive filter between the waypoint controller and the wheels:
///  - anything nearer than stop_distance halts the robot outright,
///  - inside slow_distance the forward speed is scaled by proximity and the
///    turn is biased away from the nearest ray.
/// The filter never increases the forward speed and never exceeds the wheel
/// limit. A centre-ray obstacle biases to a right turn.
inline WheelCommand avoid(const IRScan& scan, const WheelCommand& commanded,
                          const DiffDriveParams& params,
                          double stop_distance = kAvoidStopDistance,
                          double slow_distance = kAvoidSlowDistance) {
    double min_r = std::numeric_limits<double>::infinity();
    std::size_t min_i = 0;
    for (std::size_t i = 0; i < scan.range.size(); ++i) {
        if (scan.range[i] < min_r) {
            min_r = scan.range[i];
            min_i = i;
        }
    }
    if (min_r < stop_distance) return {0.0, 0.0};
    if (!(min_r < slow_distance)) return commanded;

    double v = 0.5 * (commanded.v_left + commanded.v_right);
    double omega = (commanded.v_right - commanded.v_left) / params.wheel_base;
    double proximity = 1.0 - min_r / slow_distance; // (0, 0.5]
    if (v > 0.0) {
        v *= min_r / slow_distance;
        // steer away from the blocked side; dead-centre counts as left
        double away = kIrBearingsDeg[min_i] >= 0.0 ? -1.0 : 1.0;
        omega += away * 1.2 * proximity;
    }

    double half_base = 0.5 * params.wheel_base;
    WheelCommand out{v - omega * half_base, v + omega * half_base};
    double peak = std::max(std::abs(out.v_left), std::abs(out.v_right));
    if (peak > params.max_wheel_speed) {
        double scale = params.max_wheel_speed / peak;
        out.v_left *= scale;
        out.v_right *= scale;
    }
    return out;
}

} // namespace patswarm::robot
