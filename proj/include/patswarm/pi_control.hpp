#pragma once

#include <algorithm>
#include <cmath>

#include "patswarm/diff_drive.hpp"
#include "patswarm/geometry.hpp"

namespace patswarm::robot {

/// One PI channel with a clamped integral.
struct PIState {
    double kp = 0.0;
    double ki = 0.0;
    double integral = 0.0;
    double integral_limit = 1.0;

    double update(double error, double dt) {
        integral = std::clamp(integral + error * dt, -integral_limit, integral_limit);
        return kp * error + ki * integral;
    }
    void reset() { integral = 0.0; }
};

struct WheelCommand {
    double v_left = 0.0;
    double v_right = 0.0;
};

inline constexpr double kArrivalRadius = 0.01; // m

/// Planar waypoint tracker: a PI on the wrapped bearing error steers, a PI
/// on the remaining distance drives. Forward speed is gated by cos of the
/// bearing error (never negative), so a waypoint behind the robot yields
/// rotation with almost no advance. Wheel saturation scales both wheels by
/// a common factor to preserve curvature. Inside the arrival radius both
/// integrals reset and the command is zero.
inline WheelCommand pi_waypoint(const Pose& pose, const Vec3& waypoint, PIState& heading,
                                PIState& speed, const DiffDriveParams& params, double dt,
                                double arrival_radius = kArrivalRadius,
                                double speed_cap = -1.0) {
    if (!(dt > 0.0)) throw std::invalid_argument("pi_waypoint requires dt > 0");
    if (speed_cap < 0.0) speed_cap = params.max_wheel_speed;

    double dx = waypoint.x - pose.position.x;
    double dy = waypoint.y - pose.position.y;
    double dist = std::hypot(dx, dy);
    if (dist <= arrival_radius) {
        heading.reset();
        speed.reset();
        return {0.0, 0.0};
    }

    double bearing_err = wrap_pi(std::atan2(dy, dx) - pose.yaw);
    double omega = heading.update(bearing_err, dt);
    double v = speed.update(dist, dt);
    v = std::clamp(v, 0.0, speed_cap);
    v *= std::max(0.0, std::cos(bearing_err));

    double half_base = 0.5 * params.wheel_base;
    WheelCommand cmd{v - omega * half_base, v + omega * half_base};
    double peak = std::max(std::abs(cmd.v_left), std::abs(cmd.v_right));
    if (peak > params.max_wheel_speed) {
        double scale = params.max_wheel_speed / peak;
        cmd.v_left *= scale;
        cmd.v_right *= scale;
    }
    return cmd;
}

} // namespace patswarm::robot
