#pragma once

#include <cmath>
#include <stdexcept>

#include "patswarm/geometry.hpp"

namespace patswarm::robot {

struct DiffDriveParams {
    double wheel_base = 0.08;      // m
    double max_wheel_speed = 0.15; // m/s
    double body_radius = 0.04;     // m, collision disc
};

struct DiffDriveState {
    Pose pose{};          // pitch stays 0; yaw in [-pi, pi)
    double v_left = 0.0;  // m/s
    double v_right = 0.0; // m/s
};

/// Exact unicycle integration over one step: wheels define v = (vl+vr)/2 and
/// omega = (vr-vl)/base; straight-line motion below |omega| = 1e-9, otherwise
/// the closed-form circular arc. Exactness makes the step composable: two
/// half steps equal one full step.
inline DiffDriveState dd_step(const DiffDriveState& s, const DiffDriveParams& p, double dt) {
    if (!(dt > 0.0)) throw std::invalid_argument("dd_step requires dt > 0");
    DiffDriveState n = s;
    n.v_left = std::clamp(s.v_left, -p.max_wheel_speed, p.max_wheel_speed);
    n.v_right = std::clamp(s.v_right, -p.max_wheel_speed, p.max_wheel_speed);

    double v = 0.5 * (n.v_left + n.v_right);
    double omega = (n.v_right - n.v_left) / p.wheel_base;
    double yaw0 = s.pose.yaw;

    if (std::abs(omega) < 1e-9) {
        n.pose.position.x += v * std::cos(yaw0) * dt;
        n.pose.position.y += v * std::sin(yaw0) * dt;
    } else {
        // Chord form of the arc. The textbook r*(sin(yaw1) - sin(yaw0)) with
        // r = v/omega cancels catastrophically for small omega; the half-angle
        // identity keeps every intermediate at displacement scale, which is
        // what makes half steps compose to within rounding of a full step.
        double half = 0.5 * omega * dt;
        double chord = v * dt * (std::sin(half) / half);
        n.pose.position.x += chord * std::cos(yaw0 + half);
        n.pose.position.y += chord * std::sin(yaw0 + half);
        n.pose.yaw = yaw0 + omega * dt;
    }
    n.pose.yaw = wrap_pi(n.pose.yaw);
    return n;
}

} // namespace patswarm::robot
