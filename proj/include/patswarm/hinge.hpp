#pragma once

#include <array>
#include <cmath>
#include <stdexcept>

#include "patswarm/rng.hpp"

namespace patswarm::robot {

// Board hinge with three detent positions. The linkage is nonlinear: the
// first 45 degrees take 1024 motor steps, the second 45 take 2048.
inline constexpr long kHingeStepsTo45 = 1024;
inline constexpr long kHingeStepsTo90 = 3072;
inline constexpr double kHingeMotorStepsPerSec = 5.0 * 2048.0 / 60.0; // 5 rpm, 2048 steps/rev

inline long hinge_steps_for_angle(int angle_deg) {
    switch (angle_deg) {
        case 0: return 0;
        case 45: return kHingeStepsTo45;
        case 90: return kHingeStepsTo90;
    }
    throw std::invalid_argument("hinge angle must be 0, 45 or 90 degrees");
}

/// Signed motor steps to travel between two detent angles. Reverse moves are
/// exact negations of forward moves.
inline long hinge_plan(int from_deg, int to_deg) {
    return hinge_steps_for_angle(to_deg) - hinge_steps_for_angle(from_deg);
}

/// Piecewise-linear step-to-angle map, inverse of the plan table.
inline double hinge_angle_from_steps(double steps) {
    if (steps < 0.0) steps = 0.0;
    if (steps > kHingeStepsTo90) steps = kHingeStepsTo90;
    if (steps <= kHingeStepsTo45) return 45.0 * steps / kHingeStepsTo45;
    return 45.0 + 45.0 * (steps - kHingeStepsTo45) / (kHingeStepsTo90 - kHingeStepsTo45);
}

/// Small planar disturbance applied to the carrying robot when a hinge move
/// settles; vertical moves shake the chassis hardest.
struct HingeDisturbance {
    double dx = 0.0;
    double dy = 0.0;
    double dyaw = 0.0; // rad
};

/// Stepper-driven hinge: advances toward the commanded detent at the motor
/// rate, reports the interpolated board angle on the way.
class HingeModel {
public:
    // per-detent settle noise, indexed 0/45/90; defaults chosen so the
    // vertical detent is the least precise position
    struct NoiseTable {
        std::array<double, 3> sigma_pos = {0.001, 0.008, 0.029};     // m
        std::array<double, 3> sigma_yaw_deg = {0.38, 0.68, 0.55};    // deg
    };

    HingeModel() = default;
    explicit HingeModel(const NoiseTable& noise) : noise_(noise) {}

    double angle_deg() const { return hinge_angle_from_steps(position_steps_); }
    long position_steps() const { return std::lround(position_steps_); }
    int target_angle_deg() const { return target_angle_deg_; }
    bool settled() const { return std::abs(position_steps_ - target_steps_) < 0.5; }

    void command(int angle_deg) {
        target_steps_ = static_cast<double>(hinge_steps_for_angle(angle_deg));
        target_angle_deg_ = angle_deg;
    }

    /// Advance the motor for dt seconds. Returns a disturbance sample on the
    /// tick the move settles (zero-valued when noise is disabled).
    HingeDisturbance advance(double dt, Rng& rng) {
        HingeDisturbance d;
        if (settled()) return d;
        double span = target_steps_ - position_steps_;
        double travel = kHingeMotorStepsPerSec * dt;
        if (std::abs(span) <= travel) {
            position_steps_ = target_steps_;
            int idx = target_angle_deg_ == 0 ? 0 : (target_angle_deg_ == 45 ? 1 : 2);
            double sp = noise_.sigma_pos[idx];
            double sy = deg_to_rad(noise_.sigma_yaw_deg[idx]);
            if (sp > 0.0) {
                d.dx = rng.gaussian(0.0, sp);
                d.dy = rng.gaussian(0.0, sp);
            }
            if (sy > 0.0) d.dyaw = rng.gaussian(0.0, sy);
        } else {
            position_steps_ += span > 0.0 ? travel : -travel;
        }
        return d;
    }

private:
    double position_steps_ = 0.0;
    double target_steps_ = 0.0;
    int target_angle_deg_ = 0;
    NoiseTable noise_{};
};

} // namespace patswarm::robot
