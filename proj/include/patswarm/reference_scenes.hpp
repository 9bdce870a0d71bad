#pragma once

#include <utility>
#include <vector>

#include "patswarm/array.hpp"
#include "patswarm/field.hpp"
#include "patswarm/medium.hpp"
#include "patswarm/solvers.hpp"

namespace patswarm::acoustics {

// Reference hardware: 40 kHz carrier in air, 8x8 boards at 10.5 mm pitch
// (extreme element centres span 73.5 mm), 9 mm piston elements.
inline Medium reference_medium() { return Medium{343.0, 40000.0}; }

inline constexpr int kReferenceRows = 8;
inline constexpr int kReferenceCols = 8;
inline constexpr double kReferencePitch = 10.5e-3;
inline constexpr double kReferencePistonRadius = 4.5e-3;

/// Calibration anchor: a single flat board focused 50 mm on-axis must
/// produce this pressure at the focus.
inline constexpr double kCalibrationPressure = 4469.90; // Pa
inline constexpr double kCalibrationRange = 0.05;       // m

inline TransducerElement reference_element(double reference_pressure = 1.0) {
    TransducerElement e;
    e.piston_radius = kReferencePistonRadius;
    e.reference_pressure = reference_pressure;
    return e;
}

inline PhasedArrayModel reference_board(const Pose& pose, double reference_pressure = 1.0) {
    return build_array(kReferenceRows, kReferenceCols, kReferencePitch, pose,
                       reference_element(reference_pressure));
}

/// Per-element source strength that pins the single-board focus to the
/// calibration pressure. Pure function of the medium; the result is the
/// calibration pressure divided by the unit-strength focal sum.
inline double calibrated_reference_pressure(const Medium& medium = reference_medium()) {
    PhasedArrayModel board = reference_board(Pose{}, 1.0);
    Vec3 focus{0.0, 0.0, kCalibrationRange};
    DrivenArray da{board, focus_phases(board, focus, medium)};
    double unit_peak = std::abs(field_at({&da, 1}, focus, medium));
    return kCalibrationPressure / unit_peak;
}

/// A driven scene plus the probe point its headline pressure is read at.
struct ReferenceScene {
    std::vector<DrivenArray> arrays;
    Vec3 probe{};
};

/// Single board, flat, focused kCalibrationRange above its centre. The
/// headline number is |p| at the focus.
inline ReferenceScene single_focus_scene(const Medium& medium = reference_medium()) {
    double p0 = calibrated_reference_pressure(medium);
    PhasedArrayModel board = reference_board(Pose{}, p0);
    Vec3 focus{0.0, 0.0, kCalibrationRange};
    return {{{board, focus_phases(board, focus, medium)}}, focus};
}

/// Two boards tilted 45 degrees facing each other from 0.1 m out, jointly
/// focused on the midpoint at board-centre height. Each board therefore
/// works at double the single-board range and 45 degrees off its axis,
/// which costs more than the second board adds: the shared focus stays
/// below the single-board focus. Headline number is |p| at the focus.
inline ReferenceScene shared_focus_scene(const Medium& medium = reference_medium()) {
    double p0 = calibrated_reference_pressure(medium);
    Vec3 focus{0.0, 0.0, 0.0};
    PhasedArrayModel a = reference_board(make_pose({-2.0 * kCalibrationRange, 0.0, 0.0}, 0.0, kPi / 4.0), p0);
    PhasedArrayModel b = reference_board(make_pose({2.0 * kCalibrationRange, 0.0, 0.0}, kPi, kPi / 4.0), p0);
    return {{{a, focus_phases(a, focus, medium)}, {b, focus_phases(b, focus, medium)}}, focus};
}

/// Two vertical boards face to face 0.1 m apart driving the levitation
/// signature at the midpoint trap. The headline number is the antinode
/// peak next to the trap (the trap itself is a null), read as the maximum
/// along the board axis within 1.5 wavelengths of the trap.
inline ReferenceScene opposed_trap_scene(const Medium& medium = reference_medium()) {
    double p0 = calibrated_reference_pressure(medium);
    Vec3 trap{0.0, 0.0, 0.0};
    PhasedArrayModel a = reference_board(make_pose({-kCalibrationRange, 0.0, 0.0}, 0.0, kPi / 2.0), p0);
    PhasedArrayModel b = reference_board(make_pose({kCalibrationRange, 0.0, 0.0}, kPi, kPi / 2.0), p0);
    auto [da, db] = levitation_signature(a, b, trap, medium);
    return {{{a, std::move(da)}, {b, std::move(db)}}, trap};
}

/// Antinode peak along the standing-wave axis near the trap. half_span < 0
/// selects the default window of 1.5 wavelengths.
inline double axial_peak(const ReferenceScene& scene, const Medium& medium,
                         double half_span = -1.0, int samples = 1201) {
    if (half_span < 0.0) half_span = 1.5 * medium.wavelength();
    Vec3 axis{1.0, 0.0, 0.0};
    LineProfile prof = sample_line(scene.arrays, scene.probe - axis * half_span,
                                   scene.probe + axis * half_span, samples, medium);
    double peak = 0.0;
    for (double v : prof.magnitudes) peak = std::max(peak, v);
    return peak;
}

} // namespace patswarm::acoustics
