#pragma once

#include <cstddef>
#include <stdexcept>
#include <vector>

#include "patswarm/geometry.hpp"

namespace patswarm::acoustics {

/// Circular piston source. reference_pressure is the pressure amplitude (Pa)
/// produced on axis at the 1 m reference distance under full drive.
struct TransducerElement {
    Vec3 position{};                  // world, m
    Vec3 normal{0.0, 0.0, 1.0};       // unit
    double piston_radius = 4.5e-3;    // m
    double reference_pressure = 1.0;  // Pa at 1 m
};

/// Rectangular grid of identical elements rigidly attached to a board pose.
struct PhasedArrayModel {
    int rows = 0;
    int cols = 0;
    double pitch = 0.0; // m, centre-to-centre
    Pose board_pose{};
    std::vector<TransducerElement> elements; // row-major, row*cols + col

    std::size_t size() const { return elements.size(); }
    /// Board edge length along the element grid, m.
    double footprint_x() const { return cols * pitch; }
    double footprint_y() const { return rows * pitch; }
};

/// Per-element excitation. phases in [0, 2*pi), amplitudes in [0, 1].
struct DriveState {
    std::vector<double> phases;
    std::vector<double> amplitudes;

    std::size_t size() const { return phases.size(); }
};

inline DriveState uniform_drive(std::size_t n, double phase = 0.0, double amplitude = 1.0) {
    DriveState d;
    d.phases.assign(n, wrap_two_pi(phase));
    d.amplitudes.assign(n, amplitude);
    return d;
}

/// Grid construction. Element (r, c) sits at local
/// ((c - (cols-1)/2) * pitch, (r - (rows-1)/2) * pitch, 0) and is carried to
/// world coordinates by the pose; every element inherits the board normal.
inline PhasedArrayModel build_array(int rows, int cols, double pitch, const Pose& pose,
                                    const TransducerElement& element_template) {
    if (rows < 1 || cols < 1) throw std::invalid_argument("array needs at least one row and column");
    if (!(pitch > 0.0)) throw std::invalid_argument("array pitch must be positive");
    if (!(element_template.piston_radius > 0.0))
        throw std::invalid_argument("piston radius must be positive");
    double nn = element_template.normal.norm();
    if (std::abs(nn - 1.0) > 1e-9)
        throw std::invalid_argument("element template normal must be unit length");

    PhasedArrayModel a;
    a.rows = rows;
    a.cols = cols;
    a.pitch = pitch;
    a.board_pose = pose;
    a.elements.reserve(static_cast<std::size_t>(rows) * cols);

    const double cx = (cols - 1) / 2.0;
    const double cy = (rows - 1) / 2.0;
    const Vec3 world_normal = pose.normal();
    for (int r = 0; r < rows; ++r) {
        for (int c = 0; c < cols; ++c) {
            TransducerElement e = element_template;
            e.position = pose.to_world_point({(c - cx) * pitch, (r - cy) * pitch, 0.0});
            e.normal = world_normal;
            a.elements.push_back(e);
        }
    }
    return a;
}

/// An array together with its excitation; the unit the field evaluators accept.
struct DrivenArray {
    PhasedArrayModel model;
    DriveState drive;
};

inline void check_drive_matches(const PhasedArrayModel& model, const DriveState& drive) {
    if (drive.phases.size() != model.size() || drive.amplitudes.size() != model.size())
        throw std::invalid_argument("drive state length does not match element count");
}

} // namespace patswarm::acoustics
