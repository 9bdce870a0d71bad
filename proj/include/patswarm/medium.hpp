#pragma once

#include <stdexcept>

#include "patswarm/geometry.hpp"

namespace patswarm {

/// Homogeneous propagation medium for a fixed carrier frequency.
struct Medium {
    double speed_of_sound = 343.0; // m/s
    double frequency = 40000.0;    // Hz

    double wavenumber() const { return kTwoPi * frequency / speed_of_sound; }
    double wavelength() const { return speed_of_sound / frequency; }
};

inline Medium make_medium(double speed_of_sound, double frequency) {
    if (!(speed_of_sound > 0.0)) throw std::invalid_argument("speed of sound must be positive");
    if (!(frequency > 0.0)) throw std::invalid_argument("frequency must be positive");
    return Medium{speed_of_sound, frequency};
}

} // namespace patswarm
