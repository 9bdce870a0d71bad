#pragma once

#include <cmath>
#include <stdexcept>

#include "patswarm/geometry.hpp"

namespace patswarm::acoustics {

/// Amplitude-modulation envelope in [1 - depth, 1]:
///   env(t) = 1 - depth * (1 - sin(2*pi*f*t)) / 2
/// depth 0 disables modulation, depth 1 swings the drive fully off at the
/// trough. Used to make a carrier tactile or audible.
inline double am_envelope(double mod_frequency, double depth, double t) {
    if (!(mod_frequency >= 0.0)) throw std::invalid_argument("modulation frequency must be >= 0");
    if (!(depth >= 0.0 && depth <= 1.0)) throw std::invalid_argument("modulation depth must be in [0, 1]");
    return 1.0 - depth * (1.0 - std::sin(kTwoPi * mod_frequency * t)) / 2.0;
}

} // namespace patswarm::acoustics
