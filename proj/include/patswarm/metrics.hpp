#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

#include "patswarm/errors.hpp"
#include "patswarm/field.hpp"

namespace patswarm::acoustics {

/// Pressure nodes along a line profile: strict local minima whose magnitude
/// is below 10% of the profile maximum. Positions (distance from the profile
/// start, m) are refined by parabolic interpolation through the minimum and
/// its neighbours. Endpoints cannot qualify.
inline std::vector<double> find_nodes(const LineProfile& profile) {
    const std::vector<double>& s = profile.magnitudes;
    std::vector<double> nodes;
    if (s.size() < 3) return nodes;

    double peak = 0.0;
    for (double v : s) peak = std::max(peak, v);
    if (!(peak > 0.0)) return nodes;
    const double threshold = 0.1 * peak;

    for (std::size_t i = 1; i + 1 < s.size(); ++i) {
        if (!(s[i] < s[i - 1] && s[i] < s[i + 1])) continue;
        if (!(s[i] < threshold)) continue;
        double denom = s[i - 1] - 2.0 * s[i] + s[i + 1];
        double delta = denom > 0.0 ? 0.5 * (s[i - 1] - s[i + 1]) / denom : 0.0;
        // guard the vertex to the sample's own cell
        if (delta > 0.5) delta = 0.5;
        if (delta < -0.5) delta = -0.5;
        nodes.push_back(profile.position(static_cast<double>(i) + delta));
    }
    return nodes;
}

/// Full width at half maximum of a single-peaked profile. The crossing on
/// each side of the peak is located by linear interpolation between the
/// bracketing samples. Throws truncated_profile_error when a flank never
/// drops below half maximum inside the profile, and domain_error when the
/// peak sits on an endpoint.
inline double fwhm(const LineProfile& profile) {
    const std::vector<double>& s = profile.magnitudes;
    if (s.size() < 3) throw std::invalid_argument("fwhm needs at least 3 samples");

    std::size_t peak_idx = 0;
    for (std::size_t i = 1; i < s.size(); ++i)
        if (s[i] > s[peak_idx]) peak_idx = i;
    if (peak_idx == 0 || peak_idx + 1 == s.size())
        throw domain_error("fwhm: profile maximum lies on an endpoint");

    const double half = s[peak_idx] / 2.0;

    auto crossing = [&](bool left) -> double {
        std::size_t i = peak_idx;
        while (true) {
            std::size_t next = left ? i - 1 : i + 1;
            if (s[next] < half) {
                // interpolate between samples i (>= half) and next (< half)
                double f = (s[i] - half) / (s[i] - s[next]);
                double pos = static_cast<double>(i) + (left ? -f : f);
                return profile.position(pos);
            }
            i = next;
            if ((left && i == 0) || (!left && i + 1 == s.size()))
                throw truncated_profile_error("fwhm: profile truncated before half maximum");
        }
    };

    double xl = crossing(true);
    double xr = crossing(false);
    return xr - xl;
}

} // namespace patswarm::acoustics
