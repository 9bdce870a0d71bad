#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

#include "patswarm/array.hpp"
#include "patswarm/errors.hpp"
#include "patswarm/medium.hpp"

namespace patswarm::acoustics {

using Complex = std::complex<double>;

/// Distance below which a field query is rejected rather than evaluated;
/// the far-field piston model diverges as 1/d.
inline constexpr double kNearFieldGuard = 1e-6; // m

/// Reference distance for the 1/d spreading law.
inline constexpr double kReferenceDistance = 1.0; // m

/// Far-field directivity of a baffled circular piston, D = 2*J1(x)/x with
/// x = k*a*sin(theta). D(0) = 1 by the series limit.
inline double piston_directivity(double ka_sin_theta) {
    double x = std::abs(ka_sin_theta);
    if (x < 1e-4) {
        // 2*J1(x)/x = 1 - x^2/8 + x^4/192 - ...
        double x2 = x * x;
        return 1.0 - x2 / 8.0 + x2 * x2 / 192.0;
    }
    return 2.0 * std::cyl_bessel_j(1, x) / x;
}

/// Complex pressure contribution of one element at a field point:
///   p = P0 * A * (d_ref / d) * D(theta) * exp(i * (k * d + phase))
/// Throws near_field_error when the point is within the guard distance.
inline Complex piston_pressure(const TransducerElement& e, double phase, double amplitude,
                               const Vec3& point, const Medium& medium) {
    Vec3 diff = point - e.position;
    double d = diff.norm();
    if (d < kNearFieldGuard)
        throw near_field_error("field point within near-field guard of an element");

    double cos_t = e.normal.dot(diff) / d;
    if (cos_t > 1.0) cos_t = 1.0;
    if (cos_t < -1.0) cos_t = -1.0;
    double sin_t = std::sqrt(1.0 - cos_t * cos_t);

    double k = medium.wavenumber();
    double mag = e.reference_pressure * amplitude * (kReferenceDistance / d) *
                 piston_directivity(k * e.piston_radius * sin_t);
    return std::polar(mag, k * d + phase);
}

/// Superposition over every element of every driven array.
inline Complex field_at(std::span<const DrivenArray> scene, const Vec3& point,
                        const Medium& medium) {
    Complex total{0.0, 0.0};
    for (const DrivenArray& da : scene) {
        check_drive_matches(da.model, da.drive);
        for (std::size_t j = 0; j < da.model.size(); ++j) {
            total += piston_pressure(da.model.elements[j], da.drive.phases[j],
                                     da.drive.amplitudes[j], point, medium);
        }
    }
    return total;
}

/// Planar sampling window: origin plus two orthonormal in-plane axes.
struct GridSpec {
    Vec3 origin{};
    Vec3 axis_u{1.0, 0.0, 0.0};
    Vec3 axis_v{0.0, 1.0, 0.0};
    double resolution = 1e-3; // m between samples
    int nu = 1;               // samples along axis_u
    int nv = 1;               // samples along axis_v
};

inline void validate_grid_spec(const GridSpec& g) {
    if (g.nu < 1 || g.nv < 1) throw std::invalid_argument("grid needs at least one sample per axis");
    if (!(g.resolution > 0.0)) throw std::invalid_argument("grid resolution must be positive");
    if (std::abs(g.axis_u.norm() - 1.0) > 1e-9 || std::abs(g.axis_v.norm() - 1.0) > 1e-9)
        throw std::invalid_argument("grid axes must be unit length");
    if (std::abs(g.axis_u.dot(g.axis_v)) > 1e-9)
        throw std::invalid_argument("grid axes must be orthogonal");
}

/// Row-major complex samples over a GridSpec; row index advances along axis_v.
struct FieldGrid {
    GridSpec spec;
    std::vector<Complex> samples; // row-major, row * nu + col

    Vec3 point_at(int row, int col) const {
        return spec.origin + spec.axis_u * (col * spec.resolution) +
               spec.axis_v * (row * spec.resolution);
    }
    const Complex& at(int row, int col) const {
        return samples[static_cast<std::size_t>(row) * spec.nu + col];
    }
};

inline FieldGrid sample_grid(std::span<const DrivenArray> scene, const GridSpec& spec,
                             const Medium& medium) {
    validate_grid_spec(spec);
    FieldGrid g;
    g.spec = spec;
    g.samples.reserve(static_cast<std::size_t>(spec.nu) * spec.nv);
    for (int r = 0; r < spec.nv; ++r)
        for (int c = 0; c < spec.nu; ++c)
            g.samples.push_back(field_at(scene, g.point_at(r, c), medium));
    return g;
}

/// Magnitudes sampled evenly on a segment, start and end inclusive.
struct LineProfile {
    Vec3 start{};
    Vec3 end{};
    std::vector<double> magnitudes;

    double length() const { return (end - start).norm(); }
    double spacing() const {
        return magnitudes.size() > 1 ? length() / static_cast<double>(magnitudes.size() - 1) : 0.0;
    }
    /// Distance along the segment of sample i.
    double position(double i) const { return i * spacing(); }
    Vec3 point_at(double i) const {
        Vec3 dir = (end - start) / length();
        return start + dir * position(i);
    }
};

inline LineProfile sample_line(std::span<const DrivenArray> scene, const Vec3& start,
                               const Vec3& end, int samples, const Medium& medium) {
    if (samples < 3) throw std::invalid_argument("line profile needs at least 3 samples");
    if ((end - start).norm() < kNearFieldGuard)
        throw std::invalid_argument("line profile endpoints coincide");
    LineProfile p;
    p.start = start;
    p.end = end;
    p.magnitudes.reserve(samples);
    for (int i = 0; i < samples; ++i) {
        double f = static_cast<double>(i) / (samples - 1);
        Vec3 pt = start + (end - start) * f;
        p.magnitudes.push_back(std::abs(field_at(scene, pt, medium)));
    }
    return p;
}

} // namespace patswarm::acoustics
