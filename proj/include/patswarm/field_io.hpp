#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdio>
#include <ostream>
#include <string>

#include "patswarm/field.hpp"

namespace patswarm::acoustics {

namespace detail {
inline std::string fmt_g9(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.9g", v);
    return buf;
}
} // namespace detail

/// CSV rows "x,y,z,re,im,abs", one per sample, row-major (axis_v outer,
/// axis_u inner). %.9g keeps the files byte-stable for a given build.
inline void write_field_csv(const FieldGrid& grid, std::ostream& out) {
    out << "x,y,z,re,im,abs\n";
    for (int r = 0; r < grid.spec.nv; ++r) {
        for (int c = 0; c < grid.spec.nu; ++c) {
            Vec3 p = grid.point_at(r, c);
            const Complex& v = grid.at(r, c);
            out << detail::fmt_g9(p.x) << ',' << detail::fmt_g9(p.y) << ',' << detail::fmt_g9(p.z)
                << ',' << detail::fmt_g9(v.real()) << ',' << detail::fmt_g9(v.imag()) << ','
                << detail::fmt_g9(std::abs(v)) << '\n';
        }
    }
}

/// ASCII PGM (P2, maxval 65535) of |p| normalized to the grid maximum.
/// An all-zero grid renders as all-zero pixels.
inline void write_field_pgm(const FieldGrid& grid, std::ostream& out) {
    double peak = 0.0;
    for (const Complex& v : grid.samples) peak = std::max(peak, std::abs(v));

    out << "P2\n" << grid.spec.nu << ' ' << grid.spec.nv << "\n65535\n";
    for (int r = 0; r < grid.spec.nv; ++r) {
        for (int c = 0; c < grid.spec.nu; ++c) {
            long pixel = 0;
            if (peak > 0.0)
                pixel = std::lround(std::abs(grid.at(r, c)) / peak * 65535.0);
            out << pixel << (c + 1 == grid.spec.nu ? '\n' : ' ');
        }
    }
}

} // namespace patswarm::acoustics
