#pragma once

#include <complex>
#include <cstddef>
#include <limits>
#include <span>
#include <stdexcept>
#include <vector>

#include "patswarm/array.hpp"
#include "patswarm/errors.hpp"
#include "patswarm/field.hpp"
#include "patswarm/medium.hpp"

namespace patswarm::acoustics {

/// Single-focus drive: phase-conjugate of the propagation delay, so every
/// element contribution arrives in phase at the target. Amplitudes full on.
inline DriveState focus_phases(const PhasedArrayModel& array, const Vec3& target,
                               const Medium& medium) {
    double k = medium.wavenumber();
    DriveState d;
    d.phases.reserve(array.size());
    d.amplitudes.assign(array.size(), 1.0);
    for (const TransducerElement& e : array.elements) {
        double dist = (target - e.position).norm();
        if (dist < kNearFieldGuard)
            throw near_field_error("focus target within near-field guard of an element");
        d.phases.push_back(wrap_two_pi(-k * dist));
    }
    return d;
}

/// Result of the iterative multi-point solver. drives holds one phase-only
/// DriveState per input array (amplitudes all 1). achieved are the complex
/// pressures at the targets under the returned drives. residual_history[i]
/// is the best residual seen up to iteration i, hence non-increasing.
struct MultiPointSolution {
    std::vector<DriveState> drives;
    std::vector<Complex> achieved;
    std::vector<double> residual_history;
    double residual = 0.0;
};

/// Uniformity residual at the targets: max|p| / min|p| - 1.
inline double pressure_residual(std::span<const Complex> achieved) {
    double lo = std::numeric_limits<double>::infinity();
    double hi = 0.0;
    for (const Complex& p : achieved) {
        double m = std::abs(p);
        if (m < lo) lo = m;
        if (m > hi) hi = m;
    }
    if (!(lo > 0.0)) return std::numeric_limits<double>::infinity();
    return hi / lo - 1.0;
}

/// Phase retrieval over one or more arrays for 1..32 target points.
///
/// Gerchberg-Saxton style alternating projection on the target constraint
/// (equal amplitudes, free phases) and the element constraint (unit
/// amplitude per element, free phases). The best iterate by residual is
/// retained and returned, so adding iterations never worsens the answer.
/// With a single target the first iterate is already the phase-conjugate
/// optimum and survives as the best.
inline MultiPointSolution multipoint_solve(std::span<const PhasedArrayModel> arrays,
                                           std::span<const Vec3> targets, int iterations,
                                           const Medium& medium) {
    if (arrays.empty()) throw std::invalid_argument("multipoint_solve needs at least one array");
    if (targets.empty() || targets.size() > 32)
        throw domain_error("multipoint_solve accepts 1..32 targets");
    if (iterations < 1) throw std::invalid_argument("multipoint_solve needs at least one iteration");
    for (std::size_t i = 0; i < targets.size(); ++i)
        for (std::size_t j = i + 1; j < targets.size(); ++j)
            if ((targets[i] - targets[j]).norm() < 1e-9)
                throw domain_error("duplicate target points");

    // Flatten the element list and build the m x n transfer matrix row by row.
    std::vector<const TransducerElement*> elems;
    for (const PhasedArrayModel& a : arrays)
        for (const TransducerElement& e : a.elements) elems.push_back(&e);
    const std::size_t n = elems.size();
    const std::size_t m = targets.size();
    if (n == 0) throw std::invalid_argument("arrays contain no elements");

    std::vector<Complex> F(m * n);
    for (std::size_t t = 0; t < m; ++t)
        for (std::size_t j = 0; j < n; ++j)
            F[t * n + j] = piston_pressure(*elems[j], 0.0, 1.0, targets[t], medium);

    auto forward = [&](const std::vector<Complex>& x, std::vector<Complex>& p) {
        for (std::size_t t = 0; t < m; ++t) {
            Complex acc{0.0, 0.0};
            for (std::size_t j = 0; j < n; ++j) acc += F[t * n + j] * x[j];
            p[t] = acc;
        }
    };
    auto unit = [](Complex v) {
        double a = std::abs(v);
        return a > 0.0 ? v / a : Complex{1.0, 0.0};
    };

    // Back-propagate unit target phasors for the initial element phases.
    std::vector<Complex> x(n), p(m), target_phasor(m, Complex{1.0, 0.0});
    for (std::size_t j = 0; j < n; ++j) {
        Complex acc{0.0, 0.0};
        for (std::size_t t = 0; t < m; ++t) acc += std::conj(F[t * n + j]) * target_phasor[t];
        x[j] = unit(acc);
    }

    MultiPointSolution sol;
    sol.residual_history.reserve(iterations);
    std::vector<Complex> best_x = x;
    std::vector<Complex> best_p(m);
    double best_r = std::numeric_limits<double>::infinity();

    for (int it = 0; it < iterations; ++it) {
        forward(x, p);
        double r = pressure_residual(p);
        if (r < best_r) {
            best_r = r;
            best_x = x;
            best_p = p;
        }
        sol.residual_history.push_back(best_r);

        // Target projection: keep phases, reset amplitudes to the common goal.
        for (std::size_t t = 0; t < m; ++t) target_phasor[t] = unit(p[t]);
        // Element projection: back-propagate and renormalize per element.
        for (std::size_t j = 0; j < n; ++j) {
            Complex acc{0.0, 0.0};
            for (std::size_t t = 0; t < m; ++t) acc += std::conj(F[t * n + j]) * target_phasor[t];
            x[j] = unit(acc);
        }
    }

    sol.residual = best_r;
    sol.achieved = best_p;
    std::size_t offset = 0;
    for (const PhasedArrayModel& a : arrays) {
        DriveState d;
        d.phases.reserve(a.size());
        d.amplitudes.assign(a.size(), 1.0);
        for (std::size_t j = 0; j < a.size(); ++j)
            d.phases.push_back(wrap_two_pi(std::arg(best_x[offset + j])));
        offset += a.size();
        sol.drives.push_back(std::move(d));
    }
    return sol;
}

/// Standing-wave trap between two roughly opposed boards: both arrays focus
/// on the trap point and the second is offset by pi, which forces a pressure
/// node at the trap with antinodes a quarter wavelength to either side.
/// Rejects geometries whose normals are more than 30 degrees from
/// anti-parallel or whose trap is not in front of both boards.
inline std::pair<DriveState, DriveState> levitation_signature(const PhasedArrayModel& array_a,
                                                              const PhasedArrayModel& array_b,
                                                              const Vec3& trap,
                                                              const Medium& medium) {
    Vec3 na = array_a.board_pose.normal();
    Vec3 nb = array_b.board_pose.normal();
    double c = na.dot(nb);
    // anti-parallel is c = -1; allow a 30 degree cone around it
    if (c > -std::cos(deg_to_rad(30.0))) {
        throw domain_error("levitation_signature: board normals are " +
                           std::to_string(rad_to_deg(std::acos(std::max(-1.0, std::min(1.0, c))))) +
                           " deg apart; need within 30 deg of anti-parallel");
    }
    double fa = (trap - array_a.board_pose.position).dot(na);
    double fb = (trap - array_b.board_pose.position).dot(nb);
    if (!(fa > 0.0) || !(fb > 0.0))
        throw domain_error("levitation_signature: trap point is not in front of both boards");

    DriveState da = focus_phases(array_a, trap, medium);
    DriveState db = focus_phases(array_b, trap, medium);
    for (double& ph : db.phases) ph = wrap_two_pi(ph + kPi);
    return {std::move(da), std::move(db)};
}

} // namespace patswarm::acoustics
