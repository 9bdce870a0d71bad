#pragma once

#include <stdexcept>

namespace patswarm::robot {

// Carousel bead dispenser: four pockets per revolution on a 2048 step/rev
// geared stepper, so one bead drops every quarter turn of 512 steps.
inline constexpr long kDispenserStepsPerRev = 2048;
inline constexpr int kDispenserBeadsPerRev = 4;
inline constexpr long kDispenserStepsPerBead = kDispenserStepsPerRev / kDispenserBeadsPerRev;
inline constexpr double kDispenserStepsPerSec = 5.0 * 2048.0 / 60.0;

struct DispenserModel {
    int hopper_count = 20; // beads remaining
    int emitted = 0;       // beads dropped so far
    long total_steps = 0;  // cumulative motor steps
};

struct DispenseResult {
    long steps = 0; // motor steps commanded
    int beads = 0;  // beads actually emitted
};

/// Advance the carousel far enough to emit the requested beads, capped by
/// hopper contents. Bead count conservation: hopper + emitted is invariant.
inline DispenseResult dispenser_advance(DispenserModel& m, int beads_requested) {
    if (beads_requested < 0) throw std::invalid_argument("bead request must be >= 0");
    int n = std::min(beads_requested, m.hopper_count);
    DispenseResult r;
    r.beads = n;
    r.steps = static_cast<long>(n) * kDispenserStepsPerBead;
    m.hopper_count -= n;
    m.emitted += n;
    m.total_steps += r.steps;
    return r;
}

/// Time-resolved dispense: the carousel turns at the motor rate and a bead
/// leaves the chute as each 512-step quarter turn completes.
class DispenseJob {
public:
    DispenseJob() = default;

    bool active() const { return beads_pending_ > 0; }

    /// Queue beads for emission, bounded by the hopper.
    void request(DispenserModel& m, int beads) {
        if (beads < 0) throw std::invalid_argument("bead request must be >= 0");
        int n = std::min(beads, m.hopper_count - beads_pending_);
        if (n > 0) beads_pending_ += n;
    }

    /// Returns beads emitted during this dt.
    int advance(DispenserModel& m, double dt) {
        if (!active() || !(dt > 0.0)) return 0;
        step_accum_ += kDispenserStepsPerSec * dt;
        int emitted = 0;
        while (beads_pending_ > 0 && step_accum_ >= static_cast<double>(kDispenserStepsPerBead)) {
            step_accum_ -= static_cast<double>(kDispenserStepsPerBead);
            m.total_steps += kDispenserStepsPerBead;
            m.hopper_count -= 1;
            m.emitted += 1;
            beads_pending_ -= 1;
            emitted += 1;
        }
        if (beads_pending_ == 0) step_accum_ = 0.0;
        return emitted;
    }

private:
    int beads_pending_ = 0;
    double step_accum_ = 0.0;
};

} // namespace patswarm::robot
