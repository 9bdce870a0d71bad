#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <vector>

#include "patswarm/control.hpp"
#include "patswarm/diff_drive.hpp"
#include "patswarm/dispenser.hpp"
#include "patswarm/hinge.hpp"
#include "patswarm/ir_avoid.hpp"
#include "patswarm/network.hpp"
#include "patswarm/pi_control.hpp"
#include "patswarm/rng.hpp"
#include "patswarm/wire.hpp"

namespace patswarm::sim {

struct TrackerConfig {
    double sigma_pos_m = 0.0;
    double sigma_yaw_deg = 0.0;
    double period_s = 0.01; // 100 Hz publish rate
};

struct ClassifierThresholds {
    double max_abs_dz_cm = 0.43;
    double max_abs_dpsi_deg = 1.05;
};

/// Drop-outcome model: a bead is captured iff both the planar drop error and
/// the dispenser heading error at release time are inside the window. The
/// window is fitted to observed outcomes, not derived from trap physics.
inline bool levitation_classifier(double delta_z_cm, double delta_psi_deg,
                                  const ClassifierThresholds& th = {}) {
    return std::abs(delta_z_cm) <= th.max_abs_dz_cm &&
           std::abs(delta_psi_deg) <= th.max_abs_dpsi_deg;
}

inline constexpr double kBeadFallSpeed = 0.5;    // m/s, constant descent
inline constexpr double kChuteForward = 0.08;    // m, chute exit ahead of the axle
inline constexpr double kChuteDropHeight = 0.05; // m, release height above the trap plane

// in-place yaw alignment once the waypoint controller has parked
inline constexpr double kYawTrimGain = 2.0;
inline constexpr double kYawTrimDeadband = 0.005; // rad
inline constexpr double kYawTrimMaxOmega = 2.5;   // rad/s

enum class BeadStatus { Falling, AtRest, Levitated };

struct Bead {
    Vec3 position{};
    BeadStatus status = BeadStatus::Falling;
    double delta_z_cm = 0.0;   // planar drop error along the dispenser heading
    double delta_psi_deg = 0.0; // dispenser heading error at release
    bool levitated = false;     // valid once classified
    bool classified = false;
};

struct MoveGoal {
    Vec3 point{};
    double yaw = 0.0;
    double speed = 0.0; // m/s cap from the wire
};

/// One robot plus its on-board client controller. The client runs on the
/// true pose; only the tracker output is noisy.
struct RobotUnit {
    std::uint8_t id = 0;
    control::BotKind kind = control::BotKind::Acousto;
    robot::DiffDriveState dd;
    robot::HingeModel hinge;
    robot::DispenserModel dispenser;
    robot::DispenseJob job;

    proto::AcousticFrame frame;
    bool has_frame = false;

    std::optional<MoveGoal> goal;
    robot::PIState pi_heading{2.0, 0.1};
    robot::PIState pi_speed{4.0, 0.4};

    std::uint16_t last_seq = 0; // last accepted inbound sequence
    std::uint16_t out_seq = 0;  // outbound (acks, pose reports)
};

struct WorldConfig {
    double dt = 0.01;
    robot::DiffDriveParams drive;
    robot::Workspace bounds;
    TrackerConfig tracker;
    ClassifierThresholds classifier;
    Vec3 trap{};                   // classification reference for dropped beads
    double board_mount_height = 0.0;
    // client parking radius; must be well under the bead capture window so a
    // parked dispenser's chute lands inside it
    double arrival_radius = 0.003;
    std::optional<double> forced_delta_z_cm;   // debug override, recorded as measured
    std::optional<double> forced_delta_psi_deg;
};

struct WorldCounters {
    std::uint64_t cmd_applied = 0;
    std::uint64_t cmd_stale = 0;    // rejected by the sequence policy
    std::uint64_t cmd_rejected = 0; // valid frame, unusable content (e.g. off-detent hinge)
    std::uint64_t decode_failures = 0;
};

struct World {
    double clock = 0.0;
    std::uint64_t tick = 0;
    std::vector<RobotUnit> robots; // kept sorted by id
    std::vector<Bead> beads;
    WorldCounters counters;

    RobotUnit* find(std::uint8_t id) {
        for (RobotUnit& u : robots)
            if (u.id == id) return &u;
        return nullptr;
    }
    const RobotUnit* find(std::uint8_t id) const {
        for (const RobotUnit& u : robots)
            if (u.id == id) return &u;
        return nullptr;
    }
};

inline void add_robot(World& w, std::uint8_t id, control::BotKind kind, const Pose& pose) {
    if (w.find(id)) throw config_error("duplicate robot id " + std::to_string(id));
    RobotUnit u;
    u.id = id;
    u.kind = kind;
    u.dd.pose = pose;
    w.robots.push_back(u);
    std::sort(w.robots.begin(), w.robots.end(),
              [](const RobotUnit& a, const RobotUnit& b) { return a.id < b.id; });
}

namespace detail {

inline void send_ack(RobotUnit& u, std::uint16_t acked, std::uint8_t status, Link& uplink,
                     double now, Rng& rng) {
    proto::Ack ack;
    ack.acked_seq = acked;
    ack.status = status;
    uplink.send(0, proto::encode(ack, u.id, ++u.out_seq), now, rng);
}

/// Newest-accepted-wins command application; stale sequence numbers are
/// acked with the rejection status and otherwise ignored.
inline void apply_datagram(World& w, const Datagram& dg, Link& uplink, Rng& rng) {
    proto::DecodeResult res = proto::decode(dg.bytes);
    if (!res.ok()) {
        ++w.counters.decode_failures;
        return;
    }
    const proto::Decoded& d = *res.frame;
    RobotUnit* unit = w.find(d.bot_id);
    if (!unit) {
        ++w.counters.decode_failures;
        return;
    }
    if (!proto::accept_sequence(unit->last_seq, d.seq)) {
        ++w.counters.cmd_stale;
        send_ack(*unit, d.seq, 1, uplink, w.clock, rng);
        return;
    }
    unit->last_seq = d.seq;

    bool applied = true;
    if (const auto* m = std::get_if<proto::MoveTo>(&d.message)) {
        MoveGoal g;
        g.point = {proto::from_tenth_mm(m->x_tenth_mm), proto::from_tenth_mm(m->y_tenth_mm), 0.0};
        g.yaw = proto::from_centi_deg(m->yaw_centi_deg);
        g.speed = proto::from_mm_s(m->speed_mm_s);
        unit->goal = g;
    } else if (const auto* h = std::get_if<proto::SetHinge>(&d.message)) {
        int deg = static_cast<int>(h->target_centi_deg / 100);
        if (h->target_centi_deg % 100 == 0 && (deg == 0 || deg == 45 || deg == 90)) {
            unit->hinge.command(deg);
        } else {
            applied = false; // only detents exist mechanically
        }
    } else if (const auto* disp = std::get_if<proto::Dispense>(&d.message)) {
        unit->job.request(unit->dispenser, disp->count);
    } else if (const auto* f = std::get_if<proto::AcousticFrame>(&d.message)) {
        unit->frame = *f;
        unit->has_frame = true;
    } else if (std::holds_alternative<proto::Stop>(d.message)) {
        unit->goal.reset();
        unit->dd.v_left = 0.0;
        unit->dd.v_right = 0.0;
    } else {
        applied = false; // PoseReport/Ack have no meaning on a robot
    }

    if (applied)
        ++w.counters.cmd_applied;
    else
        ++w.counters.cmd_rejected;
    send_ack(*unit, d.seq, applied ? 0 : 1, uplink, w.clock, rng);
}

inline robot::WheelCommand client_wheels(RobotUnit& u, const WorldConfig& cfg, double dt) {
    if (!u.goal) return {u.dd.v_left, u.dd.v_right};
    const MoveGoal& g = *u.goal;
    robot::WheelCommand cmd = robot::pi_waypoint(u.dd.pose, g.point, u.pi_heading, u.pi_speed,
                                                 cfg.drive, dt, cfg.arrival_radius, g.speed);
    bool parked = cmd.v_left == 0.0 && cmd.v_right == 0.0 &&
                  planar_distance(u.dd.pose.position, g.point) <= cfg.arrival_radius;
    if (parked) {
        double err = wrap_pi(g.yaw - u.dd.pose.yaw);
        if (std::abs(err) > kYawTrimDeadband) {
            double omega = std::clamp(kYawTrimGain * err, -kYawTrimMaxOmega, kYawTrimMaxOmega);
            double half = 0.5 * cfg.drive.wheel_base;
            cmd = {-omega * half, omega * half};
        }
    }
    return cmd;
}

inline void spawn_bead(World& w, const RobotUnit& dispenser, const WorldConfig& cfg) {
    double yaw = dispenser.dd.pose.yaw;
    Vec3 exit = dispenser.dd.pose.position;
    exit.x += kChuteForward * std::cos(yaw);
    exit.y += kChuteForward * std::sin(yaw);
    exit.z = cfg.trap.z + kChuteDropHeight;

    Bead b;
    b.position = exit;
    // signed planar miss along the heading; a short approach reads negative
    b.delta_z_cm = ((exit.x - cfg.trap.x) * std::cos(yaw) + (exit.y - cfg.trap.y) * std::sin(yaw)) * 100.0;
    b.delta_psi_deg = dispenser.goal ? rad_to_deg(wrap_pi(yaw - dispenser.goal->yaw)) : 0.0;
    if (cfg.forced_delta_z_cm) b.delta_z_cm = *cfg.forced_delta_z_cm;
    if (cfg.forced_delta_psi_deg) b.delta_psi_deg = *cfg.forced_delta_psi_deg;
    w.beads.push_back(b);
}

} // namespace detail

/// One simulation tick. Order: deliver due downlink traffic, apply commands,
/// advance drives/hinges/dispensers with the avoidance filter in the loop,
/// resolve collisions by halting the movers, advance falling beads, publish
/// tracker reports, then advance the clock.
inline void world_step(World& w, Link& downlink, Link& uplink, const WorldConfig& cfg, Rng& rng) {
    double dt = cfg.dt;
    if (!(dt > 0.0)) throw config_error("world dt must be > 0");

    for (const Datagram& dg : downlink.deliver_due(w.clock))
        detail::apply_datagram(w, dg, uplink, rng);

    std::vector<Pose> before;
    before.reserve(w.robots.size());
    for (const RobotUnit& u : w.robots) before.push_back(u.dd.pose);

    for (std::size_t i = 0; i < w.robots.size(); ++i) {
        RobotUnit& u = w.robots[i];

        robot::WheelCommand cmd = detail::client_wheels(u, cfg, dt);
        std::vector<robot::Disc> obstacles;
        for (std::size_t j = 0; j < w.robots.size(); ++j) {
            if (j == i) continue;
            obstacles.push_back({before[j].position, cfg.drive.body_radius});
        }
        cmd = robot::avoid(robot::ir_scan(u.dd.pose, obstacles, &cfg.bounds), cmd, cfg.drive);
        u.dd.v_left = cmd.v_left;
        u.dd.v_right = cmd.v_right;
        u.dd = robot::dd_step(u.dd, cfg.drive, dt);

        robot::HingeDisturbance jolt = u.hinge.advance(dt, rng);
        u.dd.pose.position.x += jolt.dx;
        u.dd.pose.position.y += jolt.dy;
        u.dd.pose.yaw = wrap_pi(u.dd.pose.yaw + jolt.dyaw);

        int released = u.job.advance(u.dispenser, dt);
        for (int b = 0; b < released; ++b) detail::spawn_bead(w, u, cfg);
    }

    // halt every robot involved in an overlap; reverting to the pre-step
    // poses restores a configuration that was overlap-free by induction
    bool reverted = true;
    while (reverted) {
        reverted = false;
        for (std::size_t i = 0; i < w.robots.size(); ++i) {
            for (std::size_t j = i + 1; j < w.robots.size(); ++j) {
                double dist = planar_distance(w.robots[i].dd.pose.position,
                                              w.robots[j].dd.pose.position);
                if (dist >= 2.0 * cfg.drive.body_radius) continue;
                for (std::size_t k : {i, j}) {
                    RobotUnit& u = w.robots[k];
                    if (u.dd.pose.position.x != before[k].position.x ||
                        u.dd.pose.position.y != before[k].position.y ||
                        u.dd.pose.yaw != before[k].yaw) {
                        u.dd.pose = before[k];
                        u.dd.v_left = 0.0;
                        u.dd.v_right = 0.0;
                        reverted = true;
                    }
                }
            }
        }
    }

    for (Bead& b : w.beads) {
        if (b.status != BeadStatus::Falling) continue;
        b.position.z -= kBeadFallSpeed * dt;
        if (b.position.z <= cfg.trap.z) {
            b.position.z = cfg.trap.z;
            b.levitated = levitation_classifier(b.delta_z_cm, b.delta_psi_deg, cfg.classifier);
            b.classified = true;
            if (b.levitated) {
                b.position = cfg.trap;
                b.status = BeadStatus::Levitated;
            } else {
                // resting position below the plane is not modeled
                b.status = BeadStatus::AtRest;
            }
        }
    }

    std::uint64_t every = std::max<std::uint64_t>(
        1, static_cast<std::uint64_t>(std::llround(cfg.tracker.period_s / dt)));
    if (w.tick % every == 0) {
        for (RobotUnit& u : w.robots) {
            Pose p = u.dd.pose;
            if (cfg.tracker.sigma_pos_m > 0.0) {
                p.position.x += rng.gaussian(0.0, cfg.tracker.sigma_pos_m);
                p.position.y += rng.gaussian(0.0, cfg.tracker.sigma_pos_m);
            }
            if (cfg.tracker.sigma_yaw_deg > 0.0)
                p.yaw = wrap_pi(p.yaw + deg_to_rad(rng.gaussian(0.0, cfg.tracker.sigma_yaw_deg)));

            proto::PoseReport r;
            r.source_id = u.id;
            r.x_tenth_mm = proto::to_tenth_mm(p.position.x);
            r.y_tenth_mm = proto::to_tenth_mm(p.position.y);
            r.z_tenth_mm = proto::to_tenth_mm(p.position.z);
            r.yaw_centi_deg = proto::to_centi_deg(p.yaw);
            r.timestamp_ms = static_cast<std::uint32_t>(std::llround(w.clock * 1000.0));
            uplink.send(0, proto::encode(r, u.id, ++u.out_seq), w.clock, rng);
        }
    }

    w.clock += dt;
    ++w.tick;
}

} // namespace patswarm::sim
