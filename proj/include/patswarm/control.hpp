#pragma once

#include <algorithm>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "patswarm/array.hpp"
#include "patswarm/errors.hpp"
#include "patswarm/field.hpp"
#include "patswarm/geometry.hpp"
#include "patswarm/hinge.hpp"
#include "patswarm/ir_avoid.hpp"
#include "patswarm/medium.hpp"
#include "patswarm/modulation.hpp"
#include "patswarm/solvers.hpp"
#include "patswarm/wire.hpp"

namespace patswarm::control {

enum class BotKind { Acousto, Dispenser };
enum class Modality { Haptic, Audio, Levitation };
enum class Phase { Approaching, Aligning, Following, Visualizing };

inline const char* phase_name(Phase p) {
    switch (p) {
        case Phase::Approaching: return "approaching";
        case Phase::Aligning: return "aligning";
        case Phase::Following: return "following";
        case Phase::Visualizing: return "visualizing";
    }
    return "?";
}

struct Tolerances {
    double pos_tol = 0.01;       // m
    double yaw_tol_deg = 2.0;
    double staleness = 0.25;     // s without a fresh pose before commands stop
};

/// What the swarm is asked to render. Haptic and audio carry a modulation
/// envelope; levitation carries the trap point instead of focal targets.
struct ContentSpec {
    Modality modality = Modality::Haptic;
    std::vector<Vec3> targets;
    double mod_frequency = 0.0; // Hz
    double mod_depth = 0.0;     // [0, 1]
    Vec3 trap{};
};

struct ServerConfig {
    Tolerances tol{};
    robot::Workspace bounds{};
    double station_margin = 0.05;      // keep stations this far inside the walls
    double approach_speed = 0.10;      // m/s, carried in MoveTo
    double regress_distance = 0.05;    // error that throws a bot back to Approaching
    double hinge_settle_margin = 0.1;  // s added to the hinge travel estimate
    double stream_settle = 1.0;        // s of joint frames before the bead drops
    int solver_iterations = 50;
    double ear_range = 0.3;            // m board-to-ear for audio
    double audio_arc_deg = 40.0;       // angular spread when several boards share an ear
    double pair_separation = 0.10;     // m face-to-face for levitation
    double pair_axis_deg = 0.0;        // levitation pair axis in the plane
    double dispenser_standoff = 0.08;  // m chute-arm reach from robot centre
    double board_mount_height = 0.0;   // m, board centre above the floor plane
};

inline void validate_content(const ContentSpec& spec, const robot::Workspace& bounds) {
    if (spec.mod_depth < 0.0 || spec.mod_depth > 1.0)
        throw config_error("modulation depth must be within [0, 1]");
    if (spec.mod_frequency < 0.0) throw config_error("modulation frequency must be >= 0");
    if (spec.modality == Modality::Levitation) {
        if (!bounds.contains(spec.trap)) throw config_error("trap point outside the workspace");
        return;
    }
    if (spec.targets.empty()) throw config_error("content needs at least one target");
    for (const Vec3& t : spec.targets)
        if (!bounds.contains(t)) throw config_error("content target outside the workspace");
}

// ---- registry -----------------------------------------------------------

class BotRegistry {
public:
    struct Entry {
        BotKind kind = BotKind::Acousto;
        Pose pose{};
        double pose_time = -1.0;          // sim time of last accepted report
        std::uint32_t last_report_ms = 0; // for the monotonic-timestamp rule
        bool seen_report = false;
        int hinge_deg = 0;                // last commanded detent
        double hinge_eta = 0.0;           // sim time the move is expected done
        std::uint16_t next_seq = 1;
    };

    void add(std::uint8_t id, BotKind kind, const Pose& initial, double t) {
        if (bots_.count(id)) throw config_error("duplicate bot id " + std::to_string(id));
        Entry e;
        e.kind = kind;
        e.pose = initial;
        e.pose_time = t;
        bots_[id] = e;
    }

    /// Apply a tracked pose. Reports older than the newest accepted one are
    /// dropped, which keeps per-bot pose timestamps monotonic under network
    /// reordering. Returns false for a dropped report.
    bool apply_pose(std::uint8_t id, const Pose& pose, std::uint32_t report_ms, double now) {
        Entry& e = at(id);
        if (e.seen_report && report_ms <= e.last_report_ms) return false;
        e.pose = pose;
        e.last_report_ms = report_ms;
        e.seen_report = true;
        e.pose_time = now;
        return true;
    }

    Entry& at(std::uint8_t id) {
        auto it = bots_.find(id);
        if (it == bots_.end()) throw domain_error("unknown bot id " + std::to_string(id));
        return it->second;
    }
    const Entry& at(std::uint8_t id) const {
        auto it = bots_.find(id);
        if (it == bots_.end()) throw domain_error("unknown bot id " + std::to_string(id));
        return it->second;
    }
    bool has(std::uint8_t id) const { return bots_.count(id) != 0; }
    std::size_t size() const { return bots_.size(); }

    std::vector<std::uint8_t> ids() const {
        std::vector<std::uint8_t> out;
        for (const auto& [id, e] : bots_) out.push_back(id);
        return out;
    }
    std::vector<std::uint8_t> ids_of(BotKind kind) const {
        std::vector<std::uint8_t> out;
        for (const auto& [id, e] : bots_)
            if (e.kind == kind) out.push_back(id);
        return out;
    }

    bool fresh(std::uint8_t id, double now, double bound) const {
        const Entry& e = at(id);
        return now - e.pose_time <= bound;
    }

private:
    std::map<std::uint8_t, Entry> bots_; // ordered: iteration order is the id order
};

// ---- geometry of stations ------------------------------------------------

struct Station {
    Vec3 position{}; // z is the floor plane
    double yaw = 0.0;
    int hinge_deg = 0;
    Vec3 focus{};    // the world point this station serves
};

inline bool alignment_check(const Pose& pose, const Vec3& station, double yaw_target,
                            const Tolerances& tol) {
    if (planar_distance(pose.position, station) > tol.pos_tol) return false;
    return std::abs(wrap_pi(pose.yaw - yaw_target)) <= deg_to_rad(tol.yaw_tol_deg);
}

/// Greedy nearest-pair matching of bots to targets. Returns one target index
/// per bot, -1 when unassigned. Ties break toward the lowest bot index, then
/// the lowest target index, so the result is order-deterministic.
inline std::vector<int> assign_targets(std::span<const Pose> bots, std::span<const Vec3> targets) {
    std::vector<int> assignment(bots.size(), -1);
    std::vector<bool> target_taken(targets.size(), false);
    std::size_t rounds = std::min(bots.size(), targets.size());
    for (std::size_t round = 0; round < rounds; ++round) {
        double best = std::numeric_limits<double>::infinity();
        std::size_t best_bot = 0, best_target = 0;
        bool found = false;
        for (std::size_t b = 0; b < bots.size(); ++b) {
            if (assignment[b] >= 0) continue;
            for (std::size_t t = 0; t < targets.size(); ++t) {
                if (target_taken[t]) continue;
                double dx = bots[b].position.x - targets[t].x;
                double dy = bots[b].position.y - targets[t].y;
                double d2 = dx * dx + dy * dy;
                if (d2 < best) {
                    best = d2;
                    best_bot = b;
                    best_target = t;
                    found = true;
                }
            }
        }
        if (!found) break;
        assignment[best_bot] = static_cast<int>(best_target);
        target_taken[best_target] = true;
    }
    return assignment;
}

namespace detail {

inline Vec3 clamp_into(const robot::Workspace& w, Vec3 p, double margin) {
    p.x = std::clamp(p.x, w.xmin + margin, w.xmax - margin);
    p.y = std::clamp(p.y, w.ymin + margin, w.ymax - margin);
    return p;
}

} // namespace detail

/// Acousto stations for the current target snapshot. Haptic boards park
/// under the hands, one per hand; audio boards stand a fixed range from
/// their ear aimed at it, fanned out when several boards share one ear; the
/// levitation pair stands face-to-face across the trap. n_bots matters only
/// for audio, where the boards are distributed over the ears round-robin.
inline std::vector<Station> acousto_stations(const ContentSpec& spec,
                                             std::span<const Vec3> targets,
                                             const ServerConfig& cfg, std::size_t n_bots) {
    std::vector<Station> out;
    switch (spec.modality) {
        case Modality::Haptic:
            for (const Vec3& t : targets) {
                Station s;
                s.position = detail::clamp_into(cfg.bounds, {t.x, t.y, 0.0}, cfg.station_margin);
                s.yaw = 0.0;
                s.hinge_deg = 0;
                s.focus = t;
                out.push_back(s);
            }
            break;
        case Modality::Audio: {
            if (targets.empty()) break;
            std::size_t n = std::max(n_bots, std::size_t{1});
            std::vector<std::size_t> per_ear(targets.size(), 0);
            for (std::size_t i = 0; i < n; ++i) ++per_ear[i % targets.size()];
            for (std::size_t e = 0; e < targets.size(); ++e) {
                const Vec3& t = targets[e];
                double cn = std::hypot(t.x, t.y);
                // approach along the ray from the workspace centre; an ear at
                // the exact centre gets an arbitrary fixed direction
                double base = cn > 1e-9 ? std::atan2(-t.y, -t.x) : kPi;
                std::size_t k = per_ear[e];
                for (std::size_t j = 0; j < k; ++j) {
                    double off = k > 1 ? deg_to_rad(cfg.audio_arc_deg) *
                                             (static_cast<double>(j) / (k - 1) - 0.5)
                                       : 0.0;
                    double a = base + off;
                    Station s;
                    s.position = detail::clamp_into(
                        cfg.bounds,
                        {t.x + cfg.ear_range * std::cos(a), t.y + cfg.ear_range * std::sin(a), 0.0},
                        cfg.station_margin);
                    s.yaw = std::atan2(t.y - s.position.y, t.x - s.position.x);
                    s.hinge_deg = 45;
                    s.focus = t;
                    out.push_back(s);
                }
            }
            break;
        }
        case Modality::Levitation: {
            double a = deg_to_rad(cfg.pair_axis_deg);
            Vec3 axis{std::cos(a), std::sin(a), 0.0};
            double h = cfg.pair_separation / 2.0;
            Station s0;
            s0.position = {spec.trap.x - h * axis.x, spec.trap.y - h * axis.y, 0.0};
            s0.yaw = wrap_pi(a);
            s0.hinge_deg = 90;
            s0.focus = spec.trap;
            Station s1;
            s1.position = {spec.trap.x + h * axis.x, spec.trap.y + h * axis.y, 0.0};
            s1.yaw = wrap_pi(a + kPi);
            s1.hinge_deg = 90;
            s1.focus = spec.trap;
            out = {s0, s1};
            break;
        }
    }
    return out;
}

/// Where the dispenser must stand so its chute exit hangs over the trap:
/// standoff along the pair perpendicular, nose aimed at the trap.
inline Station dispenser_station(const Vec3& trap, const ServerConfig& cfg) {
    double a = deg_to_rad(cfg.pair_axis_deg);
    Vec3 perp{-std::sin(a), std::cos(a), 0.0};
    Station s;
    s.position = {trap.x + cfg.dispenser_standoff * perp.x,
                  trap.y + cfg.dispenser_standoff * perp.y, 0.0};
    s.yaw = std::atan2(-perp.y, -perp.x);
    s.hinge_deg = 0;
    return s;
}

/// Board pose in the world: the robot carries the array centre above its own
/// planar position, tilted to the commanded hinge detent.
inline Pose board_pose(const Pose& robot_pose, int hinge_deg, double mount_height) {
    Pose p;
    p.position = {robot_pose.position.x, robot_pose.position.y, mount_height};
    p.yaw = robot_pose.yaw;
    p.pitch = deg_to_rad(static_cast<double>(hinge_deg));
    return p;
}

// ---- frame computation ----------------------------------------------------

/// Everything compute_frames needs for one tick, fully explicit so the same
/// plan always yields byte-identical frames.
struct FramePlan {
    Modality modality = Modality::Haptic;
    std::vector<std::uint8_t> bot_ids;
    std::vector<acoustics::PhasedArrayModel> boards; // world-composed poses
    std::vector<Vec3> targets; // haptic: one per board; audio: shared; levitation: {trap}
    double mod_frequency = 0.0;
    double mod_depth = 0.0;
    int solver_iterations = 50;
};

struct BoardFrame {
    std::uint8_t bot_id = 0;
    proto::AcousticFrame frame;
};

inline std::vector<BoardFrame> compute_frames(const FramePlan& plan, double t,
                                              std::uint16_t frame_id, const Medium& medium) {
    if (plan.boards.size() != plan.bot_ids.size())
        throw std::invalid_argument("frame plan: one bot id per board");

    std::vector<acoustics::DriveState> drives;
    try {
        switch (plan.modality) {
            case Modality::Haptic: {
                if (plan.targets.size() != plan.boards.size())
                    throw std::invalid_argument("haptic plan: one target per board");
                for (std::size_t i = 0; i < plan.boards.size(); ++i)
                    drives.push_back(
                        acoustics::focus_phases(plan.boards[i], plan.targets[i], medium));
                break;
            }
            case Modality::Audio: {
                acoustics::MultiPointSolution sol = acoustics::multipoint_solve(
                    plan.boards, plan.targets, plan.solver_iterations, medium);
                drives = std::move(sol.drives);
                break;
            }
            case Modality::Levitation: {
                if (plan.boards.size() != 2)
                    throw domain_error("levitation needs exactly two boards");
                if (plan.targets.size() != 1)
                    throw domain_error("levitation takes a single trap point");
                auto pair = acoustics::levitation_signature(plan.boards[0], plan.boards[1],
                                                            plan.targets[0], medium);
                drives = {pair.first, pair.second};
                break;
            }
        }
    } catch (const std::exception& e) {
        std::string ids;
        for (std::uint8_t id : plan.bot_ids) ids += (ids.empty() ? "" : ",") + std::to_string(id);
        throw domain_error("frame computation for bots [" + ids + "]: " + e.what());
    }

    double envelope = 1.0;
    if (plan.modality != Modality::Levitation && plan.mod_depth > 0.0)
        envelope = acoustics::am_envelope(plan.mod_frequency, plan.mod_depth, t);

    std::vector<BoardFrame> out;
    for (std::size_t i = 0; i < drives.size(); ++i) {
        acoustics::DriveState d = drives[i];
        if (envelope != 1.0)
            for (double& a : d.amplitudes) a *= envelope;
        out.push_back({plan.bot_ids[i], proto::make_acoustic_frame(frame_id, proto::quantize_drive(d))});
    }
    return out;
}

// ---- levitation schedule ---------------------------------------------------

enum class LevitationAction {
    VerifyAlignment,
    StreamFrames,
    MoveDispenser,
    Dispense,
    QueryClassifier,
    ReportOutcome,
};

struct LevitationSchedule {
    std::vector<LevitationAction> actions;
    Station dispenser_target;
};

/// Build the dispense schedule for a trap. Requires exactly two acousto bots
/// already opposed across the trap at the configured separation and a
/// dispenser somewhere in the registry; the MoveDispenser step is included
/// only when the dispenser is not already on station.
inline LevitationSchedule levitation_orchestrate(const BotRegistry& registry, const Vec3& trap,
                                                 std::uint8_t dispenser_id,
                                                 const ServerConfig& cfg) {
    if (!registry.has(dispenser_id) ||
        registry.at(dispenser_id).kind != BotKind::Dispenser)
        throw domain_error("levitation schedule needs a dispenser bot");
    std::vector<std::uint8_t> acousto = registry.ids_of(BotKind::Acousto);
    if (acousto.size() != 2)
        throw domain_error("levitation schedule needs exactly two acousto bots");

    double h = cfg.pair_separation / 2.0;
    for (std::uint8_t id : acousto) {
        double r = planar_distance(registry.at(id).pose.position, trap);
        if (std::abs(r - h) > 2.0 * cfg.tol.pos_tol)
            throw domain_error("acousto bot " + std::to_string(id) +
                               " is not at the pair separation from the trap");
    }
    const Vec3& p0 = registry.at(acousto[0]).pose.position;
    const Vec3& p1 = registry.at(acousto[1]).pose.position;
    Vec3 r0{p0.x - trap.x, p0.y - trap.y, 0.0};
    Vec3 r1{p1.x - trap.x, p1.y - trap.y, 0.0};
    double cosang = (r0.x * r1.x + r0.y * r1.y) / (std::hypot(r0.x, r0.y) * std::hypot(r1.x, r1.y));
    if (cosang > -std::cos(deg_to_rad(10.0)))
        throw domain_error("acousto bots are not opposed across the trap");

    LevitationSchedule sched;
    sched.dispenser_target = dispenser_station(trap, cfg);
    sched.actions.push_back(LevitationAction::VerifyAlignment);
    sched.actions.push_back(LevitationAction::StreamFrames);
    const auto& disp = registry.at(dispenser_id);
    if (!alignment_check(disp.pose, sched.dispenser_target.position,
                         sched.dispenser_target.yaw, cfg.tol))
        sched.actions.push_back(LevitationAction::MoveDispenser);
    sched.actions.push_back(LevitationAction::Dispense);
    sched.actions.push_back(LevitationAction::QueryClassifier);
    sched.actions.push_back(LevitationAction::ReportOutcome);
    return sched;
}

// ---- the server -------------------------------------------------------------

struct Outbound {
    std::uint8_t bot_id = 0;
    std::uint16_t seq = 0;
    proto::Message message;
};

struct TickResult {
    std::vector<Outbound> commands;
    std::vector<std::string> diagnostics;
    Phase phase = Phase::Approaching;
};

/// Central controller: one instance per scenario. Call tick() at the control
/// rate with the live target snapshot, frames() at the streaming rate; feed
/// pose reports in between. All state is deterministic.
class ControlServer {
public:
    ControlServer(ServerConfig cfg, ContentSpec spec, Medium medium,
                  acoustics::TransducerElement element_template, int board_rows, int board_cols,
                  double board_pitch)
        : cfg_(cfg),
          spec_(spec),
          medium_(medium),
          element_(element_template),
          rows_(board_rows),
          cols_(board_cols),
          pitch_(board_pitch) {
        validate_content(spec_, cfg_.bounds);
    }

    BotRegistry& registry() { return registry_; }
    const BotRegistry& registry() const { return registry_; }
    Phase phase() const { return phase_; }
    bool dispense_commanded() const { return dispense_commanded_; }
    const std::vector<std::pair<double, Phase>>& transitions() const { return transitions_; }

    /// Bot/station pairing from the latest tick, in assignment order.
    const std::vector<std::pair<std::uint8_t, Station>>& assignments() const { return assigned_; }

    /// Stations for the current snapshot, one per acousto bot in assignment
    /// order; exposed for inspection and tests.
    std::vector<Station> stations(std::span<const Vec3> targets) const {
        return acousto_stations(spec_, targets, cfg_,
                                registry_.ids_of(BotKind::Acousto).size());
    }

    TickResult tick(double t, std::span<const Vec3> live_targets) {
        TickResult result;
        last_targets_.assign(live_targets.begin(), live_targets.end());

        for (std::uint8_t id : registry_.ids()) {
            if (!registry_.fresh(id, t, cfg_.tol.staleness)) {
                result.diagnostics.push_back("stale pose for bot " + std::to_string(id) +
                                             "; withholding commands");
            }
        }
        if (!result.diagnostics.empty()) {
            result.phase = phase_;
            return result;
        }

        std::vector<std::uint8_t> acousto = registry_.ids_of(BotKind::Acousto);
        std::vector<Station> stations =
            acousto_stations(spec_, live_targets, cfg_, acousto.size());

        // stable greedy pairing of bots and stations
        std::vector<Pose> poses;
        for (std::uint8_t id : acousto) poses.push_back(registry_.at(id).pose);
        std::vector<Vec3> station_points;
        for (const Station& s : stations) station_points.push_back(s.position);
        std::vector<int> pick = assign_targets(poses, station_points);

        assigned_.clear();
        bool all_aligned = !acousto.empty();
        double worst_err = 0.0;
        for (std::size_t i = 0; i < acousto.size(); ++i) {
            if (pick[i] < 0) continue;
            Station st = stations[static_cast<std::size_t>(pick[i])];
            // A flat board focuses straight up and the phase solve runs from
            // the reported pose, so haptic stations leave yaw free. Adopting
            // the bot's own yaw keeps a parked bot from pirouetting when its
            // hand starts to move.
            if (spec_.modality == Modality::Haptic) st.yaw = poses[i].yaw;
            assigned_.push_back({acousto[i], st});
            double err = planar_distance(poses[i].position, st.position);
            worst_err = std::max(worst_err, err);
            if (!alignment_check(poses[i], st.position, st.yaw, cfg_.tol)) all_aligned = false;
        }

        switch (phase_) {
            case Phase::Approaching: {
                send_moves(result, t);
                if (all_aligned && !assigned_.empty()) {
                    set_phase(Phase::Aligning, t);
                    send_hinges(result, t);
                }
                break;
            }
            case Phase::Aligning: {
                send_moves(result, t);
                bool hinges_done = true;
                for (const auto& [id, st] : assigned_)
                    if (t < registry_.at(id).hinge_eta) hinges_done = false;
                if (hinges_done && all_aligned) {
                    set_phase(spec_.modality == Modality::Levitation ? Phase::Visualizing
                                                                     : Phase::Following,
                              t);
                    vis_stream_start_ = t;
                }
                break;
            }
            case Phase::Following: {
                if (worst_err > cfg_.regress_distance) {
                    set_phase(Phase::Approaching, t);
                    result.diagnostics.push_back("target moved beyond the regress bound");
                }
                send_moves(result, t);
                break;
            }
            case Phase::Visualizing: {
                send_moves(result, t); // pair holds position
                step_visualizing(result, t);
                break;
            }
        }
        result.phase = phase_;
        return result;
    }

    /// Acoustic frames for the streaming cadence. Empty unless the scenario
    /// reached Following/Visualizing; Approaching never streams.
    std::vector<Outbound> frames(double t) {
        std::vector<Outbound> out;
        if (phase_ != Phase::Following && phase_ != Phase::Visualizing) return out;
        FramePlan plan = build_plan();
        if (plan.boards.empty()) return out;
        std::vector<BoardFrame> frames = compute_frames(plan, t, frame_id_, medium_);
        ++frame_id_;
        for (const BoardFrame& bf : frames) {
            Outbound o;
            o.bot_id = bf.bot_id;
            o.seq = registry_.at(bf.bot_id).next_seq++;
            o.message = bf.frame;
            out.push_back(o);
        }
        return out;
    }

    /// The plan frames are computed from; exposed so the world can evaluate
    /// the true field with the exact same board composition.
    FramePlan build_plan() const {
        FramePlan plan;
        plan.modality = spec_.modality;
        plan.mod_frequency = spec_.mod_frequency;
        plan.mod_depth = spec_.mod_depth;
        plan.solver_iterations = cfg_.solver_iterations;
        for (const auto& [id, st] : assigned_) {
            const BotRegistry::Entry& e = registry_.at(id);
            plan.bot_ids.push_back(id);
            plan.boards.push_back(acoustics::build_array(
                rows_, cols_, pitch_, board_pose(e.pose, e.hinge_deg, cfg_.board_mount_height),
                element_));
        }
        if (spec_.modality == Modality::Levitation) {
            plan.targets = {spec_.trap};
        } else if (spec_.modality == Modality::Audio) {
            plan.targets = last_targets_;
        } else {
            for (const auto& [id, st] : assigned_) plan.targets.push_back(st.focus);
        }
        return plan;
    }

private:
    void set_phase(Phase p, double t) {
        phase_ = p;
        transitions_.push_back({t, p});
    }

    void send_moves(TickResult& result, double) {
        for (const auto& [id, st] : assigned_) push_move(result, id, st);
        if (spec_.modality == Modality::Levitation && phase_ == Phase::Visualizing &&
            vis_state_ == VisState::Positioning) {
            std::vector<std::uint8_t> disp = registry_.ids_of(BotKind::Dispenser);
            if (!disp.empty()) push_move(result, disp.front(), dispenser_station(spec_.trap, cfg_));
        }
    }

    void push_move(TickResult& result, std::uint8_t id, const Station& st) {
        proto::MoveTo m;
        m.x_tenth_mm = proto::to_tenth_mm(st.position.x);
        m.y_tenth_mm = proto::to_tenth_mm(st.position.y);
        m.yaw_centi_deg = proto::to_centi_deg(st.yaw);
        m.speed_mm_s = proto::to_mm_s(cfg_.approach_speed);
        Outbound o;
        o.bot_id = id;
        o.seq = registry_.at(id).next_seq++;
        o.message = m;
        result.commands.push_back(o);
    }

    void send_hinges(TickResult& result, double t) {
        for (const auto& [id, st] : assigned_) {
            BotRegistry::Entry& e = registry_.at(id);
            proto::SetHinge h;
            h.target_centi_deg = static_cast<std::uint16_t>(st.hinge_deg * 100);
            Outbound o;
            o.bot_id = id;
            o.seq = e.next_seq++;
            o.message = h;
            result.commands.push_back(o);
            long steps = std::abs(robot::hinge_plan(e.hinge_deg, st.hinge_deg));
            e.hinge_eta = t + static_cast<double>(steps) / robot::kHingeMotorStepsPerSec +
                          cfg_.hinge_settle_margin;
            e.hinge_deg = st.hinge_deg;
        }
    }

    void step_visualizing(TickResult& result, double t) {
        std::vector<std::uint8_t> disp = registry_.ids_of(BotKind::Dispenser);
        switch (vis_state_) {
            case VisState::Streaming:
                if (t - vis_stream_start_ >= cfg_.stream_settle) {
                    if (disp.empty()) {
                        result.diagnostics.push_back("no dispenser registered; holding the trap");
                    } else {
                        vis_state_ = VisState::Positioning;
                    }
                }
                break;
            case VisState::Positioning: {
                // moves were already queued by send_moves
                Station st = dispenser_station(spec_.trap, cfg_);
                const auto& e = registry_.at(disp.front());
                if (alignment_check(e.pose, st.position, st.yaw, cfg_.tol))
                    vis_state_ = VisState::Dispensing;
                break;
            }
            case VisState::Dispensing: {
                proto::Dispense d;
                d.count = 1;
                Outbound o;
                o.bot_id = disp.front();
                o.seq = registry_.at(disp.front()).next_seq++;
                o.message = d;
                result.commands.push_back(o);
                dispense_commanded_ = true;
                vis_state_ = VisState::Done;
                break;
            }
            case VisState::Done: break;
        }
    }

    enum class VisState { Streaming, Positioning, Dispensing, Done };

    ServerConfig cfg_;
    ContentSpec spec_;
    Medium medium_;
    acoustics::TransducerElement element_;
    int rows_, cols_;
    double pitch_;

    BotRegistry registry_;
    Phase phase_ = Phase::Approaching;
    VisState vis_state_ = VisState::Streaming;
    double vis_stream_start_ = 0.0;
    bool dispense_commanded_ = false;
    std::uint16_t frame_id_ = 0;
    std::vector<std::pair<std::uint8_t, Station>> assigned_;
    std::vector<Vec3> last_targets_;
    std::vector<std::pair<double, Phase>> transitions_;
};

} // namespace patswarm::control
