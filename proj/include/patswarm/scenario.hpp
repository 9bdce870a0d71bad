#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "patswarm/control.hpp"
#include "patswarm/field.hpp"
#include "patswarm/network.hpp"
#include "patswarm/reference_scenes.hpp"
#include "patswarm/world.hpp"

namespace patswarm::sim {

// ---- report digests ------------------------------------------------------

inline std::uint64_t fnv1a64(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}

// ---- scenario kinds and target trajectories ------------------------------

enum class ScenarioKind { S1Haptics, S2Audio, S3Levitation };

inline const char* scenario_name(ScenarioKind k) {
    switch (k) {
        case ScenarioKind::S1Haptics: return "s1_haptics";
        case ScenarioKind::S2Audio: return "s2_audio";
        case ScenarioKind::S3Levitation: return "s3_levitation";
    }
    return "?";
}

inline ScenarioKind parse_scenario_kind(const std::string& s) {
    if (s == "s1_haptics") return ScenarioKind::S1Haptics;
    if (s == "s2_audio") return ScenarioKind::S2Audio;
    if (s == "s3_levitation") return ScenarioKind::S3Levitation;
    throw config_error("unknown scenario kind '" + s +
                       "' (expected s1_haptics, s2_audio or s3_levitation)");
}

struct Waypoint {
    double t = 0.0;
    Vec3 p{};
};

/// Piecewise-linear track, clamped outside the waypoint span.
struct Trajectory {
    std::vector<Waypoint> waypoints;
};

inline Vec3 trajectory_at(const Trajectory& tr, double t) {
    const std::vector<Waypoint>& w = tr.waypoints;
    if (w.empty()) throw config_error("trajectory without waypoints");
    if (t <= w.front().t) return w.front().p;
    if (t >= w.back().t) return w.back().p;
    for (std::size_t i = 1; i < w.size(); ++i) {
        if (t > w[i].t) continue;
        double span = w[i].t - w[i - 1].t;
        if (span <= 0.0) return w[i].p;
        double u = (t - w[i - 1].t) / span;
        Vec3 a = w[i - 1].p, b = w[i].p;
        return {a.x + u * (b.x - a.x), a.y + u * (b.y - a.y), a.z + u * (b.z - a.z)};
    }
    return w.back().p;
}

// ---- specs ---------------------------------------------------------------

struct SimConfig {
    double dt = 0.01;
    double duration = 30.0;
    std::uint64_t seed = 1;
    NetConfig net;
    TrackerConfig tracker;
    robot::Workspace bounds{-0.6, 0.6, -0.6, 0.6};
};

struct VerdictConfig {
    double follow_deadline_s = 30.0; // first Following entry must beat this
    double follow_err_m = 0.02;      // worst tracking error while Following
};

struct BotSpec {
    std::uint8_t id = 0;
    control::BotKind kind = control::BotKind::Acousto;
    Pose pose;
};

struct ScenarioSpec {
    ScenarioKind kind = ScenarioKind::S1Haptics;
    std::vector<BotSpec> bots;
    std::vector<Trajectory> targets;
    control::ContentSpec content;

    Medium medium = acoustics::reference_medium();
    int board_rows = acoustics::kReferenceRows;
    int board_cols = acoustics::kReferenceCols;
    double board_pitch = acoustics::kReferencePitch;
    double reference_pressure = -1.0; // < 0: calibrate for the medium

    robot::DiffDriveParams drive;
    double arrival_radius = 0.003;
    double control_rate_hz = 50.0;
    control::ServerConfig server;
    ClassifierThresholds classifier;
    VerdictConfig verdict;
    std::optional<double> forced_delta_z_cm;
    std::optional<double> forced_delta_psi_deg;
};

struct LoadedScenario {
    ScenarioSpec spec;
    SimConfig sim;
};

// ---- strict JSON readers -------------------------------------------------

namespace detail {

inline std::string line_anchor(const std::string& text, std::size_t byte) {
    std::size_t line = 1, col = 1;
    std::size_t end = byte > 0 ? std::min(byte - 1, text.size()) : 0;
    for (std::size_t i = 0; i < end; ++i) {
        if (text[i] == '\n') {
            ++line;
            col = 1;
        } else {
            ++col;
        }
    }
    return "line " + std::to_string(line) + ", column " + std::to_string(col);
}

/// Object wrapper that rejects unknown keys, so config typos fail loudly
/// instead of silently keeping a default.
class ObjReader {
public:
    ObjReader(const nlohmann::json& j, std::string path) : j_(j), path_(std::move(path)) {
        if (!j_.is_object()) throw config_error(path_ + " must be an object");
    }

    bool has(const char* key) const { return j_.contains(key); }

    double num(const char* key, double fallback) {
        seen_.insert(key);
        if (!j_.contains(key)) return fallback;
        return as_num(key);
    }
    double req_num(const char* key) {
        seen_.insert(key);
        if (!j_.contains(key)) throw config_error(path_ + ": missing required key '" + key + "'");
        return as_num(key);
    }
    long req_int(const char* key) {
        double v = req_num(key);
        if (v != std::floor(v)) throw config_error(path_ + "." + key + " must be an integer");
        return static_cast<long>(v);
    }
    long integer(const char* key, long fallback) {
        return j_.contains(key) ? req_int(key) : (seen_.insert(key), fallback);
    }
    std::string req_str(const char* key) {
        seen_.insert(key);
        if (!j_.contains(key)) throw config_error(path_ + ": missing required key '" + key + "'");
        if (!j_[key].is_string()) throw config_error(path_ + "." + key + " must be a string");
        return j_[key].get<std::string>();
    }
    const nlohmann::json* object(const char* key) {
        seen_.insert(key);
        if (!j_.contains(key)) return nullptr;
        if (!j_[key].is_object()) throw config_error(path_ + "." + key + " must be an object");
        return &j_[key];
    }
    const nlohmann::json* array(const char* key) {
        seen_.insert(key);
        if (!j_.contains(key)) return nullptr;
        if (!j_[key].is_array()) throw config_error(path_ + "." + key + " must be an array");
        return &j_[key];
    }

    /// Call after reading everything: any key not consumed is a config error.
    void finish() const {
        for (const auto& item : j_.items())
            if (!seen_.count(item.key()))
                throw config_error(path_ + ": unknown key '" + item.key() + "'");
    }

private:
    double as_num(const char* key) const {
        if (!j_[key].is_number()) throw config_error(path_ + "." + key + " must be a number");
        return j_[key].get<double>();
    }

    const nlohmann::json& j_;
    std::string path_;
    std::set<std::string> seen_;
};

inline Vec3 read_vec3(const nlohmann::json& j, const std::string& path) {
    ObjReader r(j, path);
    Vec3 v{r.req_num("x"), r.req_num("y"), r.req_num("z")};
    r.finish();
    return v;
}

} // namespace detail

// ---- loader --------------------------------------------------------------

inline LoadedScenario load_scenario(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw config_error("scenario parse error at " + detail::line_anchor(text, e.byte) + ": " +
                           e.what());
    }

    LoadedScenario out;
    ScenarioSpec& spec = out.spec;
    SimConfig& sim = out.sim;

    detail::ObjReader top(j, "scenario");
    spec.kind = parse_scenario_kind(top.req_str("scenario"));

    if (const auto* o = top.object("sim")) {
        detail::ObjReader r(*o, "sim");
        sim.dt = r.num("dt", sim.dt);
        sim.duration = r.num("duration", sim.duration);
        sim.seed = static_cast<std::uint64_t>(r.integer("seed", 1));
        r.finish();
        if (!(sim.dt > 0.0)) throw config_error("sim.dt must be > 0");
        if (!(sim.duration > 0.0)) throw config_error("sim.duration must be > 0");
    }
    if (const auto* o = top.object("net")) {
        detail::ObjReader r(*o, "net");
        sim.net.latency_ms = r.num("latency_ms", 0.0);
        sim.net.jitter_ms = r.num("jitter_ms", 0.0);
        sim.net.loss = r.num("loss", 0.0);
        r.finish();
        try {
            validate_net_config(sim.net);
        } catch (const std::exception& e) {
            throw config_error(std::string("net: ") + e.what());
        }
    }
    if (const auto* o = top.object("tracker")) {
        detail::ObjReader r(*o, "tracker");
        sim.tracker.sigma_pos_m = r.num("sigma_pos_m", 0.0);
        sim.tracker.sigma_yaw_deg = r.num("sigma_yaw_deg", 0.0);
        sim.tracker.period_s = 1.0 / r.num("rate_hz", 100.0);
        r.finish();
        if (!(sim.tracker.period_s > 0.0)) throw config_error("tracker.rate_hz must be > 0");
    }
    if (const auto* o = top.object("workspace")) {
        detail::ObjReader r(*o, "workspace");
        sim.bounds.xmin = r.num("xmin", sim.bounds.xmin);
        sim.bounds.xmax = r.num("xmax", sim.bounds.xmax);
        sim.bounds.ymin = r.num("ymin", sim.bounds.ymin);
        sim.bounds.ymax = r.num("ymax", sim.bounds.ymax);
        r.finish();
        if (sim.bounds.xmin >= sim.bounds.xmax || sim.bounds.ymin >= sim.bounds.ymax)
            throw config_error("workspace bounds are empty");
    }
    if (const auto* o = top.object("medium")) {
        detail::ObjReader r(*o, "medium");
        spec.medium.speed_of_sound = r.num("speed_of_sound", spec.medium.speed_of_sound);
        spec.medium.frequency = r.num("frequency", spec.medium.frequency);
        r.finish();
        if (!(spec.medium.speed_of_sound > 0.0) || !(spec.medium.frequency > 0.0))
            throw config_error("medium values must be > 0");
    }
    if (const auto* o = top.object("board")) {
        detail::ObjReader r(*o, "board");
        spec.board_rows = static_cast<int>(r.integer("rows", spec.board_rows));
        spec.board_cols = static_cast<int>(r.integer("cols", spec.board_cols));
        spec.board_pitch = r.num("pitch_m", spec.board_pitch);
        spec.reference_pressure = r.num("reference_pressure", -1.0);
        r.finish();
        if (spec.board_rows <= 0 || spec.board_cols <= 0 || !(spec.board_pitch > 0.0))
            throw config_error("board geometry must be positive");
    }

    const auto* bots = top.array("bots");
    if (!bots || bots->empty()) throw config_error("scenario: missing required key 'bots'");
    for (std::size_t i = 0; i < bots->size(); ++i) {
        detail::ObjReader r((*bots)[i], "bots[" + std::to_string(i) + "]");
        BotSpec b;
        long id = r.req_int("id");
        if (id < 1 || id > 255) throw config_error("bot id must be in [1, 255]");
        b.id = static_cast<std::uint8_t>(id);
        std::string kind = r.req_str("kind");
        if (kind == "acousto")
            b.kind = control::BotKind::Acousto;
        else if (kind == "dispenser")
            b.kind = control::BotKind::Dispenser;
        else
            throw config_error("bot kind must be 'acousto' or 'dispenser', got '" + kind + "'");
        b.pose = make_pose({r.req_num("x"), r.req_num("y"), 0.0}, deg_to_rad(r.num("yaw_deg", 0.0)));
        r.finish();
        for (const BotSpec& other : spec.bots)
            if (other.id == b.id)
                throw config_error("duplicate bot id " + std::to_string(id));
        if (!sim.bounds.contains(b.pose.position))
            throw config_error("bot " + std::to_string(id) + " starts outside the workspace");
        spec.bots.push_back(b);
    }

    if (const auto* arr = top.array("targets")) {
        for (std::size_t i = 0; i < arr->size(); ++i) {
            std::string path = "targets[" + std::to_string(i) + "]";
            detail::ObjReader r((*arr)[i], path);
            const auto* wps = r.array("waypoints");
            if (!wps || wps->empty()) throw config_error(path + ".waypoints must be non-empty");
            Trajectory tr;
            for (std::size_t k = 0; k < wps->size(); ++k) {
                detail::ObjReader wr((*wps)[k], path + ".waypoints[" + std::to_string(k) + "]");
                Waypoint wp;
                wp.t = wr.req_num("t");
                wp.p = {wr.req_num("x"), wr.req_num("y"), wr.req_num("z")};
                wr.finish();
                if (!tr.waypoints.empty() && wp.t < tr.waypoints.back().t)
                    throw config_error(path + ": waypoint timestamps must be non-decreasing");
                tr.waypoints.push_back(wp);
            }
            r.finish();
            spec.targets.push_back(tr);
        }
    }

    spec.content.modality = spec.kind == ScenarioKind::S1Haptics ? control::Modality::Haptic
                            : spec.kind == ScenarioKind::S2Audio ? control::Modality::Audio
                                                                 : control::Modality::Levitation;
    if (const auto* o = top.object("content")) {
        detail::ObjReader r(*o, "content");
        spec.content.mod_frequency = r.num("mod_frequency", spec.content.mod_frequency);
        spec.content.mod_depth = r.num("mod_depth", spec.content.mod_depth);
        if (r.has("trap")) {
            const auto* t = r.object("trap");
            spec.content.trap = detail::read_vec3(*t, "content.trap");
        }
        r.finish();
    }
    for (const Trajectory& tr : spec.targets)
        spec.content.targets.push_back(trajectory_at(tr, 0.0));

    spec.server.bounds = sim.bounds;
    if (const auto* o = top.object("tolerances")) {
        detail::ObjReader r(*o, "tolerances");
        spec.server.tol.pos_tol = r.num("pos_tol_m", spec.server.tol.pos_tol);
        spec.server.tol.yaw_tol_deg = r.num("yaw_tol_deg", spec.server.tol.yaw_tol_deg);
        spec.server.tol.staleness = r.num("staleness_s", spec.server.tol.staleness);
        r.finish();
    }
    if (const auto* o = top.object("control")) {
        detail::ObjReader r(*o, "control");
        spec.control_rate_hz = r.num("rate_hz", spec.control_rate_hz);
        spec.server.approach_speed = r.num("approach_speed", spec.server.approach_speed);
        spec.server.station_margin = r.num("station_margin", spec.server.station_margin);
        spec.server.regress_distance = r.num("regress_distance", spec.server.regress_distance);
        spec.server.stream_settle = r.num("stream_settle_s", spec.server.stream_settle);
        spec.server.solver_iterations =
            static_cast<int>(r.integer("solver_iterations", spec.server.solver_iterations));
        spec.server.ear_range = r.num("ear_range", spec.server.ear_range);
        spec.server.audio_arc_deg = r.num("audio_arc_deg", spec.server.audio_arc_deg);
        spec.server.pair_separation = r.num("pair_separation", spec.server.pair_separation);
        spec.server.pair_axis_deg = r.num("pair_axis_deg", spec.server.pair_axis_deg);
        spec.server.dispenser_standoff =
            r.num("dispenser_standoff", spec.server.dispenser_standoff);
        spec.server.board_mount_height =
            r.num("board_mount_height", spec.server.board_mount_height);
        r.finish();
        if (!(spec.control_rate_hz > 0.0)) throw config_error("control.rate_hz must be > 0");
    }
    if (const auto* o = top.object("robot")) {
        detail::ObjReader r(*o, "robot");
        spec.drive.wheel_base = r.num("wheel_base", spec.drive.wheel_base);
        spec.drive.max_wheel_speed = r.num("max_wheel_speed", spec.drive.max_wheel_speed);
        spec.drive.body_radius = r.num("body_radius", spec.drive.body_radius);
        spec.arrival_radius = r.num("arrival_radius_m", spec.arrival_radius);
        r.finish();
    }
    if (const auto* o = top.object("classifier")) {
        detail::ObjReader r(*o, "classifier");
        spec.classifier.max_abs_dz_cm = r.num("max_abs_dz_cm", spec.classifier.max_abs_dz_cm);
        spec.classifier.max_abs_dpsi_deg =
            r.num("max_abs_dpsi_deg", spec.classifier.max_abs_dpsi_deg);
        r.finish();
    }
    if (const auto* o = top.object("verdict")) {
        detail::ObjReader r(*o, "verdict");
        spec.verdict.follow_deadline_s = r.num("follow_deadline_s", spec.verdict.follow_deadline_s);
        spec.verdict.follow_err_m = r.num("follow_err_m", spec.verdict.follow_err_m);
        r.finish();
    }
    if (const auto* o = top.object("debug")) {
        detail::ObjReader r(*o, "debug");
        if (r.has("forced_delta_z_cm")) spec.forced_delta_z_cm = r.num("forced_delta_z_cm", 0.0);
        if (r.has("forced_delta_psi_deg"))
            spec.forced_delta_psi_deg = r.num("forced_delta_psi_deg", 0.0);
        r.finish();
    }
    top.finish();
    return out;
}

/// Scenario-kind minimum roster; violations reject the run before stepping.
inline void validate_roster(const ScenarioSpec& spec) {
    std::size_t acousto = 0, dispenser = 0;
    for (const BotSpec& b : spec.bots)
        (b.kind == control::BotKind::Acousto ? acousto : dispenser) += 1;

    if (spec.kind == ScenarioKind::S3Levitation) {
        if (acousto != 2 || dispenser < 1)
            throw domain_error("s3_levitation needs exactly 2 acousto bots and a dispenser (got " +
                               std::to_string(acousto) + " acousto, " + std::to_string(dispenser) +
                               " dispenser)");
    } else {
        if (acousto < 1) throw domain_error("scenario needs at least one acousto bot");
        if (spec.targets.empty()) throw domain_error("scenario needs at least one target");
    }
}

// ---- report --------------------------------------------------------------

struct BeadOutcome {
    double delta_z_cm = 0.0;
    double delta_psi_deg = 0.0;
    bool levitated = false;
};

struct ScenarioReport {
    std::string scenario;
    std::uint64_t seed = 0;
    double dt = 0.0;
    double simulated_s = 0.0;
    std::uint64_t ticks = 0;

    std::vector<std::pair<double, control::Phase>> transitions;
    control::Phase final_phase = control::Phase::Approaching;

    NetCounters down;
    NetCounters up;
    WorldCounters world;
    std::uint64_t stale_reports = 0;
    std::uint64_t acks_applied = 0;
    std::uint64_t acks_rejected = 0;
    std::vector<std::string> diagnostics; // first few, deduplicated
    std::uint64_t diagnostics_total = 0;

    double following_entered_s = -1.0; // first Following/Visualizing entry
    double max_follow_err_m = 0.0;     // true tracking error while Following

    std::vector<double> p_max_pa;   // per target
    std::vector<double> p_final_pa; // per target, at the last tick

    std::vector<BeadOutcome> beads;
    std::vector<std::pair<std::uint8_t, Pose>> final_poses; // true, id order

    bool success = false;
    std::string reason;

    std::string csv; // t,bot_id,err_pos,err_yaw,p_at_target
};

// ---- runner ----------------------------------------------------------------

namespace detail {

inline std::vector<Vec3> sample_targets(const ScenarioSpec& spec, double t) {
    std::vector<Vec3> out;
    if (spec.kind == ScenarioKind::S3Levitation) return out;
    out.reserve(spec.targets.size());
    for (const Trajectory& tr : spec.targets) out.push_back(trajectory_at(tr, t));
    return out;
}

inline std::vector<acoustics::DrivenArray> live_scene(const World& w, const ScenarioSpec& spec,
                                                      const acoustics::TransducerElement& element) {
    std::vector<acoustics::DrivenArray> scene;
    for (const RobotUnit& u : w.robots) {
        if (u.kind != control::BotKind::Acousto || !u.has_frame) continue;
        int hinge = static_cast<int>(std::llround(u.hinge.angle_deg()));
        acoustics::DrivenArray d;
        d.model = acoustics::build_array(
            spec.board_rows, spec.board_cols, spec.board_pitch,
            control::board_pose(u.dd.pose, hinge, spec.server.board_mount_height), element);
        d.drive = proto::frame_to_drive(u.frame);
        scene.push_back(std::move(d));
    }
    return scene;
}

inline void append_csv_row(std::string& csv, double t, unsigned bot, double err_pos,
                           double err_yaw_deg, double p) {
    char buf[160];
    std::snprintf(buf, sizeof buf, "%.4f,%u,%.6f,%.4f,%.4f\n", t, bot, err_pos, err_yaw_deg, p);
    csv += buf;
}

} // namespace detail

/// End-to-end closed loop: control server and robots talk only through the
/// lossy links; the report is evaluated against true (noise-free) state.
inline ScenarioReport run_scenario(const ScenarioSpec& spec, const SimConfig& sim) {
    validate_roster(spec);

    Rng rng(sim.seed);
    Link downlink(sim.net); // server -> robots
    Link uplink(sim.net);   // tracker/acks -> server

    double p0 = spec.reference_pressure > 0.0
                    ? spec.reference_pressure
                    : acoustics::calibrated_reference_pressure(spec.medium);
    acoustics::TransducerElement element = acoustics::reference_element(p0);

    control::ContentSpec content = spec.content;
    control::ControlServer server(spec.server, content, spec.medium, element, spec.board_rows,
                                  spec.board_cols, spec.board_pitch);

    World world;
    WorldConfig wcfg;
    wcfg.dt = sim.dt;
    wcfg.drive = spec.drive;
    wcfg.bounds = sim.bounds;
    wcfg.tracker = sim.tracker;
    wcfg.classifier = spec.classifier;
    wcfg.trap = spec.content.trap;
    wcfg.board_mount_height = spec.server.board_mount_height;
    wcfg.arrival_radius = spec.arrival_radius;
    wcfg.forced_delta_z_cm = spec.forced_delta_z_cm;
    wcfg.forced_delta_psi_deg = spec.forced_delta_psi_deg;

    for (const BotSpec& b : spec.bots) {
        add_robot(world, b.id, b.kind, b.pose);
        server.registry().add(b.id, b.kind, b.pose, 0.0);
    }

    ScenarioReport rep;
    rep.scenario = scenario_name(spec.kind);
    rep.seed = sim.seed;
    rep.dt = sim.dt;
    rep.csv = "t,bot_id,err_pos,err_yaw,p_at_target\n";

    bool s3 = spec.kind == ScenarioKind::S3Levitation;
    std::vector<Vec3> eval_points =
        s3 ? std::vector<Vec3>{spec.content.trap} : detail::sample_targets(spec, 0.0);
    rep.p_max_pa.assign(eval_points.size(), 0.0);
    rep.p_final_pa.assign(eval_points.size(), 0.0);

    std::uint64_t control_every = std::max<std::uint64_t>(
        1, static_cast<std::uint64_t>(std::llround(1.0 / (spec.control_rate_hz * sim.dt))));
    double stop_at = sim.duration;
    std::set<std::string> seen_diag;

    while (world.clock < stop_at - 1e-12) {
        double t = world.clock;

        // server side: drain the uplink
        for (const Datagram& dg : uplink.deliver_due(t)) {
            proto::DecodeResult res = proto::decode(dg.bytes);
            if (!res.ok()) {
                ++rep.world.decode_failures;
                continue;
            }
            if (const auto* pr = std::get_if<proto::PoseReport>(&res.frame->message)) {
                Pose p = make_pose({proto::from_tenth_mm(pr->x_tenth_mm),
                                    proto::from_tenth_mm(pr->y_tenth_mm),
                                    proto::from_tenth_mm(pr->z_tenth_mm)},
                                   proto::from_centi_deg(pr->yaw_centi_deg));
                if (!server.registry().apply_pose(pr->source_id, p, pr->timestamp_ms, t))
                    ++rep.stale_reports;
            } else if (const auto* ack = std::get_if<proto::Ack>(&res.frame->message)) {
                (ack->status == 0 ? rep.acks_applied : rep.acks_rejected) += 1;
            }
        }

        if (world.tick % control_every == 0) {
            std::vector<Vec3> live = detail::sample_targets(spec, t);
            control::TickResult tr = server.tick(t, live);
            for (const control::Outbound& o : tr.commands)
                downlink.send(o.bot_id, proto::encode(o.message, o.bot_id, o.seq), t, rng);
            for (const std::string& d : tr.diagnostics) {
                ++rep.diagnostics_total;
                if (seen_diag.insert(d).second && rep.diagnostics.size() < 10)
                    rep.diagnostics.push_back(d);
            }
        }
        for (const control::Outbound& o : server.frames(t))
            downlink.send(o.bot_id, proto::encode(o.message, o.bot_id, o.seq), t, rng);

        world_step(world, downlink, uplink, wcfg, rng);
        double tnow = world.clock;

        // telemetry against true state
        std::vector<acoustics::DrivenArray> scene = detail::live_scene(world, spec, element);
        if (!s3) {
            std::vector<Vec3> pts = detail::sample_targets(spec, tnow);
            for (std::size_t i = 0; i < pts.size() && i < eval_points.size(); ++i)
                eval_points[i] = pts[i];
        }
        for (std::size_t i = 0; i < eval_points.size(); ++i) {
            double p = std::abs(acoustics::field_at(scene, eval_points[i], spec.medium));
            rep.p_final_pa[i] = p;
            rep.p_max_pa[i] = std::max(rep.p_max_pa[i], p);
        }

        bool following = server.phase() == control::Phase::Following;
        for (const auto& [id, st] : server.assignments()) {
            const RobotUnit* u = world.find(id);
            if (!u) continue;
            double err_pos = planar_distance(u->dd.pose.position, st.position);
            double err_yaw = std::abs(rad_to_deg(wrap_pi(u->dd.pose.yaw - st.yaw)));
            double p = std::abs(acoustics::field_at(scene, st.focus, spec.medium));
            detail::append_csv_row(rep.csv, tnow, id, err_pos, err_yaw, p);
            if (following) rep.max_follow_err_m = std::max(rep.max_follow_err_m, err_pos);
        }
        if (s3) {
            control::Station dst = control::dispenser_station(spec.content.trap, spec.server);
            for (const RobotUnit& u : world.robots) {
                if (u.kind != control::BotKind::Dispenser) continue;
                double err_pos = planar_distance(u.dd.pose.position, dst.position);
                double err_yaw = std::abs(rad_to_deg(wrap_pi(u.dd.pose.yaw - dst.yaw)));
                double p = std::abs(acoustics::field_at(scene, spec.content.trap, spec.medium));
                detail::append_csv_row(rep.csv, tnow, u.id, err_pos, err_yaw, p);
            }
            bool all_classified = !world.beads.empty();
            for (const Bead& b : world.beads)
                if (!b.classified) all_classified = false;
            if (all_classified && stop_at == sim.duration)
                stop_at = std::min(sim.duration, tnow + 0.5); // drain the acks, then stop
        }
    }

    rep.simulated_s = world.clock;
    rep.ticks = world.tick;
    rep.transitions = server.transitions();
    rep.final_phase = server.phase();
    rep.down = downlink.counters();
    rep.up = uplink.counters();
    rep.world.cmd_applied = world.counters.cmd_applied;
    rep.world.cmd_stale = world.counters.cmd_stale;
    rep.world.cmd_rejected = world.counters.cmd_rejected;
    rep.world.decode_failures += world.counters.decode_failures;
    for (const auto& [t, ph] : rep.transitions) {
        if (rep.following_entered_s < 0.0 &&
            (ph == control::Phase::Following || ph == control::Phase::Visualizing))
            rep.following_entered_s = t;
    }
    for (const Bead& b : world.beads)
        rep.beads.push_back({b.delta_z_cm, b.delta_psi_deg, b.classified && b.levitated});
    for (const RobotUnit& u : world.robots) rep.final_poses.push_back({u.id, u.dd.pose});

    char buf[200];
    if (s3) {
        if (world.beads.empty()) {
            rep.success = false;
            rep.reason = "no bead dispensed within the duration";
        } else if (!world.beads.front().classified) {
            rep.success = false;
            rep.reason = "bead still falling at the end of the run";
        } else {
            const Bead& b = world.beads.front();
            std::snprintf(buf, sizeof buf, "bead %s (delta_z %.2f cm, delta_psi %.2f deg)",
                          b.levitated ? "levitated" : "not levitated", b.delta_z_cm,
                          b.delta_psi_deg);
            rep.success = b.levitated;
            rep.reason = buf;
        }
    } else {
        if (rep.following_entered_s < 0.0) {
            rep.success = false;
            rep.reason = "never reached the following phase";
        } else if (rep.following_entered_s > spec.verdict.follow_deadline_s) {
            std::snprintf(buf, sizeof buf, "reached following at %.2f s, after the %.2f s deadline",
                          rep.following_entered_s, spec.verdict.follow_deadline_s);
            rep.success = false;
            rep.reason = buf;
        } else if (rep.max_follow_err_m > spec.verdict.follow_err_m) {
            std::snprintf(buf, sizeof buf, "tracking error %.4f m exceeded the %.4f m bound",
                          rep.max_follow_err_m, spec.verdict.follow_err_m);
            rep.success = false;
            rep.reason = buf;
        } else {
            std::snprintf(buf, sizeof buf,
                          "following from %.2f s, worst tracking error %.4f m",
                          rep.following_entered_s, rep.max_follow_err_m);
            rep.success = true;
            rep.reason = buf;
        }
    }
    return rep;
}

inline std::string report_to_json(const ScenarioReport& r) {
    nlohmann::ordered_json j;
    j["scenario"] = r.scenario;
    j["seed"] = r.seed;
    j["dt"] = r.dt;
    j["simulated_s"] = r.simulated_s;
    j["ticks"] = r.ticks;

    nlohmann::ordered_json phases = nlohmann::ordered_json::array();
    for (const auto& [t, ph] : r.transitions)
        phases.push_back({{"t", t}, {"phase", control::phase_name(ph)}});
    j["phase_transitions"] = phases;
    j["final_phase"] = control::phase_name(r.final_phase);

    j["messages"] = {{"command_sent", r.down.sent},
                     {"command_lost", r.down.lost},
                     {"command_delivered", r.down.delivered},
                     {"report_sent", r.up.sent},
                     {"report_lost", r.up.lost},
                     {"report_delivered", r.up.delivered},
                     {"commands_applied", r.world.cmd_applied},
                     {"commands_stale", r.world.cmd_stale},
                     {"commands_rejected", r.world.cmd_rejected},
                     {"decode_failures", r.world.decode_failures},
                     {"stale_reports", r.stale_reports},
                     {"acks_applied", r.acks_applied},
                     {"acks_rejected", r.acks_rejected}};

    j["following"] = {{"entered_s", r.following_entered_s}, {"max_err_m", r.max_follow_err_m}};

    nlohmann::ordered_json targets = nlohmann::ordered_json::array();
    for (std::size_t i = 0; i < r.p_max_pa.size(); ++i)
        targets.push_back({{"max_pa", r.p_max_pa[i]}, {"final_pa", r.p_final_pa[i]}});
    j["pressure"] = targets;

    nlohmann::ordered_json beads = nlohmann::ordered_json::array();
    for (const BeadOutcome& b : r.beads)
        beads.push_back({{"delta_z_cm", b.delta_z_cm},
                         {"delta_psi_deg", b.delta_psi_deg},
                         {"levitated", b.levitated}});
    j["beads"] = beads;

    nlohmann::ordered_json poses = nlohmann::ordered_json::array();
    for (const auto& [id, p] : r.final_poses)
        poses.push_back({{"id", id},
                         {"x", p.position.x},
                         {"y", p.position.y},
                         {"yaw_deg", rad_to_deg(p.yaw)}});
    j["final_poses"] = poses;

    j["diagnostics_total"] = r.diagnostics_total;
    j["diagnostics"] = r.diagnostics;
    j["verdict"] = {{"success", r.success}, {"reason", r.reason}};
    return j.dump(2) + "\n";
}

} // namespace patswarm::sim
