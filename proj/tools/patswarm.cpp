// patswarm: field maps, drive solving, scenario simulation, codec checks.
//
// Exit codes are stable across subcommands: 0 success, 1 verdict failure,
// 2 config error, 3 domain error.

#include <cctype>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "patswarm/field_io.hpp"
#include "patswarm/reference_scenes.hpp"
#include "patswarm/scenario.hpp"

namespace fs = std::filesystem;
using namespace patswarm;

namespace {

constexpr const char* kToolVersion = "0.1.0";

constexpr const char* kUsage =
    "usage: patswarm <subcommand> [flags]\n"
    "\n"
    "subcommands:\n"
    "  field     sample |p| over a plane        --config scene.json [--plane z=0.05]\n"
    "                                           [--res N] [--out dir]\n"
    "  solve     phases for target points       --config scene.json --targets x,y,z[;...]\n"
    "                                           [--method focus|gspat] [--iters N]\n"
    "                                           [--quantize] [--out dir]\n"
    "  simulate  closed-loop scenario run       --scenario s.json [--seed N] [--out dir]\n"
    "  codec     decode/re-encode hex frames    --config frames.hex\n";

// ---- flag parsing ---------------------------------------------------------

/// Mistakes on the command line itself; these also print the usage text.
struct usage_error : config_error {
    using config_error::config_error;
};

struct Args {
    std::string subcommand;
    std::map<std::string, std::string> flags;

    bool has(const std::string& k) const { return flags.count(k) != 0; }
    std::string get(const std::string& k, const std::string& fallback = "") const {
        auto it = flags.find(k);
        return it == flags.end() ? fallback : it->second;
    }
    std::string require(const std::string& k) const {
        auto it = flags.find(k);
        if (it == flags.end()) throw usage_error("missing required flag --" + k);
        return it->second;
    }
};

Args parse_args(int argc, char** argv) {
    Args a;
    if (argc < 2) throw usage_error("no subcommand given");
    a.subcommand = argv[1];
    for (int i = 2; i < argc; ++i) {
        std::string tok = argv[i];
        if (tok.rfind("--", 0) != 0) throw usage_error("unexpected argument '" + tok + "'");
        std::string key = tok.substr(2);
        if (key == "quantize") {
            a.flags[key] = "1";
            continue;
        }
        if (i + 1 >= argc) throw usage_error("flag --" + key + " needs a value");
        a.flags[key] = argv[++i];
    }
    return a;
}

// ---- shared plumbing ------------------------------------------------------

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw config_error("cannot open config file '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw config_error("cannot write '" + path.string() + "'");
    out << text;
}

std::string hex_digest(std::uint64_t d) {
    char buf[20];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(d));
    return buf;
}

/// Written into every output directory so a run can be reproduced from its
/// artifacts alone.
void write_manifest(const fs::path& out_dir, const std::string& subcommand,
                    const std::vector<std::pair<std::string, std::string>>& configs,
                    std::uint64_t seed) {
    nlohmann::ordered_json m;
    m["subcommand"] = subcommand;
    m["configs"] = nlohmann::ordered_json::array();
    for (const auto& [path, text] : configs) {
        nlohmann::ordered_json c;
        c["path"] = path;
        c["digest"] = hex_digest(sim::fnv1a64(text));
        m["configs"].push_back(c);
    }
    m["seed"] = seed;
    m["out"] = out_dir.string();
    m["tool_version"] = kToolVersion;
    write_text(out_dir / "manifest.json", m.dump(2) + "\n");
}

fs::path make_out_dir(const Args& args) {
    fs::path dir = args.get("out", "out");
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw config_error("cannot create output directory '" + dir.string() + "'");
    return dir;
}

std::vector<double> parse_number_list(const std::string& text, char sep) {
    std::vector<double> out;
    std::string item;
    std::istringstream in(text);
    while (std::getline(in, item, sep)) {
        try {
            std::size_t used = 0;
            double v = std::stod(item, &used);
            while (used < item.size() && std::isspace(static_cast<unsigned char>(item[used])))
                ++used;
            if (used != item.size()) throw std::invalid_argument(item);
            out.push_back(v);
        } catch (const std::exception&) {
            throw config_error("cannot parse number '" + item + "'");
        }
    }
    return out;
}

std::vector<Vec3> parse_targets(const std::string& text) {
    std::vector<Vec3> out;
    std::string group;
    std::istringstream in(text);
    while (std::getline(in, group, ';')) {
        std::vector<double> v = parse_number_list(group, ',');
        if (v.size() != 3) throw config_error("target '" + group + "' must be x,y,z");
        out.push_back({v[0], v[1], v[2]});
    }
    if (out.empty()) throw config_error("no targets given");
    return out;
}

// ---- scene config ---------------------------------------------------------

struct SceneConfig {
    Medium medium = acoustics::reference_medium();
    int rows = acoustics::kReferenceRows;
    int cols = acoustics::kReferenceCols;
    double pitch = acoustics::kReferencePitch;
    double reference_pressure = -1.0; // < 0: calibrate for the medium
    std::vector<Pose> boards;
    std::optional<Vec3> focus;
    double scan_half_width = 0.04;
};

SceneConfig load_scene(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw config_error("scene parse error at " + sim::detail::line_anchor(text, e.byte) +
                           ": " + e.what());
    }

    SceneConfig s;
    sim::detail::ObjReader top(j, "scene");
    if (const nlohmann::json* m = top.object("medium")) {
        sim::detail::ObjReader r(*m, "medium");
        s.medium.speed_of_sound = r.num("speed_of_sound", s.medium.speed_of_sound);
        s.medium.frequency = r.num("frequency", s.medium.frequency);
        r.finish();
    }
    if (const nlohmann::json* b = top.object("board")) {
        sim::detail::ObjReader r(*b, "board");
        s.rows = static_cast<int>(r.integer("rows", s.rows));
        s.cols = static_cast<int>(r.integer("cols", s.cols));
        s.pitch = r.num("pitch_m", s.pitch);
        s.reference_pressure = r.num("reference_pressure", s.reference_pressure);
        r.finish();
        if (s.rows < 1 || s.cols < 1) throw config_error("board must have at least one element");
        if (!(s.pitch > 0.0)) throw config_error("board pitch must be positive");
    }
    if (const nlohmann::json* arr = top.array("arrays")) {
        for (std::size_t i = 0; i < arr->size(); ++i) {
            std::string path = "arrays[" + std::to_string(i) + "]";
            sim::detail::ObjReader r((*arr)[i], path);
            Vec3 pos{r.num("x", 0.0), r.num("y", 0.0), r.num("z", 0.0)};
            double yaw = deg_to_rad(r.num("yaw_deg", 0.0));
            double pitch = deg_to_rad(r.num("pitch_deg", 0.0));
            r.finish();
            s.boards.push_back(make_pose(pos, yaw, pitch));
        }
    }
    if (const nlohmann::json* f = top.object("focus"))
        s.focus = sim::detail::read_vec3(*f, "focus");
    if (const nlohmann::json* sc = top.object("scan")) {
        sim::detail::ObjReader r(*sc, "scan");
        s.scan_half_width = r.num("half_width_m", s.scan_half_width);
        r.finish();
        if (!(s.scan_half_width > 0.0)) throw config_error("scan.half_width_m must be positive");
    }
    top.finish();

    if (!(s.medium.speed_of_sound > 0.0) || !(s.medium.frequency > 0.0))
        throw config_error("medium must have positive speed of sound and frequency");
    return s;
}

std::vector<acoustics::PhasedArrayModel> build_boards(const SceneConfig& s) {
    double p0 = s.reference_pressure > 0.0
                    ? s.reference_pressure
                    : acoustics::calibrated_reference_pressure(s.medium);
    acoustics::TransducerElement element = acoustics::reference_element(p0);
    std::vector<acoustics::PhasedArrayModel> out;
    for (const Pose& pose : s.boards)
        out.push_back(acoustics::build_array(s.rows, s.cols, s.pitch, pose, element));
    return out;
}

// ---- field ----------------------------------------------------------------

struct PlaneSpec {
    char axis = 'z';
    double value = 0.05;
};

PlaneSpec parse_plane(const std::string& text) {
    if (text.size() < 3 || text[1] != '=' ||
        (text[0] != 'x' && text[0] != 'y' && text[0] != 'z'))
        throw config_error("plane must be x=<v>, y=<v>, or z=<v>, got '" + text + "'");
    PlaneSpec p;
    p.axis = text[0];
    std::vector<double> v = parse_number_list(text.substr(2), ',');
    if (v.size() != 1) throw config_error("plane takes one value, got '" + text + "'");
    p.value = v[0];
    return p;
}

int cmd_field(const Args& args) {
    std::string config_path = args.require("config");
    std::string config_text = slurp(config_path);
    SceneConfig scene = load_scene(config_text);

    PlaneSpec plane = parse_plane(args.get("plane", "z=0.05"));
    long res = 81;
    if (args.has("res")) {
        res = std::strtol(args.get("res").c_str(), nullptr, 10);
        if (res < 1 || res > 4096) throw config_error("--res must be in 1..4096");
    }

    // the window is centred on the focus when the scene has one
    Vec3 centre = scene.focus.value_or(Vec3{0.0, 0.0, plane.value});
    double half = scene.scan_half_width;
    double spacing = res > 1 ? 2.0 * half / static_cast<double>(res - 1) : 1.0;

    acoustics::GridSpec spec;
    spec.resolution = spacing;
    spec.nu = static_cast<int>(res);
    spec.nv = static_cast<int>(res);
    switch (plane.axis) {
        case 'x':
            spec.axis_u = {0.0, 1.0, 0.0};
            spec.axis_v = {0.0, 0.0, 1.0};
            spec.origin = {plane.value, centre.y - half, centre.z - half};
            break;
        case 'y':
            spec.axis_u = {1.0, 0.0, 0.0};
            spec.axis_v = {0.0, 0.0, 1.0};
            spec.origin = {centre.x - half, plane.value, centre.z - half};
            break;
        default:
            spec.axis_u = {1.0, 0.0, 0.0};
            spec.axis_v = {0.0, 1.0, 0.0};
            spec.origin = {centre.x - half, centre.y - half, plane.value};
            break;
    }
    if (res == 1) spec.origin = plane.axis == 'x'   ? Vec3{plane.value, centre.y, centre.z}
                                : plane.axis == 'y' ? Vec3{centre.x, plane.value, centre.z}
                                                    : Vec3{centre.x, centre.y, plane.value};

    std::vector<acoustics::PhasedArrayModel> boards = build_boards(scene);
    std::vector<acoustics::DrivenArray> driven;
    for (const acoustics::PhasedArrayModel& b : boards) {
        acoustics::DriveState d = scene.focus
                                      ? acoustics::focus_phases(b, *scene.focus, scene.medium)
                                      : acoustics::uniform_drive(b.size());
        driven.push_back({b, d});
    }

    acoustics::FieldGrid grid = acoustics::sample_grid(driven, spec, scene.medium);

    fs::path out_dir = make_out_dir(args);
    std::ostringstream csv;
    acoustics::write_field_csv(grid, csv);
    write_text(out_dir / "field.csv", csv.str());
    std::ostringstream pgm;
    acoustics::write_field_pgm(grid, pgm);
    write_text(out_dir / "field.pgm", pgm.str());
    write_manifest(out_dir, "field", {{config_path, config_text}}, 0);

    double peak = 0.0;
    Vec3 at = spec.origin;
    for (int r = 0; r < grid.spec.nv; ++r) {
        for (int c = 0; c < grid.spec.nu; ++c) {
            double m = std::abs(grid.at(r, c));
            if (m > peak) {
                peak = m;
                at = grid.point_at(r, c);
            }
        }
    }
    std::printf("%dx%d samples on plane %c=%g\n", grid.spec.nv, grid.spec.nu, plane.axis,
                plane.value);
    std::printf("peak |p| %.2f Pa at (%.4f, %.4f, %.4f)\n", peak, at.x, at.y, at.z);
    std::printf("wrote %s\n", (out_dir / "field.csv").string().c_str());
    return 0;
}

// ---- solve ----------------------------------------------------------------

std::string payload_hex(const proto::AcousticFrame& frame) {
    std::vector<std::uint8_t> bytes = proto::encode(frame, 0, 0);
    std::string hex;
    hex.reserve((bytes.size() - proto::kHeaderSize) * 2);
    static const char* digits = "0123456789abcdef";
    for (std::size_t i = proto::kHeaderSize; i < bytes.size(); ++i) {
        hex.push_back(digits[bytes[i] >> 4]);
        hex.push_back(digits[bytes[i] & 0x0F]);
    }
    return hex;
}

int cmd_solve(const Args& args) {
    std::string config_path = args.require("config");
    std::string config_text = slurp(config_path);
    SceneConfig scene = load_scene(config_text);
    std::vector<Vec3> targets = parse_targets(args.require("targets"));

    std::string method = args.get("method", "focus");
    long iters = 50;
    if (args.has("iters")) {
        iters = std::strtol(args.get("iters").c_str(), nullptr, 10);
        if (iters < 1 || iters > 100000) throw config_error("--iters must be in 1..100000");
    }

    std::vector<acoustics::PhasedArrayModel> boards = build_boards(scene);
    if (boards.empty()) throw domain_error("solve needs at least one array in the scene");

    std::vector<acoustics::DriveState> drives;
    if (method == "focus") {
        if (targets.size() != 1)
            throw domain_error("method focus takes exactly one target (got " +
                               std::to_string(targets.size()) + ")");
        for (const acoustics::PhasedArrayModel& b : boards)
            drives.push_back(acoustics::focus_phases(b, targets[0], scene.medium));
    } else if (method == "gspat") {
        acoustics::MultiPointSolution sol = acoustics::multipoint_solve(
            boards, targets, static_cast<int>(iters), scene.medium);
        drives = std::move(sol.drives);
    } else {
        throw config_error("--method must be focus or gspat, got '" + method + "'");
    }

    std::vector<acoustics::DrivenArray> driven;
    for (std::size_t i = 0; i < boards.size(); ++i) driven.push_back({boards[i], drives[i]});
    std::vector<acoustics::Complex> achieved;
    for (const Vec3& t : targets) achieved.push_back(acoustics::field_at(driven, t, scene.medium));

    nlohmann::ordered_json out;
    out["method"] = method;
    if (method == "gspat") out["iterations"] = iters;
    out["targets"] = nlohmann::ordered_json::array();
    for (std::size_t i = 0; i < targets.size(); ++i) {
        nlohmann::ordered_json t;
        t["x"] = targets[i].x;
        t["y"] = targets[i].y;
        t["z"] = targets[i].z;
        t["achieved_pa"] = std::abs(achieved[i]);
        out["targets"].push_back(t);
    }
    out["boards"] = nlohmann::ordered_json::array();
    for (std::size_t i = 0; i < drives.size(); ++i) {
        nlohmann::ordered_json b;
        b["phases_rad"] = drives[i].phases;
        b["amplitudes"] = drives[i].amplitudes;
        if (args.has("quantize")) {
            proto::QuantizedDrive q = proto::quantize_drive(drives[i]);
            b["frame_payload_hex"] =
                payload_hex(proto::make_acoustic_frame(static_cast<std::uint16_t>(i), q));
        }
        out["boards"].push_back(b);
    }

    fs::path out_dir = make_out_dir(args);
    write_text(out_dir / "drives.json", out.dump(2) + "\n");
    write_manifest(out_dir, "solve", {{config_path, config_text}}, 0);

    for (std::size_t i = 0; i < targets.size(); ++i)
        std::printf("target %zu (%.4f, %.4f, %.4f): |p| = %.2f Pa\n", i, targets[i].x,
                    targets[i].y, targets[i].z, std::abs(achieved[i]));
    std::printf("wrote %s\n", (out_dir / "drives.json").string().c_str());
    return 0;
}

// ---- simulate ---------------------------------------------------------------

int cmd_simulate(const Args& args) {
    std::string scenario_path = args.require("scenario");
    std::string scenario_text = slurp(scenario_path);
    sim::LoadedScenario loaded = sim::load_scenario(scenario_text);
    if (args.has("seed")) {
        char* end = nullptr;
        loaded.sim.seed = std::strtoull(args.get("seed").c_str(), &end, 10);
        if (end == nullptr || *end != '\0') throw config_error("--seed must be an integer");
    }

    sim::ScenarioReport rep = sim::run_scenario(loaded.spec, loaded.sim);

    fs::path out_dir = make_out_dir(args);
    write_text(out_dir / "report.json", sim::report_to_json(rep));
    write_text(out_dir / "ticks.csv", rep.csv);
    write_manifest(out_dir, "simulate", {{scenario_path, scenario_text}}, loaded.sim.seed);

    std::printf("%s seed %llu: %s\n", rep.scenario.c_str(),
                static_cast<unsigned long long>(rep.seed), rep.reason.c_str());
    std::printf("wrote %s\n", (out_dir / "report.json").string().c_str());
    return rep.success ? 0 : 1;
}

// ---- codec ------------------------------------------------------------------

std::optional<std::vector<std::uint8_t>> parse_hex_line(const std::string& line) {
    std::vector<std::uint8_t> bytes;
    int hi = -1;
    for (char ch : line) {
        if (std::isspace(static_cast<unsigned char>(ch))) continue;
        int v;
        if (ch >= '0' && ch <= '9') v = ch - '0';
        else if (ch >= 'a' && ch <= 'f') v = ch - 'a' + 10;
        else if (ch >= 'A' && ch <= 'F') v = ch - 'A' + 10;
        else return std::nullopt;
        if (hi < 0) {
            hi = v;
        } else {
            bytes.push_back(static_cast<std::uint8_t>(hi << 4 | v));
            hi = -1;
        }
    }
    if (hi >= 0) return std::nullopt; // odd digit count
    return bytes;
}

int cmd_codec(const Args& args) {
    std::string path = args.require("config");
    std::string text = slurp(path);

    int line_no = 0, frames = 0, failures = 0;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        ++line_no;
        bool blank = true;
        for (char ch : line)
            if (!std::isspace(static_cast<unsigned char>(ch))) blank = false;
        if (blank) continue;

        auto bytes = parse_hex_line(line);
        if (!bytes) {
            std::printf("line %d: not valid hex\n", line_no);
            ++failures;
            continue;
        }
        proto::DecodeResult res = proto::decode(*bytes);
        if (!res.ok()) {
            std::printf("line %d: decode error %s\n", line_no, proto::decode_error_name(res.error));
            ++failures;
            continue;
        }
        std::vector<std::uint8_t> again = proto::encode(res.frame->message, res.frame->bot_id,
                                                        res.frame->seq, res.frame->flags);
        if (again != *bytes) {
            std::printf("line %d: re-encode differs from input\n", line_no);
            ++failures;
            continue;
        }
        ++frames;
    }

    if (failures > 0) {
        std::printf("%d frame(s) failed, %d byte-exact\n", failures, frames);
        return 1;
    }
    std::printf("%d frame(s) byte-exact\n", frames);
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    try {
        Args args = parse_args(argc, argv);
        if (args.subcommand == "field") return cmd_field(args);
        if (args.subcommand == "solve") return cmd_solve(args);
        if (args.subcommand == "simulate") return cmd_simulate(args);
        if (args.subcommand == "codec") return cmd_codec(args);
        throw usage_error("unknown subcommand '" + args.subcommand + "'");
    } catch (const domain_error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 3;
    } catch (const usage_error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        std::fprintf(stderr, "%s", kUsage);
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    }
}
