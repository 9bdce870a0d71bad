// End-to-end checks of the patswarm binary: spawns the real executable and
// inspects exit codes, stdout, and the artifacts it writes.
#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <nlohmann/json.hpp>

#include "patswarm/scenario.hpp"

namespace fs = std::filesystem;

namespace {

struct RunResult {
    int exit_code = -1;
    std::string output; // stdout and stderr interleaved
};

RunResult run_cli(const std::string& args) {
    std::string cmd = std::string(PATSWARM_CLI_BIN) + " " + args + " 2>&1";
    FILE* pipe = popen(cmd.c_str(), "r");
    REQUIRE(pipe != nullptr);
    RunResult r;
    char buf[4096];
    std::size_t n;
    while ((n = fread(buf, 1, sizeof buf, pipe)) > 0) r.output.append(buf, n);
    int status = pclose(pipe);
    r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return r;
}

fs::path fresh_dir(const std::string& tag) {
    fs::path dir = fs::temp_directory_path() / ("patswarm_cli_" + tag);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

std::string read_file(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    REQUIRE(in.good());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const fs::path& p, const std::string& text) {
    std::ofstream out(p, std::ios::binary);
    out << text;
}

const std::string kRepo = PATSWARM_SOURCE_DIR;

} // namespace

TEST_CASE("cli field") {
    SECTION("focused array: argmax row lands on the focus") {
        fs::path out = fresh_dir("field_focus");
        RunResult r = run_cli("field --config " + kRepo +
                              "/configs/single_focus.json --plane z=0.05 --res 41 --out " +
                              out.string());
        INFO(r.output);
        REQUIRE(r.exit_code == 0);

        std::istringstream csv(read_file(out / "field.csv"));
        std::string line;
        std::getline(csv, line); // header
        double best = -1.0, bx = 0, by = 0, bz = 0;
        while (std::getline(csv, line)) {
            double x, y, z, re, im, mag;
            REQUIRE(std::sscanf(line.c_str(), "%lf,%lf,%lf,%lf,%lf,%lf", &x, &y, &z, &re, &im,
                                &mag) == 6);
            if (mag > best) {
                best = mag;
                bx = x;
                by = y;
                bz = z;
            }
        }
        CHECK(bx == Catch::Approx(0.0).margin(1e-12));
        CHECK(by == Catch::Approx(0.0).margin(1e-12));
        CHECK(bz == Catch::Approx(0.05).margin(1e-12));
        CHECK(best == Catch::Approx(4469.90).epsilon(1e-4));
        CHECK(fs::exists(out / "field.pgm"));
        CHECK(fs::exists(out / "manifest.json"));
    }

    SECTION("empty scene: all-zero grid, exit 0") {
        fs::path out = fresh_dir("field_empty");
        write_file(out / "scene.json", "{\"arrays\": []}");
        RunResult r = run_cli("field --config " + (out / "scene.json").string() +
                              " --plane z=0.05 --res 5 --out " + out.string());
        INFO(r.output);
        REQUIRE(r.exit_code == 0);
        std::istringstream csv(read_file(out / "field.csv"));
        std::string line;
        std::getline(csv, line);
        int rows = 0;
        while (std::getline(csv, line)) {
            double x, y, z, re, im, mag;
            REQUIRE(std::sscanf(line.c_str(), "%lf,%lf,%lf,%lf,%lf,%lf", &x, &y, &z, &re, &im,
                                &mag) == 6);
            CHECK(mag == 0.0);
            ++rows;
        }
        CHECK(rows == 25);
    }

    SECTION("missing config file: exit 2") {
        RunResult r = run_cli("field --config /no/such/file.json");
        CHECK(r.exit_code == 2);
    }

    SECTION("malformed config: exit 2 with a line anchor") {
        fs::path out = fresh_dir("field_bad");
        write_file(out / "scene.json", "{\n  \"arrays\": oops\n}");
        RunResult r = run_cli("field --config " + (out / "scene.json").string());
        CHECK(r.exit_code == 2);
        CHECK(r.output.find("line 2") != std::string::npos);
    }
}

TEST_CASE("cli solve") {
    const std::string cfg = kRepo + "/configs/single_focus.json";

    SECTION("method focus reaches the calibration pressure") {
        fs::path out = fresh_dir("solve_focus");
        RunResult r = run_cli("solve --config " + cfg + " --targets 0,0,0.05 --out " +
                              out.string());
        INFO(r.output);
        REQUIRE(r.exit_code == 0);
        auto j = nlohmann::json::parse(read_file(out / "drives.json"));
        REQUIRE(j["targets"].size() == 1);
        CHECK(j["targets"][0]["achieved_pa"].get<double>() == Catch::Approx(4469.90).epsilon(1e-4));
        REQUIRE(j["boards"].size() == 1);
        CHECK(j["boards"][0]["phases_rad"].size() == 64);
    }

    SECTION("gspat agrees with focus within one percent") {
        fs::path a = fresh_dir("solve_a");
        fs::path b = fresh_dir("solve_b");
        RunResult ra = run_cli("solve --config " + cfg + " --targets 0,0,0.05 --out " + a.string());
        RunResult rb = run_cli("solve --config " + cfg +
                               " --targets 0,0,0.05 --method gspat --iters 50 --out " + b.string());
        REQUIRE(ra.exit_code == 0);
        REQUIRE(rb.exit_code == 0);
        auto ja = nlohmann::json::parse(read_file(a / "drives.json"));
        auto jb = nlohmann::json::parse(read_file(b / "drives.json"));
        double pa = ja["targets"][0]["achieved_pa"].get<double>();
        double pb = jb["targets"][0]["achieved_pa"].get<double>();
        CHECK(std::abs(pa - pb) / pa < 0.01);
    }

    SECTION("duplicate targets: exit 3") {
        RunResult r = run_cli("solve --config " + cfg +
                              " --targets \"0,0,0.05;0,0,0.05\" --method gspat --out " +
                              fresh_dir("solve_dup").string());
        CHECK(r.exit_code == 3);
        CHECK(r.output.find("duplicate") != std::string::npos);
    }

    SECTION("--quantize emits the 130-byte frame payload in hex") {
        fs::path out = fresh_dir("solve_q");
        RunResult r = run_cli("solve --config " + cfg + " --targets 0,0,0.05 --quantize --out " +
                              out.string());
        REQUIRE(r.exit_code == 0);
        auto j = nlohmann::json::parse(read_file(out / "drives.json"));
        std::string hex = j["boards"][0]["frame_payload_hex"].get<std::string>();
        CHECK(hex.size() == 260); // 130 bytes
        CHECK(hex.find_first_not_of("0123456789abcdef") == std::string::npos);
    }
}

TEST_CASE("cli simulate") {
    SECTION("shipped haptics scenario exits 0") {
        fs::path out = fresh_dir("sim_s1");
        RunResult r = run_cli("simulate --scenario " + kRepo + "/scenarios/s1_haptics.json --out " +
                              out.string());
        INFO(r.output);
        REQUIRE(r.exit_code == 0);
        auto j = nlohmann::json::parse(read_file(out / "report.json"));
        CHECK(j["verdict"]["success"].get<bool>());
        CHECK(j["following"]["max_err_m"].get<double>() <= 0.02);
        CHECK(fs::exists(out / "ticks.csv"));
        CHECK(fs::exists(out / "manifest.json"));
    }

    SECTION("forced drop error reports not levitated and exits 1") {
        fs::path out = fresh_dir("sim_forced");
        auto j = nlohmann::json::parse(read_file(kRepo + "/scenarios/s3_levitation.json"));
        j["debug"]["forced_delta_z_cm"] = 0.46;
        write_file(out / "s3.json", j.dump(2));
        RunResult r = run_cli("simulate --scenario " + (out / "s3.json").string() + " --out " +
                              out.string());
        INFO(r.output);
        CHECK(r.exit_code == 1);
        CHECK(r.output.find("not levitated") != std::string::npos);
        auto rep = nlohmann::json::parse(read_file(out / "report.json"));
        CHECK(!rep["verdict"]["success"].get<bool>());
        CHECK(rep["beads"][0]["levitated"].get<bool>() == false);
    }

    SECTION("same seed twice: identical report digests") {
        fs::path a = fresh_dir("sim_d1");
        fs::path b = fresh_dir("sim_d2");
        std::string base = "simulate --scenario " + kRepo + "/scenarios/s3_levitation.json --seed 5";
        REQUIRE(run_cli(base + " --out " + a.string()).exit_code == 0);
        REQUIRE(run_cli(base + " --out " + b.string()).exit_code == 0);
        CHECK(patswarm::sim::fnv1a64(read_file(a / "report.json")) ==
              patswarm::sim::fnv1a64(read_file(b / "report.json")));
        CHECK(patswarm::sim::fnv1a64(read_file(a / "ticks.csv")) ==
              patswarm::sim::fnv1a64(read_file(b / "ticks.csv")));
    }

    SECTION("roster shortfall: exit 3") {
        fs::path out = fresh_dir("sim_roster");
        write_file(out / "s3.json",
                   R"({"scenario": "s3_levitation",
                       "bots": [{"id": 1, "kind": "acousto", "x": -0.1, "y": 0},
                                {"id": 2, "kind": "acousto", "x": 0.1, "y": 0}]})");
        RunResult r = run_cli("simulate --scenario " + (out / "s3.json").string());
        CHECK(r.exit_code == 3);
        CHECK(r.output.find("dispenser") != std::string::npos);
    }
}

TEST_CASE("cli codec") {
    const std::string golden = kRepo + "/tests/data/golden_frames.hex";

    SECTION("golden vectors are byte-exact") {
        RunResult r = run_cli("codec --config " + golden);
        INFO(r.output);
        CHECK(r.exit_code == 0);
        CHECK(r.output.find("byte-exact") != std::string::npos);
    }

    SECTION("corrupted magic is reported with its line number") {
        fs::path out = fresh_dir("codec_magic");
        std::string text = read_file(golden);
        text[0] = 'f';
        text[1] = 'f'; // first byte of line 1 is now 0xff
        write_file(out / "frames.hex", text);
        RunResult r = run_cli("codec --config " + (out / "frames.hex").string());
        CHECK(r.exit_code == 1);
        CHECK(r.output.find("line 1") != std::string::npos);
        CHECK(r.output.find("bad_magic") != std::string::npos);
    }

    SECTION("truncated frame is reported with the truncation code") {
        fs::path out = fresh_dir("codec_trunc");
        std::istringstream in(read_file(golden));
        std::string first;
        std::getline(in, first);
        REQUIRE(first.size() > 16);
        write_file(out / "frames.hex", first.substr(0, 16) + "\n");
        RunResult r = run_cli("codec --config " + (out / "frames.hex").string());
        CHECK(r.exit_code == 1);
        CHECK(r.output.find("truncated") != std::string::npos);
    }
}
