#include <catch2/catch_amalgamated.hpp>

#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

#include "patswarm/rng.hpp"
#include "patswarm/wire.hpp"

using namespace patswarm;
using namespace patswarm::proto;

namespace {

std::vector<std::string> read_lines(const std::string& path) {
    std::ifstream in(path);
    REQUIRE(in.good());
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line))
        if (!line.empty()) lines.push_back(line);
    return lines;
}

Message random_message(Rng& rng) {
    switch (rng.uniform_int(1, 7)) {
        case 1: {
            MoveTo m;
            m.x_tenth_mm = static_cast<std::int32_t>(rng.uniform_int(-2000000, 2000000));
            m.y_tenth_mm = static_cast<std::int32_t>(rng.uniform_int(-2000000, 2000000));
            m.yaw_centi_deg = static_cast<std::int16_t>(rng.uniform_int(-18000, 18000));
            m.speed_mm_s = static_cast<std::uint16_t>(rng.uniform_int(0, 500));
            return m;
        }
        case 2: return SetHinge{static_cast<std::uint16_t>(rng.uniform_int(0, 9000))};
        case 3: return Dispense{static_cast<std::uint8_t>(rng.uniform_int(0, 255))};
        case 4: {
            AcousticFrame f;
            f.frame_id = static_cast<std::uint16_t>(rng.uniform_int(0, 65535));
            for (auto& pa : f.levels) {
                pa.phase = static_cast<std::uint8_t>(rng.uniform_int(0, 255));
                pa.amp = static_cast<std::uint8_t>(rng.uniform_int(0, 255));
            }
            return f;
        }
        case 5: return Stop{};
        case 6: {
            PoseReport p;
            p.source_id = static_cast<std::uint8_t>(rng.uniform_int(0, 255));
            p.x_tenth_mm = static_cast<std::int32_t>(rng.uniform_int(-2000000, 2000000));
            p.y_tenth_mm = static_cast<std::int32_t>(rng.uniform_int(-2000000, 2000000));
            p.z_tenth_mm = static_cast<std::int32_t>(rng.uniform_int(-2000000, 2000000));
            p.yaw_centi_deg = static_cast<std::int16_t>(rng.uniform_int(-18000, 18000));
            p.timestamp_ms = static_cast<std::uint32_t>(rng.uniform_int(0, 100000000));
            return p;
        }
        default: {
            Ack a;
            a.acked_seq = static_cast<std::uint16_t>(rng.uniform_int(0, 65535));
            a.status = static_cast<std::uint8_t>(rng.uniform_int(0, 1));
            return a;
        }
    }
}

bool same_message(const Message& a, const Message& b) {
    if (a.index() != b.index()) return false;
    if (const auto* m = std::get_if<MoveTo>(&a)) {
        const auto& n = std::get<MoveTo>(b);
        return m->x_tenth_mm == n.x_tenth_mm && m->y_tenth_mm == n.y_tenth_mm &&
               m->yaw_centi_deg == n.yaw_centi_deg && m->speed_mm_s == n.speed_mm_s;
    }
    if (const auto* m = std::get_if<SetHinge>(&a))
        return m->target_centi_deg == std::get<SetHinge>(b).target_centi_deg;
    if (const auto* m = std::get_if<Dispense>(&a))
        return m->count == std::get<Dispense>(b).count;
    if (const auto* m = std::get_if<AcousticFrame>(&a)) {
        const auto& n = std::get<AcousticFrame>(b);
        if (m->frame_id != n.frame_id) return false;
        for (std::size_t i = 0; i < kElementsPerFrame; ++i)
            if (m->levels[i].phase != n.levels[i].phase || m->levels[i].amp != n.levels[i].amp)
                return false;
        return true;
    }
    if (std::get_if<Stop>(&a)) return true;
    if (const auto* m = std::get_if<PoseReport>(&a)) {
        const auto& n = std::get<PoseReport>(b);
        return m->source_id == n.source_id && m->x_tenth_mm == n.x_tenth_mm &&
               m->y_tenth_mm == n.y_tenth_mm && m->z_tenth_mm == n.z_tenth_mm &&
               m->yaw_centi_deg == n.yaw_centi_deg && m->timestamp_ms == n.timestamp_ms;
    }
    const auto& m = std::get<Ack>(a);
    const auto& n = std::get<Ack>(b);
    return m.acked_seq == n.acked_seq && m.status == n.status;
}

} // namespace

TEST_CASE("hand-checked frames") {
    CHECK(to_hex(encode(Stop{}, 3, 7)) == "41420105030007000000");
    CHECK(to_hex(encode(SetHinge{4500}, 1, 1)) == "414201020100010002009411");
    CHECK(to_hex(encode(MoveTo{1000, -500, 9000, 100}, 2, 258)) ==
          "41420101020002010c00e80300000cfeffff28236400");
}

TEST_CASE("shipped golden vectors decode and re-encode byte-exact") {
    auto lines = read_lines(std::string(PATSWARM_SOURCE_DIR) + "/tests/data/golden_frames.hex");
    REQUIRE(lines.size() == 7);
    for (const auto& line : lines) {
        auto bytes = from_hex(line);
        REQUIRE(bytes.has_value());
        DecodeResult r = decode(*bytes);
        REQUIRE(r.ok());
        auto again = encode(r.frame->message, r.frame->bot_id, r.frame->seq, r.frame->flags);
        CHECK(to_hex(again) == line);
    }

    // field content of a few lines, pinned against the layout table
    auto check = [&](std::size_t idx) {
        auto bytes = from_hex(lines[idx]);
        return decode(*bytes);
    };
    {
        DecodeResult r = check(2);
        auto m = std::get<MoveTo>(r.frame->message);
        CHECK(r.frame->bot_id == 2);
        CHECK(r.frame->seq == 258);
        CHECK(m.x_tenth_mm == 1000);
        CHECK(m.y_tenth_mm == -500);
        CHECK(m.yaw_centi_deg == 9000);
        CHECK(m.speed_mm_s == 100);
    }
    {
        DecodeResult r = check(5);
        auto m = std::get<PoseReport>(r.frame->message);
        CHECK(r.frame->seq == 40000);
        CHECK(m.source_id == 1);
        CHECK(m.x_tenth_mm == 250);
        CHECK(m.y_tenth_mm == -250);
        CHECK(m.z_tenth_mm == 1200);
        CHECK(m.yaw_centi_deg == -4500);
        CHECK(m.timestamp_ms == 123456);
    }
    {
        DecodeResult r = check(6);
        auto m = std::get<AcousticFrame>(r.frame->message);
        CHECK(m.frame_id == 1);
        for (std::size_t i = 0; i < kElementsPerFrame; ++i) {
            CHECK(m.levels[i].phase == static_cast<int>(i));
            CHECK(m.levels[i].amp == static_cast<int>(255 - i));
        }
    }
}

TEST_CASE("encoded length is header plus fixed payload length") {
    CHECK(encode(MoveTo{}, 0, 0).size() == 10 + 12);
    CHECK(encode(SetHinge{}, 0, 0).size() == 10 + 2);
    CHECK(encode(Dispense{}, 0, 0).size() == 10 + 1);
    CHECK(encode(AcousticFrame{}, 0, 0).size() == 10 + 130);
    CHECK(encode(Stop{}, 0, 0).size() == 10 + 0);
    CHECK(encode(PoseReport{}, 0, 0).size() == 10 + 19);
    CHECK(encode(Ack{}, 0, 0).size() == 10 + 3);
}

TEST_CASE("round-trip identity over randomized messages") {
    Rng rng(0xC0DEC);
    for (int i = 0; i < 100000; ++i) {
        Message m = random_message(rng);
        auto bot = static_cast<std::uint8_t>(rng.uniform_int(0, 255));
        auto seq = static_cast<std::uint16_t>(rng.uniform_int(0, 65535));
        auto bytes = encode(m, bot, seq);
        DecodeResult r = decode(bytes);
        REQUIRE(r.ok());
        REQUIRE(r.frame->bot_id == bot);
        REQUIRE(r.frame->seq == seq);
        REQUIRE(r.frame->flags == 0);
        REQUIRE(same_message(r.frame->message, m));
        REQUIRE(to_hex(encode(r.frame->message, bot, seq)) == to_hex(bytes));
    }
}

TEST_CASE("decode error taxonomy") {
    auto valid = encode(SetHinge{4500}, 1, 1);

    SECTION("bad magic wins even on a single byte") {
        std::vector<std::uint8_t> one{0x00};
        CHECK(decode(one).error == DecodeError::BadMagic);
        std::vector<std::uint8_t> two{0x41, 0x43};
        CHECK(decode(two).error == DecodeError::BadMagic);
        auto bad = valid;
        bad[1] = 0x99;
        CHECK(decode(bad).error == DecodeError::BadMagic);
    }
    SECTION("empty or short input is truncated") {
        std::vector<std::uint8_t> empty;
        CHECK(decode(empty).error == DecodeError::Truncated);
        std::vector<std::uint8_t> nine(valid.begin(), valid.begin() + 9);
        CHECK(decode(nine).error == DecodeError::Truncated);
    }
    SECTION("unknown version") {
        auto bad = valid;
        bad[2] = 2;
        CHECK(decode(bad).error == DecodeError::UnknownVersion);
    }
    SECTION("unknown type") {
        auto bad = valid;
        bad[3] = 0;
        CHECK(decode(bad).error == DecodeError::UnknownType);
        bad[3] = 8;
        CHECK(decode(bad).error == DecodeError::UnknownType);
    }
    SECTION("version outranks type") {
        auto bad = valid;
        bad[2] = 9;
        bad[3] = 0;
        CHECK(decode(bad).error == DecodeError::UnknownVersion);
    }
    SECTION("payload shorter than declared is truncated") {
        auto frame = encode(AcousticFrame{}, 0, 0);
        frame.pop_back(); // 129 of 130 payload bytes
        CHECK(decode(frame).error == DecodeError::Truncated);
    }
    SECTION("trailing bytes are a length mismatch") {
        auto bad = valid;
        bad.push_back(0x00);
        CHECK(decode(bad).error == DecodeError::LengthMismatch);
    }
    SECTION("declared length disagreeing with the type table is a mismatch") {
        auto bad = valid;
        bad[8] = 3; // claim payload_len 3
        bad.push_back(0x00);
        CHECK(decode(bad).error == DecodeError::LengthMismatch);
    }
    SECTION("hinge target beyond range") {
        auto bad = valid;
        // 9001 = 0x2329 LE
        bad[10] = 0x29;
        bad[11] = 0x23;
        CHECK(decode(bad).error == DecodeError::FieldRange);
        CHECK_THROWS_AS(encode(SetHinge{9001}, 1, 1), std::invalid_argument);
    }
    SECTION("error names are distinct strings") {
        CHECK(std::string(decode_error_name(DecodeError::BadMagic)) == "bad_magic");
        CHECK(std::string(decode_error_name(DecodeError::Truncated)) == "truncated");
        CHECK(std::string(decode_error_name(DecodeError::FieldRange)) == "field_range");
    }
}

TEST_CASE("decoder survives arbitrary input") {
    Rng rng(0xF022);
    int ok_count = 0;
    for (int i = 0; i < 100000; ++i) {
        std::vector<std::uint8_t> junk;
        if (i % 3 == 0) {
            // pure noise
            int n = rng.uniform_int(0, 200);
            for (int j = 0; j < n; ++j)
                junk.push_back(static_cast<std::uint8_t>(rng.uniform_int(0, 255)));
        } else {
            // mutated valid frame: flips, truncation, padding
            junk = encode(random_message(rng), static_cast<std::uint8_t>(rng.uniform_int(0, 255)),
                          static_cast<std::uint16_t>(rng.uniform_int(0, 65535)));
            int mutations = rng.uniform_int(1, 4);
            for (int j = 0; j < mutations; ++j) {
                switch (rng.uniform_int(0, 2)) {
                    case 0:
                        junk[static_cast<std::size_t>(rng.uniform_int(0, static_cast<int>(junk.size()) - 1))] ^=
                            static_cast<std::uint8_t>(1u << rng.uniform_int(0, 7));
                        break;
                    case 1:
                        junk.resize(static_cast<std::size_t>(rng.uniform_int(0, static_cast<int>(junk.size()))));
                        break;
                    default: junk.push_back(static_cast<std::uint8_t>(rng.uniform_int(0, 255))); break;
                }
                if (junk.empty()) break;
            }
        }
        DecodeResult r = decode(junk);
        if (r.ok()) {
            ++ok_count;
            // anything that decodes re-encodes to the identical bytes
            auto again =
                encode(r.frame->message, r.frame->bot_id, r.frame->seq, r.frame->flags);
            REQUIRE(again == junk);
        } else {
            REQUIRE(std::string(decode_error_name(r.error)) != "none");
            REQUIRE(!r.frame.has_value());
        }
    }
    // bit flips in payload bytes keep many frames valid; the property above
    // must actually have been exercised
    CHECK(ok_count > 1000);
}

TEST_CASE("sequence acceptance window") {
    CHECK(accept_sequence(5, 6));
    CHECK(!accept_sequence(5, 5));
    CHECK(accept_sequence(65535, 0));
    CHECK(!accept_sequence(0, 65535));
    CHECK(accept_sequence(100, 100 + 0x7fff));
    CHECK(!accept_sequence(100, static_cast<std::uint16_t>(100 + 0x8000)));
    CHECK(!accept_sequence(7, 3));
}

TEST_CASE("drive quantization") {
    using acoustics::DriveState;

    SECTION("grid anchors") {
        DriveState d;
        d.phases = {0.0, kPi, kTwoPi - 1e-12, kPi / 256.0};
        d.amplitudes = {1.0, 0.5, 0.0, 1.3};
        QuantizedDrive q = quantize_drive(d);
        CHECK(q.levels[0].phase == 0);
        CHECK(q.levels[0].amp == 255);
        CHECK(q.levels[1].phase == 128);
        CHECK(q.levels[1].amp == 128);
        CHECK(q.levels[2].phase == 0); // wraps, not 256
        CHECK(q.levels[2].amp == 0);
        CHECK(q.levels[3].phase == 1); // half a step rounds up
        CHECK(q.levels[3].amp == 255); // clamped
    }

    SECTION("phase error bounded by half a step, circularly") {
        Rng rng(31);
        DriveState d;
        for (int i = 0; i < 100000; ++i) {
            d.phases = {rng.uniform(-20.0, 20.0)};
            d.amplitudes = {rng.uniform()};
            DriveState back = dequantize_drive(quantize_drive(d));
            double dphi = std::abs(wrap_pi(back.phases[0] - d.phases[0]));
            REQUIRE(dphi <= kPi / 256.0 + 1e-12);
            REQUIRE(std::abs(back.amplitudes[0] - d.amplitudes[0]) <= 0.5 / 255.0 + 1e-12);
        }
    }

    SECTION("frame packing requires the full 64 elements") {
        QuantizedDrive q;
        q.levels.resize(64);
        AcousticFrame f = make_acoustic_frame(9, q);
        CHECK(f.frame_id == 9);
        q.levels.resize(63);
        CHECK_THROWS_AS(make_acoustic_frame(9, q), std::invalid_argument);
        q.levels.resize(65);
        CHECK_THROWS_AS(make_acoustic_frame(9, q), std::invalid_argument);
    }

    SECTION("frame to drive is dequantization") {
        Rng rng(77);
        QuantizedDrive q;
        for (int i = 0; i < 64; ++i)
            q.levels.push_back({static_cast<std::uint8_t>(rng.uniform_int(0, 255)),
                                static_cast<std::uint8_t>(rng.uniform_int(0, 255))});
        AcousticFrame f = make_acoustic_frame(3, q);
        acoustics::DriveState d = frame_to_drive(f);
        acoustics::DriveState e = dequantize_drive(q);
        REQUIRE(d.size() == 64);
        for (int i = 0; i < 64; ++i) {
            CHECK(d.phases[static_cast<std::size_t>(i)] == e.phases[static_cast<std::size_t>(i)]);
            CHECK(d.amplitudes[static_cast<std::size_t>(i)] == e.amplitudes[static_cast<std::size_t>(i)]);
        }
    }
}

TEST_CASE("hex helpers") {
    std::vector<std::uint8_t> bytes{0x00, 0xff, 0x41, 0x9c};
    CHECK(to_hex(bytes) == "00ff419c");
    auto back = from_hex("00ff419c");
    REQUIRE(back.has_value());
    CHECK(*back == bytes);
    auto upper = from_hex("00FF419C");
    REQUIRE(upper.has_value());
    CHECK(*upper == bytes);
    CHECK(!from_hex("abc").has_value());
    CHECK(!from_hex("zz").has_value());
    CHECK(from_hex("")->empty());
}
