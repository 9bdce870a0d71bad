#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "patswarm/array.hpp"
#include "patswarm/geometry.hpp"

namespace patswarm::proto {

// Frame layout, all multi-byte fields little-endian:
//   0x41 0x42 | version u8 | msg_type u8 | bot_id u8 | flags u8 (reserved) |
//   seq u16 | payload_len u16 | payload
inline constexpr std::uint8_t kMagic0 = 0x41;
inline constexpr std::uint8_t kMagic1 = 0x42;
inline constexpr std::uint8_t kVersion = 1;
inline constexpr std::size_t kHeaderSize = 10;
inline constexpr std::size_t kElementsPerFrame = 64;

// Fixed-point unit conventions on the wire:
//   positions 0.1 mm, angles 0.01 degree, speeds mm/s, times ms.

struct MoveTo {
    std::int32_t x_tenth_mm = 0;
    std::int32_t y_tenth_mm = 0;
    std::int16_t yaw_centi_deg = 0;
    std::uint16_t speed_mm_s = 0;
};

struct SetHinge {
    std::uint16_t target_centi_deg = 0; // 0..9000
};

struct Dispense {
    std::uint8_t count = 0;
};

struct PhaseAmp {
    std::uint8_t phase = 0; // level * 2*pi / 256
    std::uint8_t amp = 0;   // level / 255
};

struct AcousticFrame {
    std::uint16_t frame_id = 0;
    std::array<PhaseAmp, kElementsPerFrame> levels{};
};

struct Stop {};

struct PoseReport {
    std::uint8_t source_id = 0;
    std::int32_t x_tenth_mm = 0;
    std::int32_t y_tenth_mm = 0;
    std::int32_t z_tenth_mm = 0;
    std::int16_t yaw_centi_deg = 0;
    std::uint32_t timestamp_ms = 0;
};

struct Ack {
    std::uint16_t acked_seq = 0;
    std::uint8_t status = 0; // 0 applied, 1 rejected as stale
};

/// Alternative order fixes the wire msg_type: index + 1.
using Message = std::variant<MoveTo, SetHinge, Dispense, AcousticFrame, Stop, PoseReport, Ack>;

enum class MsgType : std::uint8_t {
    MoveTo = 1,
    SetHinge = 2,
    Dispense = 3,
    AcousticFrame = 4,
    Stop = 5,
    PoseReport = 6,
    Ack = 7,
};

inline MsgType message_type(const Message& m) {
    return static_cast<MsgType>(m.index() + 1);
}

inline std::size_t payload_length(MsgType t) {
    switch (t) {
        case MsgType::MoveTo: return 12;
        case MsgType::SetHinge: return 2;
        case MsgType::Dispense: return 1;
        case MsgType::AcousticFrame: return 130;
        case MsgType::Stop: return 0;
        case MsgType::PoseReport: return 19;
        case MsgType::Ack: return 3;
    }
    throw std::invalid_argument("unknown message type");
}

namespace detail {

class ByteWriter {
public:
    explicit ByteWriter(std::vector<std::uint8_t>& out) : out_(out) {}
    void u8(std::uint8_t v) { out_.push_back(v); }
    void u16(std::uint16_t v) {
        out_.push_back(static_cast<std::uint8_t>(v & 0xff));
        out_.push_back(static_cast<std::uint8_t>(v >> 8));
    }
    void u32(std::uint32_t v) {
        u16(static_cast<std::uint16_t>(v & 0xffff));
        u16(static_cast<std::uint16_t>(v >> 16));
    }
    void i16(std::int16_t v) { u16(static_cast<std::uint16_t>(v)); }
    void i32(std::int32_t v) { u32(static_cast<std::uint32_t>(v)); }

private:
    std::vector<std::uint8_t>& out_;
};

class ByteReader {
public:
    explicit ByteReader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}
    bool exhausted() const { return pos_ == bytes_.size(); }
    std::uint8_t u8() { return bytes_[pos_++]; }
    std::uint16_t u16() {
        std::uint16_t lo = u8(), hi = u8();
        return static_cast<std::uint16_t>(lo | (hi << 8));
    }
    std::uint32_t u32() {
        std::uint32_t lo = u16(), hi = u16();
        return lo | (hi << 16);
    }
    std::int16_t i16() { return static_cast<std::int16_t>(u16()); }
    std::int32_t i32() { return static_cast<std::int32_t>(u32()); }

private:
    std::span<const std::uint8_t> bytes_;
    std::size_t pos_ = 0;
};

} // namespace detail

/// Serialize one message into a framed datagram. Field-range violations
/// (hinge target beyond 90 degrees) are refused before any bytes are built.
/// flags is reserved and normally 0; it is a parameter so that re-encoding
/// a decoded frame reproduces the input bytes exactly.
inline std::vector<std::uint8_t> encode(const Message& msg, std::uint8_t bot_id,
                                        std::uint16_t seq, std::uint8_t flags = 0) {
    if (const auto* h = std::get_if<SetHinge>(&msg); h && h->target_centi_deg > 9000)
        throw std::invalid_argument("SetHinge target beyond 90.00 degrees");

    MsgType type = message_type(msg);
    std::vector<std::uint8_t> out;
    out.reserve(kHeaderSize + payload_length(type));
    detail::ByteWriter w(out);
    w.u8(kMagic0);
    w.u8(kMagic1);
    w.u8(kVersion);
    w.u8(static_cast<std::uint8_t>(type));
    w.u8(bot_id);
    w.u8(flags);
    w.u16(seq);
    w.u16(static_cast<std::uint16_t>(payload_length(type)));

    std::visit(
        [&w](const auto& m) {
            using T = std::decay_t<decltype(m)>;
            if constexpr (std::is_same_v<T, MoveTo>) {
                w.i32(m.x_tenth_mm);
                w.i32(m.y_tenth_mm);
                w.i16(m.yaw_centi_deg);
                w.u16(m.speed_mm_s);
            } else if constexpr (std::is_same_v<T, SetHinge>) {
                w.u16(m.target_centi_deg);
            } else if constexpr (std::is_same_v<T, Dispense>) {
                w.u8(m.count);
            } else if constexpr (std::is_same_v<T, AcousticFrame>) {
                w.u16(m.frame_id);
                for (const PhaseAmp& pa : m.levels) {
                    w.u8(pa.phase);
                    w.u8(pa.amp);
                }
            } else if constexpr (std::is_same_v<T, PoseReport>) {
                w.u8(m.source_id);
                w.i32(m.x_tenth_mm);
                w.i32(m.y_tenth_mm);
                w.i32(m.z_tenth_mm);
                w.i16(m.yaw_centi_deg);
                w.u32(m.timestamp_ms);
            } else if constexpr (std::is_same_v<T, Ack>) {
                w.u16(m.acked_seq);
                w.u8(m.status);
            } else {
                static_assert(std::is_same_v<T, Stop>);
            }
        },
        msg);
    return out;
}

enum class DecodeError : std::uint8_t {
    None = 0,
    BadMagic,
    UnknownVersion,
    UnknownType,
    LengthMismatch,
    Truncated,
    FieldRange,
};

inline const char* decode_error_name(DecodeError e) {
    switch (e) {
        case DecodeError::None: return "none";
        case DecodeError::BadMagic: return "bad_magic";
        case DecodeError::UnknownVersion: return "unknown_version";
        case DecodeError::UnknownType: return "unknown_type";
        case DecodeError::LengthMismatch: return "length_mismatch";
        case DecodeError::Truncated: return "truncated";
        case DecodeError::FieldRange: return "field_range";
    }
    return "?";
}

struct Decoded {
    std::uint8_t bot_id = 0;
    std::uint8_t flags = 0;
    std::uint16_t seq = 0;
    Message message;
};

struct DecodeResult {
    DecodeError error = DecodeError::None;
    std::optional<Decoded> frame;

    bool ok() const { return error == DecodeError::None; }
};

/// Parse one datagram. Never throws: arbitrary byte strings map to a
/// distinct DecodeError instead.
inline DecodeResult decode(std::span<const std::uint8_t> bytes) noexcept {
    DecodeResult res;
    if (!bytes.empty() && bytes[0] != kMagic0) {
        res.error = DecodeError::BadMagic;
        return res;
    }
    if (bytes.size() >= 2 && bytes[1] != kMagic1) {
        res.error = DecodeError::BadMagic;
        return res;
    }
    if (bytes.size() < kHeaderSize) {
        res.error = DecodeError::Truncated;
        return res;
    }

    detail::ByteReader r(bytes);
    r.u16(); // magic, verified above
    std::uint8_t version = r.u8();
    std::uint8_t raw_type = r.u8();
    std::uint8_t bot_id = r.u8();
    std::uint8_t flags = r.u8();
    std::uint16_t seq = r.u16();
    std::uint16_t payload_len = r.u16();

    if (version != kVersion) {
        res.error = DecodeError::UnknownVersion;
        return res;
    }
    if (raw_type < 1 || raw_type > 7) {
        res.error = DecodeError::UnknownType;
        return res;
    }
    MsgType type = static_cast<MsgType>(raw_type);

    std::size_t available = bytes.size() - kHeaderSize;
    if (available < payload_len) {
        res.error = DecodeError::Truncated;
        return res;
    }
    if (available > payload_len || payload_len != payload_length(type)) {
        res.error = DecodeError::LengthMismatch;
        return res;
    }

    Decoded d;
    d.bot_id = bot_id;
    d.flags = flags;
    d.seq = seq;
    switch (type) {
        case MsgType::MoveTo: {
            MoveTo m;
            m.x_tenth_mm = r.i32();
            m.y_tenth_mm = r.i32();
            m.yaw_centi_deg = r.i16();
            m.speed_mm_s = r.u16();
            d.message = m;
            break;
        }
        case MsgType::SetHinge: {
            SetHinge m;
            m.target_centi_deg = r.u16();
            if (m.target_centi_deg > 9000) {
                res.error = DecodeError::FieldRange;
                return res;
            }
            d.message = m;
            break;
        }
        case MsgType::Dispense: {
            Dispense m;
            m.count = r.u8();
            d.message = m;
            break;
        }
        case MsgType::AcousticFrame: {
            AcousticFrame m;
            m.frame_id = r.u16();
            for (PhaseAmp& pa : m.levels) {
                pa.phase = r.u8();
                pa.amp = r.u8();
            }
            d.message = m;
            break;
        }
        case MsgType::Stop:
            d.message = Stop{};
            break;
        case MsgType::PoseReport: {
            PoseReport m;
            m.source_id = r.u8();
            m.x_tenth_mm = r.i32();
            m.y_tenth_mm = r.i32();
            m.z_tenth_mm = r.i32();
            m.yaw_centi_deg = r.i16();
            m.timestamp_ms = r.u32();
            d.message = m;
            break;
        }
        case MsgType::Ack: {
            Ack m;
            m.acked_seq = r.u16();
            m.status = r.u8();
            d.message = m;
            break;
        }
    }
    res.frame = std::move(d);
    return res;
}

/// Sequence acceptance under u16 wraparound: accept when the incoming
/// number is ahead of the last seen one by less than half the space.
inline bool accept_sequence(std::uint16_t last_seen, std::uint16_t incoming) {
    std::uint16_t diff = static_cast<std::uint16_t>(incoming - last_seen);
    return diff != 0 && diff < 0x8000;
}

// ---- drive quantization ----------------------------------------------

struct QuantizedDrive {
    std::vector<PhaseAmp> levels;
};

/// 256 phase levels over [0, 2*pi), 256 amplitude levels over [0, 1].
/// Phases are wrapped first, so a phase epsilon below 2*pi rounds to level 0.
inline QuantizedDrive quantize_drive(const acoustics::DriveState& drive) {
    QuantizedDrive q;
    q.levels.reserve(drive.size());
    for (std::size_t i = 0; i < drive.size(); ++i) {
        double ph = wrap_two_pi(drive.phases[i]);
        auto phase_level = static_cast<std::uint8_t>(
            static_cast<unsigned>(std::llround(ph / kTwoPi * 256.0)) % 256u);
        double amp = std::min(std::max(drive.amplitudes[i], 0.0), 1.0);
        auto amp_level = static_cast<std::uint8_t>(std::llround(amp * 255.0));
        q.levels.push_back({phase_level, amp_level});
    }
    return q;
}

inline acoustics::DriveState dequantize_drive(const QuantizedDrive& q) {
    acoustics::DriveState d;
    d.phases.reserve(q.levels.size());
    d.amplitudes.reserve(q.levels.size());
    for (const PhaseAmp& pa : q.levels) {
        d.phases.push_back(pa.phase * kTwoPi / 256.0);
        d.amplitudes.push_back(pa.amp / 255.0);
    }
    return d;
}

inline AcousticFrame make_acoustic_frame(std::uint16_t frame_id, const QuantizedDrive& q) {
    if (q.levels.size() != kElementsPerFrame)
        throw std::invalid_argument("acoustic frame requires exactly 64 element levels");
    AcousticFrame f;
    f.frame_id = frame_id;
    for (std::size_t i = 0; i < kElementsPerFrame; ++i) f.levels[i] = q.levels[i];
    return f;
}

inline acoustics::DriveState frame_to_drive(const AcousticFrame& f) {
    QuantizedDrive q;
    q.levels.assign(f.levels.begin(), f.levels.end());
    return dequantize_drive(q);
}

// ---- fixed-point unit conversions --------------------------------------

inline std::int32_t to_tenth_mm(double meters) {
    return static_cast<std::int32_t>(std::llround(meters * 1e4));
}
inline double from_tenth_mm(std::int32_t v) { return v * 1e-4; }

inline std::int16_t to_centi_deg(double radians) {
    return static_cast<std::int16_t>(std::llround(rad_to_deg(wrap_pi(radians)) * 100.0));
}
inline double from_centi_deg(std::int16_t v) { return deg_to_rad(v * 0.01); }

inline std::uint16_t to_mm_s(double mps) {
    double mm = std::max(0.0, mps * 1e3);
    return static_cast<std::uint16_t>(std::llround(std::min(mm, 65535.0)));
}
inline double from_mm_s(std::uint16_t v) { return v * 1e-3; }

// ---- hex helpers for golden vectors and the codec tool ----------------

inline std::string to_hex(std::span<const std::uint8_t> bytes) {
    static const char* digits = "0123456789abcdef";
    std::string s;
    s.reserve(bytes.size() * 2);
    for (std::uint8_t b : bytes) {
        s.push_back(digits[b >> 4]);
        s.push_back(digits[b & 0xf]);
    }
    return s;
}

inline std::optional<std::vector<std::uint8_t>> from_hex(const std::string& text) {
    auto nibble = [](char c) -> int {
        if (c >= '0' && c <= '9') return c - '0';
        if (c >= 'a' && c <= 'f') return c - 'a' + 10;
        if (c >= 'A' && c <= 'F') return c - 'A' + 10;
        return -1;
    };
    if (text.size() % 2 != 0) return std::nullopt;
    std::vector<std::uint8_t> out;
    out.reserve(text.size() / 2);
    for (std::size_t i = 0; i < text.size(); i += 2) {
        int hi = nibble(text[i]), lo = nibble(text[i + 1]);
        if (hi < 0 || lo < 0) return std::nullopt;
        out.push_back(static_cast<std::uint8_t>((hi << 4) | lo));
    }
    return out;
}

} // namespace patswarm::proto
