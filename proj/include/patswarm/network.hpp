#pragma once

#include <cstdint>
#include <queue>
#include <stdexcept>
#include <vector>

#include "patswarm/rng.hpp"

namespace patswarm::sim {

struct NetConfig {
    double latency_ms = 0.0;
    double jitter_ms = 0.0;
    double loss = 0.0; // per-message drop probability
};

inline void validate_net_config(const NetConfig& c) {
    if (!(c.latency_ms >= 0.0) || !(c.jitter_ms >= 0.0))
        throw std::invalid_argument("net latency and jitter must be >= 0");
    if (!(c.loss >= 0.0 && c.loss <= 1.0))
        throw std::invalid_argument("net loss must be in [0, 1]");
}

struct Datagram {
    double due = 0.0;       // s, simulation clock
    std::uint64_t serial = 0; // send order, ties broken FIFO
    std::uint8_t dest = 0;
    std::vector<std::uint8_t> bytes;
};

struct NetCounters {
    std::uint64_t sent = 0;
    std::uint64_t lost = 0;
    std::uint64_t delivered = 0;
};

/// One direction of the lossy datagram transport. Loss is decided at send
/// time (a dropped message consumes exactly one rng draw); survivors get an
/// independent gaussian delay, floored at zero, so jitter can reorder them.
class Link {
public:
    explicit Link(const NetConfig& cfg) : cfg_(cfg) { validate_net_config(cfg); }

    void send(std::uint8_t dest, std::vector<std::uint8_t> bytes, double now, Rng& rng) {
        ++counters_.sent;
        if (cfg_.loss > 0.0 && rng.uniform() < cfg_.loss) {
            ++counters_.lost;
            return;
        }
        double delay_ms = cfg_.latency_ms;
        if (cfg_.jitter_ms > 0.0) delay_ms = rng.gaussian(cfg_.latency_ms, cfg_.jitter_ms);
        Datagram d;
        d.due = now + std::max(0.0, delay_ms) * 1e-3;
        d.serial = next_serial_++;
        d.dest = dest;
        d.bytes = std::move(bytes);
        queue_.push(std::move(d));
    }

    /// Pops every message with due <= now, ordered by (due, send order).
    std::vector<Datagram> deliver_due(double now) {
        std::vector<Datagram> out;
        while (!queue_.empty() && queue_.top().due <= now) {
            out.push_back(queue_.top());
            queue_.pop();
            ++counters_.delivered;
        }
        return out;
    }

    std::size_t in_flight() const { return queue_.size(); }
    const NetCounters& counters() const { return counters_; }

private:
    struct Later {
        bool operator()(const Datagram& a, const Datagram& b) const {
            if (a.due != b.due) return a.due > b.due;
            return a.serial > b.serial;
        }
    };

    NetConfig cfg_;
    std::priority_queue<Datagram, std::vector<Datagram>, Later> queue_;
    NetCounters counters_;
    std::uint64_t next_serial_ = 0;
};

} // namespace patswarm::sim
