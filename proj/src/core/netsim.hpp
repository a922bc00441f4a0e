#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "core/result.hpp"
#include "core/scheduler.hpp"
#include "core/sim_time.hpp"

namespace h3ps::net {

enum class ProfileError { bad_rate, bad_loss, bad_rtt };

/// Link conditioning parameters. Defaults model an NB-IoT CAT NB2 cell:
/// 127 kbit/s down, 159 kbit/s up, 2 s round trip.
struct NetworkProfile {
    double downlink_bps = 127'000.0;
    double uplink_bps = 159'000.0;
    SimTime rtt = 2 * kSecond;
    double loss_probability = 0.0;
    std::uint64_t seed = 1;

    // Each direction carries half the round trip.
    SimTime one_way_delay() const { return rtt / 2; }

    Result<Unit, ProfileError> validate() const;
};

enum class Direction : std::uint8_t { up, down };
enum class Disposition : std::uint8_t { delivered, dropped };

/// Datagram classification recorded alongside each trace event. The sender
/// declares it; the link never inspects payloads.
enum class DgramKind : std::uint8_t {
    other = 0,
    client_hello,
    handshake_reply,
    stream,
    ack,
    reset,
    close,
};

struct DgramMeta {
    DgramKind kind = DgramKind::other;
    bool app_data = false;  // carries application payload bytes
};

struct TraceEvent {
    SimTime ts = 0;  // link entry time (egress capture point)
    Direction dir = Direction::up;
    std::uint32_t size_bytes = 0;
    Disposition disposition = Disposition::delivered;
    std::uint32_t flow = 0;
    SimTime delivered_ts = -1;  // receiver-side arrival; -1 when dropped
    DgramKind kind = DgramKind::other;
    bool app_data = false;
    std::vector<std::uint8_t> payload;  // capture copy
};

struct Trace {
    std::vector<TraceEvent> events;
};

struct CaptureStats {
    std::uint64_t up_bytes = 0;
    std::uint64_t down_bytes = 0;
    std::uint64_t up_packets = 0;
    std::uint64_t down_packets = 0;
    std::uint64_t dropped = 0;
};

/// Aggregates delivered byte/packet counters per direction plus the dropped
/// count. delivered + dropped partitions the event list.
CaptureStats capture_stats(const Trace& trace);

/// Counters a link endpoint keeps incrementally at send time; the trace fold
/// must always reproduce them.
struct EndpointCounters {
    std::uint64_t bytes = 0;    // delivered payload bytes
    std::uint64_t packets = 0;  // delivered datagrams
    std::uint64_t dropped = 0;

    friend bool operator==(const EndpointCounters&, const EndpointCounters&) = default;
};

/// CSV export: header plus one `ts_us,direction,size_bytes,disposition,flow`
/// row per event, in trace order.
std::string trace_to_csv(const Trace& trace);

const char* to_string(Direction d);
const char* to_string(Disposition d);

inline constexpr std::size_t kMaxDatagram = 1500;  // path MTU ceiling

enum class SendError { oversized };

/// One send direction of a conditioned link.
class DatagramPipe {
public:
    using Receiver = std::function<void(std::span<const std::uint8_t>)>;

    virtual ~DatagramPipe() = default;

    virtual Result<Unit, SendError> send(std::span<const std::uint8_t> payload,
                                         const DgramMeta& meta = {}) = 0;
    virtual void set_receiver(Receiver fn) = 0;
    virtual std::size_t mtu() const { return kMaxDatagram; }
};

/// Deterministic virtual-time link. Endpoint `a` is the device side (sends
/// uplink); endpoint `b` is the broker side (sends downlink). Shaping applies
/// to outgoing datagrams only: drop decided at entry by a seeded uniform
/// draw, then serialization at the configured rate behind any queued
/// datagrams, then one-way propagation of rtt/2. FIFO, no reordering.
class VirtualLink {
public:
    VirtualLink(const NetworkProfile& profile, Scheduler& sched, std::uint32_t flow_id = 0);
    ~VirtualLink();

    VirtualLink(const VirtualLink&) = delete;
    VirtualLink& operator=(const VirtualLink&) = delete;

    DatagramPipe& a();
    DatagramPipe& b();

    const Trace& trace() const { return trace_; }
    std::uint32_t flow_id() const { return flow_; }

    /// Live counters maintained by the sending endpoint of `dir`.
    EndpointCounters counters(Direction dir) const;

private:
    class Endpoint;

    NetworkProfile profile_;
    Scheduler& sched_;
    std::uint32_t flow_;
    Trace trace_;
    std::shared_ptr<Unit> alive_;
    std::unique_ptr<Endpoint> a_;
    std::unique_ptr<Endpoint> b_;
};

namespace detail {

/// Uniform [0,1) draw that does not depend on the standard library's
/// distribution internals, so traces are reproducible across platforms.
class UniformRng {
public:
    explicit UniformRng(std::uint64_t seed) : state_(seed ? seed : 0x9e3779b97f4a7c15ull) {}

    double next() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    std::uint64_t next_u64() {
        // splitmix64
        std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ull);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    }

private:
    std::uint64_t state_;
};

std::uint64_t direction_seed(std::uint64_t base, Direction dir);
SimTime serialization_ns(std::size_t bytes, double rate_bps);

}  // namespace detail

}  // namespace h3ps::net
