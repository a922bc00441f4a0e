#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "core/netsim.hpp"
#include "core/scheduler.hpp"
#include "core/sim_time.hpp"

namespace h3ps::net {

/// Knobs for the modeled secure transport. The handshake retransmit timer is
/// deliberately exposed: stock stacks fire it well inside a high-RTT path,
/// so retry hellos show up in captures unless it is raised.
struct TransportConfig {
    std::size_t hello_size = 1200;  // both handshake flights, padded
    std::string alpn = "h3ps";     // carried in the hello; lets one broker
                                   // port co-host distinct protocol endpoints
    SimTime handshake_timeout = 1 * kSecond;
    double handshake_backoff = 2.0;
    int max_handshake_retries = 8;
    // Stream retransmission: the effective timeout is
    // max(rto_initial, rtt_scale x handshake rtt sample), so data is not
    // blindly double-sent on paths slower than the configured floor.
    SimTime rto_initial = 1 * kSecond;
    double rtt_scale = 2.0;
    double rto_backoff = 2.0;
    int max_retransmits = 20;
};

/// Modeled connection-oriented transport over one conditioned datagram path:
/// a 1-RTT handshake (client hello in, handshake reply back, no cryptography)
/// followed by reliable ordered byte streams. Reliability is cumulative
/// per-stream acknowledgment with go-back-N retransmission on timeout, which
/// is enough to survive uniform loss on a FIFO link.
///
/// Stream writes may carry an `app_data` mark; datagrams containing any
/// marked byte are flagged in the link trace, which is how the harness finds
/// "first datagram carrying application payload" without parsing captures.
class Connection {
public:
    enum class Role { client, server };

    Connection(Role role, DatagramPipe& pipe, Scheduler& sched, TransportConfig cfg = {},
               std::uint32_t conn_id = 1);
    ~Connection();

    Connection(const Connection&) = delete;
    Connection& operator=(const Connection&) = delete;

    /// Client only: sends the first hello and arms the retransmit timer.
    void connect();

    /// Opens a new locally initiated stream (client: 0, 4, 8, ...).
    std::uint64_t open_stream();

    /// Appends bytes to a stream. Data is buffered until the handshake
    /// completes, then segmented into datagrams and sent.
    void write(std::uint64_t stream, std::span<const std::uint8_t> data, bool fin,
               bool app_data = false);

    /// Abruptly terminates one stream (no retransmission of the signal).
    void reset_stream(std::uint64_t stream);

    /// Sends a close signal and cancels all timers.
    void close();

    bool established() const { return established_; }
    bool closed() const { return closed_; }
    bool failed() const { return failed_; }
    int hellos_sent() const { return hellos_sent_; }

    /// Server role: the protocol token the client's hello carried. Empty
    /// until the first hello arrives.
    const std::string& peer_alpn() const { return peer_alpn_; }

    void on_established(std::function<void()> fn) { on_established_ = std::move(fn); }
    void on_handshake_failed(std::function<void()> fn) { on_handshake_failed_ = std::move(fn); }
    /// fin fires once, with the final chunk (possibly empty).
    void on_stream_data(
        std::function<void(std::uint64_t, std::span<const std::uint8_t>, bool fin)> fn) {
        on_stream_data_ = std::move(fn);
    }
    void on_stream_reset(std::function<void(std::uint64_t)> fn) {
        on_stream_reset_ = std::move(fn);
    }
    /// Fires when the whole send side of a stream (including fin) is acked.
    void on_stream_acked(std::function<void(std::uint64_t)> fn) {
        on_stream_acked_ = std::move(fn);
    }
    void on_closed(std::function<void()> fn) { on_closed_ = std::move(fn); }

private:
    struct SendState {
        std::uint64_t base = 0;    // absolute offset of buf[0]
        std::vector<std::uint8_t> buf;
        std::uint64_t acked = 0;
        std::uint64_t next_send = 0;
        std::int64_t fin_off = -1;
        bool fin_acked = false;
        bool fully_acked_signalled = false;
        std::vector<std::pair<std::uint64_t, std::uint64_t>> app_ranges;
        Scheduler::TimerId rto_timer = 0;
        SimTime rto_current = 0;
        int retransmits = 0;
        std::uint64_t end() const { return base + buf.size(); }
    };

    struct RecvState {
        std::uint64_t expected = 0;
        std::int64_t fin_off = -1;
        bool fin_delivered = false;
    };

    void handle_datagram(std::span<const std::uint8_t> dgram);
    void handle_hello(std::span<const std::uint8_t> body);
    void handle_handshake_reply();
    void handle_stream(std::span<const std::uint8_t> body);
    void handle_ack(std::span<const std::uint8_t> body);
    void send_hello();
    void send_handshake_reply();
    void send_ack(std::uint64_t stream, const RecvState& r);
    void flush_stream(std::uint64_t stream, SendState& s);
    void flush_all();
    void arm_rto(std::uint64_t stream, SendState& s);
    void cancel_rto(SendState& s);
    void on_rto(std::uint64_t stream);
    void cancel_handshake_timer();
    void arm_handshake_timer();
    void on_handshake_timer();
    bool range_marked(const SendState& s, std::uint64_t off, std::uint64_t len) const;
    std::vector<std::uint8_t> header(DgramKind kind) const;
    SimTime effective_rto() const;

    Role role_;
    DatagramPipe& pipe_;
    Scheduler& sched_;
    TransportConfig cfg_;
    std::uint32_t conn_id_;

    bool established_ = false;
    bool closed_ = false;
    bool failed_ = false;
    int hellos_sent_ = 0;
    int handshake_retries_ = 0;
    SimTime handshake_timeout_current_ = 0;
    Scheduler::TimerId handshake_timer_ = 0;
    SimTime connect_started_ = -1;
    SimTime first_reply_sent_ = -1;
    SimTime rtt_estimate_ = 0;
    std::string peer_alpn_;
    std::uint64_t next_stream_ = 0;

    std::map<std::uint64_t, SendState> send_;
    std::map<std::uint64_t, RecvState> recv_;
    std::set<std::uint64_t> reset_streams_;

    std::function<void()> on_established_;
    std::function<void()> on_handshake_failed_;
    std::function<void(std::uint64_t, std::span<const std::uint8_t>, bool)> on_stream_data_;
    std::function<void(std::uint64_t)> on_stream_reset_;
    std::function<void(std::uint64_t)> on_stream_acked_;
    std::function<void()> on_closed_;
};

}  // namespace h3ps::net
