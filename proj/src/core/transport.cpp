#include "core/transport.hpp"

#include <algorithm>
#include <cassert>

#include "core/quic_varint.hpp"

namespace h3ps::net {

namespace {
constexpr std::size_t kHeaderSize = 5;  // kind byte + 32-bit connection id

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    out.push_back(static_cast<std::uint8_t>(v));
    out.push_back(static_cast<std::uint8_t>(v >> 8));
    out.push_back(static_cast<std::uint8_t>(v >> 16));
    out.push_back(static_cast<std::uint8_t>(v >> 24));
}

std::uint32_t get_u32(std::span<const std::uint8_t> in) {
    return static_cast<std::uint32_t>(in[0]) | (static_cast<std::uint32_t>(in[1]) << 8) |
           (static_cast<std::uint32_t>(in[2]) << 16) | (static_cast<std::uint32_t>(in[3]) << 24);
}
}  // namespace

Connection::Connection(Role role, DatagramPipe& pipe, Scheduler& sched, TransportConfig cfg,
                       std::uint32_t conn_id)
    : role_(role), pipe_(pipe), sched_(sched), cfg_(cfg), conn_id_(conn_id) {
    pipe_.set_receiver([this](std::span<const std::uint8_t> d) { handle_datagram(d); });
}

Connection::~Connection() {
    cancel_handshake_timer();
    for (auto& [sid, s] : send_) cancel_rto(s);
    pipe_.set_receiver({});
}

std::vector<std::uint8_t> Connection::header(DgramKind kind) const {
    std::vector<std::uint8_t> out;
    out.reserve(kHeaderSize);
    out.push_back(static_cast<std::uint8_t>(kind));
    put_u32(out, conn_id_);
    return out;
}

void Connection::connect() {
    assert(role_ == Role::client);
    if (established_ || closed_) return;
    handshake_timeout_current_ = cfg_.handshake_timeout;
    connect_started_ = sched_.now();
    send_hello();
    arm_handshake_timer();
}

SimTime Connection::effective_rto() const {
    const SimTime scaled =
        static_cast<SimTime>(static_cast<double>(rtt_estimate_) * cfg_.rtt_scale);
    return std::max(cfg_.rto_initial, scaled);
}

void Connection::send_hello() {
    auto dgram = header(DgramKind::client_hello);
    dgram.push_back(static_cast<std::uint8_t>(cfg_.alpn.size()));
    dgram.insert(dgram.end(), cfg_.alpn.begin(), cfg_.alpn.end());
    dgram.resize(std::max(cfg_.hello_size, dgram.size()), 0);
    ++hellos_sent_;
    pipe_.send(dgram, DgramMeta{DgramKind::client_hello, false});
}

void Connection::send_handshake_reply() {
    auto dgram = header(DgramKind::handshake_reply);
    dgram.resize(std::max(cfg_.hello_size, dgram.size()), 0);
    pipe_.send(dgram, DgramMeta{DgramKind::handshake_reply, false});
}

void Connection::arm_handshake_timer() {
    handshake_timer_ =
        sched_.call_after(handshake_timeout_current_, [this] { on_handshake_timer(); });
}

void Connection::cancel_handshake_timer() {
    if (handshake_timer_ != 0) {
        sched_.cancel(handshake_timer_);
        handshake_timer_ = 0;
    }
}

void Connection::on_handshake_timer() {
    handshake_timer_ = 0;
    if (established_ || closed_) return;
    if (handshake_retries_ >= cfg_.max_handshake_retries) {
        failed_ = true;
        closed_ = true;
        if (on_handshake_failed_) on_handshake_failed_();
        return;
    }
    ++handshake_retries_;
    send_hello();
    handshake_timeout_current_ = static_cast<SimTime>(
        static_cast<double>(handshake_timeout_current_) * cfg_.handshake_backoff);
    arm_handshake_timer();
}

std::uint64_t Connection::open_stream() {
    const std::uint64_t id = next_stream_ + (role_ == Role::client ? 0 : 1);
    next_stream_ += 4;
    return id;
}

void Connection::write(std::uint64_t stream, std::span<const std::uint8_t> data, bool fin,
                       bool app_data) {
    if (closed_) return;
    SendState& s = send_[stream];
    if (app_data && !data.empty()) {
        const std::uint64_t from = s.end();
        s.app_ranges.emplace_back(from, from + data.size());
    }
    s.buf.insert(s.buf.end(), data.begin(), data.end());
    if (fin) s.fin_off = static_cast<std::int64_t>(s.end());
    if (established_) flush_stream(stream, s);
}

bool Connection::range_marked(const SendState& s, std::uint64_t off, std::uint64_t len) const {
    for (const auto& [lo, hi] : s.app_ranges) {
        if (off < hi && off + len > lo) return true;
    }
    return false;
}

void Connection::flush_stream(std::uint64_t stream, SendState& s) {
    bool sent_fin = false;
    while (s.next_send < s.end()) {
        auto dgram = header(DgramKind::stream);
        const std::size_t flags_at = dgram.size();
        dgram.push_back(0);  // flags placeholder
        qvarint_append(dgram, stream);
        qvarint_append(dgram, s.next_send);
        const std::size_t budget = pipe_.mtu() - dgram.size();
        const std::uint64_t len =
            std::min<std::uint64_t>(budget, s.end() - s.next_send);
        const std::size_t at = s.next_send - s.base;
        dgram.insert(dgram.end(), s.buf.begin() + at, s.buf.begin() + at + len);
        const bool fin_here =
            s.fin_off >= 0 && s.next_send + len == static_cast<std::uint64_t>(s.fin_off);
        if (fin_here) {
            dgram[flags_at] |= 0x01;
            sent_fin = true;
        }
        DgramMeta meta{DgramKind::stream, range_marked(s, s.next_send, len)};
        s.next_send += len;
        pipe_.send(dgram, meta);
    }
    // A fin written after all payload already went out needs its own (empty)
    // datagram.
    if (!sent_fin && s.fin_off >= 0 && !s.fin_acked &&
        s.next_send == static_cast<std::uint64_t>(s.fin_off)) {
        auto dgram = header(DgramKind::stream);
        dgram.push_back(0x01);
        qvarint_append(dgram, stream);
        qvarint_append(dgram, s.next_send);
        pipe_.send(dgram, DgramMeta{DgramKind::stream, false});
    }
    const bool fully_acked = s.acked == s.end() && (s.fin_off < 0 || s.fin_acked);
    if (!fully_acked && s.rto_timer == 0) arm_rto(stream, s);
}

void Connection::flush_all() {
    for (auto& [sid, s] : send_) flush_stream(sid, s);
}

void Connection::arm_rto(std::uint64_t stream, SendState& s) {
    if (s.rto_current == 0) s.rto_current = effective_rto();
    s.rto_timer = sched_.call_after(s.rto_current, [this, stream] { on_rto(stream); });
}

void Connection::cancel_rto(SendState& s) {
    if (s.rto_timer != 0) {
        sched_.cancel(s.rto_timer);
        s.rto_timer = 0;
    }
}

void Connection::on_rto(std::uint64_t stream) {
    auto it = send_.find(stream);
    if (it == send_.end() || closed_) return;
    SendState& s = it->second;
    s.rto_timer = 0;
    const bool fully_acked = s.acked == s.end() && (s.fin_off < 0 || s.fin_acked);
    if (fully_acked) return;
    ++s.retransmits;
    if (s.retransmits > cfg_.max_retransmits) {
        failed_ = true;
        closed_ = true;
        cancel_handshake_timer();
        for (auto& [sid2, s2] : send_) cancel_rto(s2);
        if (on_closed_) on_closed_();
        return;
    }
    s.rto_current =
        static_cast<SimTime>(static_cast<double>(s.rto_current) * cfg_.rto_backoff);
    s.next_send = s.acked;  // go-back-N from the cumulative ack point
    flush_stream(stream, s);
}

void Connection::reset_stream(std::uint64_t stream) {
    if (closed_) return;
    if (auto it = send_.find(stream); it != send_.end()) {
        cancel_rto(it->second);
        send_.erase(it);
    }
    reset_streams_.insert(stream);
    auto dgram = header(DgramKind::reset);
    qvarint_append(dgram, stream);
    pipe_.send(dgram, DgramMeta{DgramKind::reset, false});
}

void Connection::close() {
    if (closed_) return;
    auto dgram = header(DgramKind::close);
    pipe_.send(dgram, DgramMeta{DgramKind::close, false});
    closed_ = true;
    cancel_handshake_timer();
    for (auto& [sid, s] : send_) cancel_rto(s);
}

void Connection::send_ack(std::uint64_t stream, const RecvState& r) {
    auto dgram = header(DgramKind::ack);
    std::uint8_t flags = 0;
    if (r.fin_off >= 0 && r.expected == static_cast<std::uint64_t>(r.fin_off)) flags |= 0x01;
    dgram.push_back(flags);
    qvarint_append(dgram, stream);
    qvarint_append(dgram, r.expected);
    pipe_.send(dgram, DgramMeta{DgramKind::ack, false});
}

void Connection::handle_datagram(std::span<const std::uint8_t> dgram) {
    if (closed_) return;
    if (dgram.size() < kHeaderSize) return;
    if (get_u32(dgram.subspan(1)) != conn_id_) return;
    const auto kind = static_cast<DgramKind>(dgram[0]);
    const auto body = dgram.subspan(kHeaderSize);
    switch (kind) {
    case DgramKind::client_hello:
        if (role_ == Role::server) handle_hello(body);
        break;
    case DgramKind::handshake_reply:
        if (role_ == Role::client) handle_handshake_reply();
        break;
    case DgramKind::stream:
        handle_stream(body);
        break;
    case DgramKind::ack:
        handle_ack(body);
        break;
    case DgramKind::reset: {
        auto sid = qvarint_read(body);
        if (!sid) return;
        reset_streams_.insert(sid->value);
        if (auto it = send_.find(sid->value); it != send_.end()) {
            cancel_rto(it->second);
            send_.erase(it);
        }
        if (on_stream_reset_) on_stream_reset_(sid->value);
        break;
    }
    case DgramKind::close:
        closed_ = true;
        cancel_handshake_timer();
        for (auto& [sid2, s2] : send_) cancel_rto(s2);
        if (on_closed_) on_closed_();
        break;
    default:
        break;
    }
}

void Connection::handle_hello(std::span<const std::uint8_t> body) {
    if (!body.empty()) {
        const std::size_t n = std::min<std::size_t>(body[0], body.size() - 1);
        peer_alpn_.assign(body.begin() + 1, body.begin() + 1 + n);
    }
    // Every hello gets a reply; duplicates from eager client timers too.
    if (first_reply_sent_ < 0) first_reply_sent_ = sched_.now();
    send_handshake_reply();
    if (!established_) {
        established_ = true;
        if (on_established_) on_established_();
        flush_all();
    }
}

void Connection::handle_handshake_reply() {
    if (established_) return;
    established_ = true;
    cancel_handshake_timer();
    if (connect_started_ >= 0) rtt_estimate_ = sched_.now() - connect_started_;
    if (on_established_) on_established_();
    flush_all();
}

void Connection::handle_stream(std::span<const std::uint8_t> body) {
    if (body.empty()) return;
    // The reply-to-first-data gap is the server's only rtt sample.
    if (rtt_estimate_ == 0 && first_reply_sent_ >= 0) {
        rtt_estimate_ = sched_.now() - first_reply_sent_;
    }
    const std::uint8_t flags = body[0];
    body = body.subspan(1);
    auto sid = qvarint_read(body);
    if (!sid) return;
    body = body.subspan(sid->consumed);
    auto off = qvarint_read(body);
    if (!off) return;
    const auto payload = body.subspan(off->consumed);

    if (reset_streams_.count(sid->value)) return;

    RecvState& r = recv_[sid->value];
    const std::uint64_t seg_end = off->value + payload.size();
    if (flags & 0x01) r.fin_off = static_cast<std::int64_t>(seg_end);

    std::span<const std::uint8_t> fresh;
    if (off->value <= r.expected && seg_end > r.expected) {
        fresh = payload.subspan(r.expected - off->value);
        r.expected = seg_end;
    }
    // Segments past the expected offset (a gap from a drop) are discarded;
    // the cumulative ack below makes the sender rewind.
    const bool fin_now =
        r.fin_off >= 0 && r.expected == static_cast<std::uint64_t>(r.fin_off) && !r.fin_delivered;
    if (fin_now) r.fin_delivered = true;

    send_ack(sid->value, r);
    if ((!fresh.empty() || fin_now) && on_stream_data_) {
        on_stream_data_(sid->value, fresh, fin_now);
    }
}

void Connection::handle_ack(std::span<const std::uint8_t> body) {
    if (body.empty()) return;
    const std::uint8_t flags = body[0];
    body = body.subspan(1);
    auto sid = qvarint_read(body);
    if (!sid) return;
    body = body.subspan(sid->consumed);
    auto cum = qvarint_read(body);
    if (!cum) return;

    auto it = send_.find(sid->value);
    if (it == send_.end()) return;
    SendState& s = it->second;

    bool progressed = false;
    if (cum->value > s.acked) {
        progressed = true;
        s.acked = cum->value;
        s.rto_current = effective_rto();
        s.retransmits = 0;
        // Trim the acked prefix once it is worth the move.
        if (s.acked - s.base > 8192) {
            const std::size_t drop = s.acked - s.base;
            s.buf.erase(s.buf.begin(), s.buf.begin() + drop);
            s.base = s.acked;
            std::erase_if(s.app_ranges, [&](const auto& rg) { return rg.second <= s.base; });
        }
    }
    if (flags & 0x01) s.fin_acked = true;

    const bool fully_acked = s.acked == s.end() && (s.fin_off < 0 || s.fin_acked);
    if (fully_acked) {
        cancel_rto(s);
        if (s.fin_off >= 0 && s.fin_acked && !s.fully_acked_signalled) {
            s.fully_acked_signalled = true;
            if (on_stream_acked_) on_stream_acked_(sid->value);
        }
    } else if (progressed && s.rto_timer != 0) {
        cancel_rto(s);
        arm_rto(sid->value, s);
    }
}

}  // namespace h3ps::net
