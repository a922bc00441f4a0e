#include <doctest.h>

#include <limits>
#include <random>

#include "core/netsim.hpp"
#include "core/transport.hpp"

using namespace h3ps;
using namespace h3ps::net;

namespace {

NetworkProfile fast_profile(SimTime rtt = 2 * kSecond) {
    NetworkProfile p;
    p.uplink_bps = std::numeric_limits<double>::infinity();
    p.downlink_bps = std::numeric_limits<double>::infinity();
    p.rtt = rtt;
    return p;
}

TransportConfig patient_transport() {
    TransportConfig t;
    t.handshake_timeout = 60 * kSecond;  // keep retries out of timing tests
    return t;
}

std::vector<std::uint8_t> pattern(std::size_t n, std::uint8_t base = 0) {
    std::vector<std::uint8_t> v(n);
    for (std::size_t i = 0; i < n; ++i) v[i] = static_cast<std::uint8_t>(base + i);
    return v;
}

struct Pair {
    VirtualScheduler sched;
    VirtualLink link;
    Connection client;
    Connection server;

    explicit Pair(const NetworkProfile& p, TransportConfig cfg = {})
        : link(p, sched, 1),
          client(Connection::Role::client, link.a(), sched, cfg, 1),
          server(Connection::Role::server, link.b(), sched, cfg, 1) {}
};

}  // namespace

TEST_CASE("handshake completes in one round trip") {
    Pair p(fast_profile(), patient_transport());
    SimTime established_at = -1;
    p.client.on_established([&] { established_at = p.sched.now(); });
    p.client.connect();
    p.sched.run();
    CHECK(established_at == 2 * kSecond);  // rtt/2 out, rtt/2 back
    CHECK(p.client.hellos_sent() == 1);
    CHECK(p.server.established());
}

TEST_CASE("data written before the handshake leaves exactly at completion") {
    Pair p(fast_profile(), patient_transport());
    p.client.connect();
    const auto sid = p.client.open_stream();
    p.client.write(sid, pattern(100), true, true);
    p.sched.run();

    SimTime first_hello = -1;
    SimTime first_app = -1;
    for (const auto& ev : p.link.trace().events) {
        if (ev.dir != Direction::up) continue;
        if (first_hello < 0 && ev.kind == DgramKind::client_hello) first_hello = ev.ts;
        if (first_app < 0 && ev.kind == DgramKind::stream && ev.app_data) first_app = ev.ts;
    }
    CHECK(first_hello == 0);
    CHECK(first_app == 2 * kSecond);
}

TEST_CASE("the default handshake timer fires inside a 2 s rtt and every hello gets a reply") {
    Pair p(fast_profile());  // 1 s initial timeout, doubling
    p.client.connect();
    p.sched.run();
    CHECK(p.client.hellos_sent() == 2);  // t=0 and the t=1s retry

    int hellos = 0;
    int replies = 0;
    for (const auto& ev : p.link.trace().events) {
        if (ev.kind == DgramKind::client_hello) ++hellos;
        if (ev.kind == DgramKind::handshake_reply) ++replies;
    }
    CHECK(hellos == 2);
    CHECK(replies == 2);
    CHECK(p.client.established());
}

TEST_CASE("a slower handshake timer removes the retry") {
    TransportConfig cfg;
    cfg.handshake_timeout = 5 * kSecond;
    Pair p(fast_profile(), cfg);
    p.client.connect();
    p.sched.run();
    CHECK(p.client.hellos_sent() == 1);
}

TEST_CASE("handshake gives up after the retry budget") {
    NetworkProfile dead = fast_profile();
    dead.loss_probability = 1.0;
    TransportConfig cfg;
    cfg.max_handshake_retries = 3;
    Pair p(dead, cfg);
    bool failed = false;
    p.client.on_handshake_failed([&] { failed = true; });
    p.client.connect();
    p.sched.run();
    CHECK(failed);
    CHECK(p.client.failed());
    CHECK(p.client.hellos_sent() == 4);  // initial + 3 retries
}

TEST_CASE("large writes are segmented under the mtu and reassembled in order") {
    Pair p(fast_profile(), patient_transport());
    std::vector<std::uint8_t> got;
    bool fin = false;
    p.server.on_stream_data([&](std::uint64_t, std::span<const std::uint8_t> d, bool f) {
        got.insert(got.end(), d.begin(), d.end());
        fin = fin || f;
    });
    p.client.connect();
    const auto payload = pattern(20000);
    p.client.write(p.client.open_stream(), payload, true);
    p.sched.run();

    CHECK(got == payload);
    CHECK(fin);
    for (const auto& ev : p.link.trace().events) CHECK(ev.size_bytes <= kMaxDatagram);
}

TEST_CASE("lossy links still deliver the exact byte stream") {
    NetworkProfile p = fast_profile(200 * kMillisecond);
    p.uplink_bps = 1e6;
    p.downlink_bps = 1e6;
    p.loss_probability = 0.25;
    p.seed = 77;
    TransportConfig cfg;
    cfg.rto_initial = 300 * kMillisecond;
    Pair pair(p, cfg);

    std::vector<std::uint8_t> got;
    bool fin = false;
    pair.server.on_stream_data([&](std::uint64_t, std::span<const std::uint8_t> d, bool f) {
        got.insert(got.end(), d.begin(), d.end());
        fin = fin || f;
    });
    pair.client.connect();
    const auto payload = pattern(50000, 7);
    pair.client.write(pair.client.open_stream(), payload, true);
    pair.sched.run();

    CHECK(fin);
    CHECK(got == payload);
    CHECK(capture_stats(pair.link.trace()).dropped > 0);
    CHECK(pair.sched.pending() == 0);  // no timer left dangling
}

TEST_CASE("stream acked callback fires once everything including fin is acked") {
    Pair p(fast_profile(), patient_transport());
    std::uint64_t acked_stream = 999;
    SimTime acked_at = -1;
    p.client.on_stream_acked([&](std::uint64_t sid) {
        acked_stream = sid;
        acked_at = p.sched.now();
    });
    p.client.connect();
    const auto sid = p.client.open_stream();
    p.client.write(sid, pattern(10), true);
    p.sched.run();
    CHECK(acked_stream == sid);
    CHECK(acked_at == 4 * kSecond);  // established at 2s, data 3s, ack back 4s
}

TEST_CASE("empty fin closes the stream direction") {
    Pair p(fast_profile(), patient_transport());
    bool fin = false;
    std::size_t bytes = 0;
    p.server.on_stream_data([&](std::uint64_t, std::span<const std::uint8_t> d, bool f) {
        bytes += d.size();
        fin = fin || f;
    });
    p.client.connect();
    p.client.write(p.client.open_stream(), {}, true);
    p.sched.run();
    CHECK(fin);
    CHECK(bytes == 0);
}

TEST_CASE("reset tears down one stream and is reported to the peer") {
    Pair p(fast_profile(), patient_transport());
    std::uint64_t reset_sid = 0;
    p.server.on_stream_reset([&](std::uint64_t sid) { reset_sid = sid; });
    p.client.connect();
    const auto keep = p.client.open_stream();
    const auto drop = p.client.open_stream();
    p.client.write(keep, pattern(5), false);
    p.client.write(drop, pattern(5), false);
    p.sched.run();
    p.client.reset_stream(drop);
    p.sched.run();
    CHECK(reset_sid == drop);
}

TEST_CASE("close reaches the peer and cancels all timers") {
    Pair p(fast_profile(), patient_transport());
    bool peer_closed = false;
    p.server.on_closed([&] { peer_closed = true; });
    p.client.connect();
    p.client.write(p.client.open_stream(), pattern(100), false);
    p.sched.run();
    p.client.close();
    p.sched.run();
    CHECK(peer_closed);
    CHECK(p.sched.pending() == 0);
}

TEST_CASE("app-data marking lands on the datagrams that carry marked bytes") {
    Pair p(fast_profile(), patient_transport());
    p.client.connect();
    p.sched.run();
    const auto sid = p.client.open_stream();
    p.client.write(sid, pattern(30), false, false);   // header-ish bytes
    p.client.write(sid, pattern(50), false, true);    // payload
    p.client.write(sid, pattern(10), true, false);    // trailer
    p.sched.run();

    std::vector<bool> marks;
    for (const auto& ev : p.link.trace().events) {
        if (ev.dir == Direction::up && ev.kind == DgramKind::stream) {
            marks.push_back(ev.app_data);
        }
    }
    // Writes flushed immediately: one datagram each.
    REQUIRE(marks.size() == 3);
    CHECK(marks[0] == false);
    CHECK(marks[1] == true);
    CHECK(marks[2] == false);
}

TEST_CASE("coalesced header and payload bytes mark the shared datagram") {
    Pair p(fast_profile(), patient_transport());
    const auto sid = p.client.open_stream();
    p.client.write(sid, pattern(30), false, false);
    p.client.write(sid, pattern(50), true, true);
    p.client.connect();  // both writes flush together at establishment
    p.sched.run();

    int stream_dgrams = 0;
    bool first_marked = false;
    for (const auto& ev : p.link.trace().events) {
        if (ev.dir == Direction::up && ev.kind == DgramKind::stream) {
            if (stream_dgrams++ == 0) first_marked = ev.app_data;
        }
    }
    CHECK(stream_dgrams == 1);
    CHECK(first_marked);
}
