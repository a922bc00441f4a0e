#include <doctest.h>

#include <limits>
#include <memory>

#include "core/h3_endpoint.hpp"
#include "core/mqtt_endpoint.hpp"
#include "core/netsim.hpp"

// One broker serving both protocol endpoints at once, with the hello's
// protocol token deciding which handler a connection gets.

using namespace h3ps;

namespace {

TopicName topic(const char* name) {
    return TopicName::parse(name).value();
}

net::NetworkProfile fast_profile() {
    net::NetworkProfile p;
    p.uplink_bps = std::numeric_limits<double>::infinity();
    p.downlink_bps = std::numeric_limits<double>::infinity();
    p.rtt = 100 * kMillisecond;
    return p;
}

}  // namespace

TEST_CASE("one broker co-hosts h3 and mqtt endpoints keyed by the hello token") {
    VirtualScheduler sched;
    Broker broker(Broker::Config{}, [&sched] { return sched.now(); });
    broker.create_topic(topic("shared"));

    struct Accepted {
        std::unique_ptr<h3::ServerEndpoint> h3;
        std::unique_ptr<mqtt::BrokerEndpoint> mqtt;
    };

    auto serve = [&](net::Connection& conn, Accepted& slot) {
        conn.on_established([&] {
            if (conn.peer_alpn() == "h3") {
                slot.h3 = std::make_unique<h3::ServerEndpoint>(broker, conn, sched);
            } else if (conn.peer_alpn() == "mqtt") {
                slot.mqtt = std::make_unique<mqtt::BrokerEndpoint>(broker, conn, sched,
                                                                   mqtt::AuthConfig{});
            }
        });
    };

    net::TransportConfig h3_cfg;
    h3_cfg.alpn = "h3";
    h3_cfg.handshake_timeout = 60 * kSecond;
    net::TransportConfig mqtt_cfg = h3_cfg;
    mqtt_cfg.alpn = "mqtt";

    net::VirtualLink l1(fast_profile(), sched, 1);
    net::VirtualLink l2(fast_profile(), sched, 2);
    net::Connection h3_client(net::Connection::Role::client, l1.a(), sched, h3_cfg, 1);
    net::Connection h3_server(net::Connection::Role::server, l1.b(), sched, h3_cfg, 1);
    net::Connection mq_client(net::Connection::Role::client, l2.a(), sched, mqtt_cfg, 2);
    net::Connection mq_server(net::Connection::Role::server, l2.b(), sched, mqtt_cfg, 2);

    Accepted slot1, slot2;
    serve(h3_server, slot1);
    serve(mq_server, slot2);

    h3::Client web(h3_client, sched);
    mqtt::Client device(mq_client, sched, mqtt::ClientOptions{});
    h3_client.connect();
    mq_client.connect();

    // The mqtt session publishes; the h3 side sees it via the shared broker.
    std::vector<std::uint8_t> seen;
    h3::Client::SubscriptionEvents ev;
    ev.on_event = [&](std::span<const std::uint8_t> p) { seen.assign(p.begin(), p.end()); };
    ev.on_result = [](h3::StatusOutcome o) { REQUIRE(o.code == 200); };
    ev.on_end = [](bool) {};
    web.subscribe(topic("shared"), std::move(ev));

    device.connect([&](Result<std::uint8_t, mqtt::ClientError> r) {
        REQUIRE(r.ok());
        device.publish(topic("shared"), std::vector<std::uint8_t>{9, 8, 7});
    });
    sched.run();

    CHECK(h3_server.peer_alpn() == "h3");
    CHECK(mq_server.peer_alpn() == "mqtt");
    CHECK(slot1.h3 != nullptr);
    CHECK(slot1.mqtt == nullptr);
    CHECK(slot2.mqtt != nullptr);
    CHECK(seen == std::vector<std::uint8_t>{9, 8, 7});
}
