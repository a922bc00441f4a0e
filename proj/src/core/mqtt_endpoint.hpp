#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "core/broker.hpp"
#include "core/mqtt_codec.hpp"
#include "core/scheduler.hpp"
#include "core/transport.hpp"

namespace h3ps::mqtt {

// All MQTT packets for a session flow over one client-opened bidirectional
// stream (id 0), in both directions.
inline constexpr std::uint64_t kSessionStream = 0;

enum class Phase { idle, connect_sent, established, closed };

enum class ClientError {
    protocol_violation,  // packet not sendable in the current phase
    refused,             // CONNACK/SUBACK carried a failure reason
    transport,
};

struct ClientOptions {
    std::string client_id = "client";
    std::optional<std::string> username;
    std::optional<std::string> password;
    std::optional<std::string> auth_method;

    bool auth_gated() const { return username || password || auth_method; }
};

/// Client session state machine. While ConnectSent with authentication
/// configured, the only packets this session will emit are AUTH and
/// DISCONNECT; PUBLISH and SUBSCRIBE attempts fail locally with
/// protocol_violation and put nothing on the wire. That gate is what costs
/// the MQTT path one extra round trip before any payload can leave.
class Client {
public:
    using EventFn = std::function<void(std::span<const std::uint8_t>)>;
    using AckFn = std::function<void(Result<std::uint8_t, ClientError>)>;

    Client(net::Connection& conn, Scheduler& sched, ClientOptions options);

    /// Sends CONNECT (once the transport is up) and waits for CONNACK.
    void connect(AckFn done);

    /// QoS 0 publish: one PUBLISH packet, no acknowledgment awaited.
    Result<Unit, ClientError> publish(const TopicName& topic,
                                      std::span<const std::uint8_t> payload);

    Result<Unit, ClientError> subscribe(const TopicName& topic, EventFn on_event, AckFn done);

    /// Allowed even while ConnectSent. Marks the stream finished so the peer
    /// can tell the session is complete.
    void disconnect(std::uint8_t reason = kReasonSuccess);

    Phase phase() const { return phase_; }
    bool auth_gated() const { return options_.auth_gated(); }

private:
    void send_packet(const Packet& p, bool app_data, bool fin = false);
    void on_stream_data(std::span<const std::uint8_t> bytes);
    void handle_packet(Packet&& p);

    net::Connection& conn_;
    Scheduler& sched_;
    ClientOptions options_;
    Phase phase_ = Phase::idle;
    AckFn connect_done_;
    std::uint16_t next_packet_id_ = 1;
    std::map<std::uint16_t, AckFn> pending_subacks_;
    std::map<std::uint16_t, std::string> pending_sub_topics_;
    std::map<std::string, EventFn> handlers_;
    std::vector<std::uint8_t> rx_;
};

struct AuthConfig {
    bool required = false;
    std::string username;
    std::string password;
};

/// Broker-side session for one accepted connection: answers CONNECT with
/// CONNACK (validating basic auth before replying when configured),
/// dispatches PUBLISH/SUBSCRIBE into the broker, and forwards fan-out
/// messages back as PUBLISH packets. Protocol violations close the stream
/// with DISCONNECT.
class BrokerEndpoint {
public:
    BrokerEndpoint(Broker& broker, net::Connection& conn, Scheduler& sched, AuthConfig auth = {});
    ~BrokerEndpoint();

private:
    void on_stream_data(std::span<const std::uint8_t> bytes);
    void handle_packet(Packet&& p);
    void protocol_error();
    void pump(const std::string& topic);
    void release_all();

    Broker& broker_;
    net::Connection& conn_;
    Scheduler& sched_;
    AuthConfig auth_;
    bool connected_ = false;
    bool dead_ = false;
    std::vector<std::uint8_t> rx_;
    std::map<std::string, SubscriberPtr> subscriptions_;
};

}  // namespace h3ps::mqtt
