#include "core/mqtt_endpoint.hpp"

namespace h3ps::mqtt {

// ---------------------------------------------------------------------------
// Client
// ---------------------------------------------------------------------------

Client::Client(net::Connection& conn, Scheduler& sched, ClientOptions options)
    : conn_(conn), sched_(sched), options_(std::move(options)) {
    conn_.on_stream_data([this](std::uint64_t sid, std::span<const std::uint8_t> b, bool) {
        if (sid == kSessionStream) on_stream_data(b);
    });
}

void Client::send_packet(const Packet& p, bool app_data, bool fin) {
    conn_.write(kSessionStream, encode_packet(p), fin, app_data);
}

void Client::connect(AckFn done) {
    if (phase_ != Phase::idle) {
        if (done) done(ClientError::protocol_violation);
        return;
    }
    connect_done_ = std::move(done);
    Connect c;
    c.client_id = options_.client_id;
    c.auth_method = options_.auth_method;
    c.username = options_.username;
    c.password = options_.password;
    phase_ = Phase::connect_sent;
    send_packet(Packet{std::move(c)}, false);
}

Result<Unit, ClientError> Client::publish(const TopicName& topic,
                                          std::span<const std::uint8_t> payload) {
    if (phase_ != Phase::established) return ClientError::protocol_violation;
    Publish p;
    p.topic = topic.str();
    p.payload.assign(payload.begin(), payload.end());
    send_packet(Packet{std::move(p)}, true);
    return Unit{};
}

Result<Unit, ClientError> Client::subscribe(const TopicName& topic, EventFn on_event, AckFn done) {
    if (phase_ != Phase::established) return ClientError::protocol_violation;
    const std::uint16_t id = next_packet_id_++;
    pending_subacks_[id] = std::move(done);
    pending_sub_topics_[id] = topic.str();
    handlers_[topic.str()] = std::move(on_event);
    send_packet(Packet{Subscribe{id, topic.str()}}, false);
    return Unit{};
}

void Client::disconnect(std::uint8_t reason) {
    if (phase_ == Phase::idle || phase_ == Phase::closed) return;
    send_packet(Packet{Disconnect{reason}}, false, true);
    phase_ = Phase::closed;
}

void Client::on_stream_data(std::span<const std::uint8_t> bytes) {
    rx_.insert(rx_.end(), bytes.begin(), bytes.end());
    for (;;) {
        auto r = decode_packet(rx_);
        if (!r.ok()) {
            if (r.error() == CodecError::malformed) {
                disconnect(kReasonProtocolError);
            }
            return;
        }
        Packet p = std::move(r.value().packet);
        rx_.erase(rx_.begin(), rx_.begin() + r.value().consumed);
        handle_packet(std::move(p));
        if (phase_ == Phase::closed) return;
    }
}

void Client::handle_packet(Packet&& p) {
    if (const auto* ca = std::get_if<Connack>(&p)) {
        if (phase_ != Phase::connect_sent) return;
        AckFn done = std::move(connect_done_);
        connect_done_ = {};
        if (ca->reason_code == kReasonSuccess) {
            phase_ = Phase::established;
            if (done) done(ca->reason_code);
        } else {
            phase_ = Phase::closed;
            if (done) done(ClientError::refused);
        }
        return;
    }
    if (const auto* sa = std::get_if<Suback>(&p)) {
        auto it = pending_subacks_.find(sa->packet_id);
        if (it == pending_subacks_.end()) return;
        AckFn done = std::move(it->second);
        pending_subacks_.erase(it);
        auto topic_it = pending_sub_topics_.find(sa->packet_id);
        const std::string topic =
            topic_it != pending_sub_topics_.end() ? topic_it->second : std::string{};
        pending_sub_topics_.erase(sa->packet_id);
        if (sa->reason_code >= 0x80) {
            handlers_.erase(topic);
            if (done) done(ClientError::refused);
        } else if (done) {
            done(sa->reason_code);
        }
        return;
    }
    if (const auto* pub = std::get_if<Publish>(&p)) {
        auto it = handlers_.find(pub->topic);
        if (it != handlers_.end() && it->second) it->second(pub->payload);
        return;
    }
    if (std::get_if<Disconnect>(&p)) {
        phase_ = Phase::closed;
        return;
    }
    // CONNECT/SUBSCRIBE/AUTH arriving at a client are outside the protocol.
}

// ---------------------------------------------------------------------------
// BrokerEndpoint
// ---------------------------------------------------------------------------

BrokerEndpoint::BrokerEndpoint(Broker& broker, net::Connection& conn, Scheduler& sched,
                               AuthConfig auth)
    : broker_(broker), conn_(conn), sched_(sched), auth_(std::move(auth)) {
    conn_.on_stream_data([this](std::uint64_t sid, std::span<const std::uint8_t> b, bool) {
        if (sid == kSessionStream) on_stream_data(b);
    });
    conn_.on_closed([this] { release_all(); });
}

BrokerEndpoint::~BrokerEndpoint() {
    release_all();
}

void BrokerEndpoint::on_stream_data(std::span<const std::uint8_t> bytes) {
    if (dead_) return;
    rx_.insert(rx_.end(), bytes.begin(), bytes.end());
    for (;;) {
        auto r = decode_packet(rx_);
        if (!r.ok()) {
            if (r.error() == CodecError::malformed) protocol_error();
            return;
        }
        Packet p = std::move(r.value().packet);
        rx_.erase(rx_.begin(), rx_.begin() + r.value().consumed);
        handle_packet(std::move(p));
        if (dead_) return;
    }
}

void BrokerEndpoint::protocol_error() {
    conn_.write(kSessionStream, encode_packet(Packet{Disconnect{kReasonProtocolError}}), true,
                false);
    release_all();
    dead_ = true;
}

void BrokerEndpoint::handle_packet(Packet&& p) {
    if (const auto* c = std::get_if<Connect>(&p)) {
        if (connected_) {
            protocol_error();  // second CONNECT on a session
            return;
        }
        // Credentials are checked before any CONNACK goes out.
        if (auth_.required) {
            const bool ok = c->username && c->password && *c->username == auth_.username &&
                            *c->password == auth_.password;
            if (!ok) {
                conn_.write(kSessionStream,
                            encode_packet(Packet{Connack{kReasonBadCredentials}}), true, false);
                dead_ = true;
                return;
            }
        }
        connected_ = true;
        conn_.write(kSessionStream, encode_packet(Packet{Connack{kReasonSuccess}}), false, false);
        return;
    }

    if (!connected_) {
        // MQTT 5: the first packet from the client must be CONNECT.
        protocol_error();
        return;
    }

    if (const auto* pub = std::get_if<Publish>(&p)) {
        auto topic = TopicName::parse(pub->topic);
        if (!topic.ok()) return;  // nothing to signal at QoS 0
        broker_.publish(topic.value(), pub->payload);
        return;
    }
    if (const auto* sub = std::get_if<Subscribe>(&p)) {
        auto topic = TopicName::parse(sub->topic);
        std::uint8_t reason = kReasonSuccess;
        if (!topic.ok()) {
            reason = kReasonUnspecifiedError;
        } else if (!subscriptions_.count(sub->topic)) {
            // Topics must pre-exist, mirroring the 404 on the other path.
            auto r = broker_.subscribe(topic.value());
            if (r.ok()) {
                subscriptions_[sub->topic] = r.value();
                const std::string name = sub->topic;
                r.value()->sink().set_notify(
                    [this, name] { sched_.post([this, name] { pump(name); }); });
            } else {
                reason = kReasonUnspecifiedError;
            }
        }
        conn_.write(kSessionStream, encode_packet(Packet{Suback{sub->packet_id, reason}}), false,
                    false);
        return;
    }
    if (std::get_if<Disconnect>(&p)) {
        release_all();
        dead_ = true;
        return;
    }
    if (std::get_if<Auth>(&p)) {
        return;  // enhanced auth exchanges are not part of the measured subset
    }
    protocol_error();  // CONNACK/SUBACK from a client
}

void BrokerEndpoint::pump(const std::string& topic) {
    auto it = subscriptions_.find(topic);
    if (it == subscriptions_.end() || dead_) return;
    auto& sink = it->second->sink();
    while (auto msg = sink.try_pop()) {
        Publish out;
        out.topic = topic;
        out.payload = std::move(msg->payload);
        conn_.write(kSessionStream, encode_packet(Packet{std::move(out)}), false, true);
    }
    if (sink.closed() && sink.size() == 0) {
        // Topic deleted; the subset has no unsolicited unsubscribe signal.
        sink.set_notify({});
        subscriptions_.erase(it);
    }
}

void BrokerEndpoint::release_all() {
    for (auto& [name, sub] : subscriptions_) {
        sub->sink().set_notify({});
        broker_.unsubscribe(sub->id());
    }
    subscriptions_.clear();
}

}  // namespace h3ps::mqtt
