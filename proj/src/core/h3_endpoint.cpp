#include "core/h3_endpoint.hpp"

#include <charconv>

namespace h3ps::h3 {

std::optional<Method> method_from_string(std::string_view s) {
    if (s == "HEAD") return Method::head;
    if (s == "PUT") return Method::put;
    if (s == "DELETE") return Method::del;
    if (s == "POST") return Method::post;
    if (s == "GET") return Method::get;
    return std::nullopt;
}

const char* to_string(Method m) {
    switch (m) {
    case Method::head: return "HEAD";
    case Method::put: return "PUT";
    case Method::del: return "DELETE";
    case Method::post: return "POST";
    case Method::get: return "GET";
    }
    return "?";
}

Result<TopicName, int> Router::topic_from_path(std::string_view path) {
    constexpr std::string_view prefix = "/topic/";
    if (!path.starts_with(prefix)) return 400;
    auto name = TopicName::parse(path.substr(prefix.size()));
    if (!name.ok()) return 400;
    return name.value();
}

RouteResult Router::route(Method method, std::string_view path,
                          std::span<const std::uint8_t> body) {
    auto topic = topic_from_path(path);
    if (!topic.ok()) return {{topic.error(), {}}, nullptr};
    const TopicName& name = topic.value();

    switch (method) {
    case Method::head:
        return {{broker_.topic_exists(name) ? 200 : 404, {}}, nullptr};
    case Method::put:
        return {{broker_.create_topic(name) == Broker::Create::created ? 201 : 200, {}}, nullptr};
    case Method::del:
        return {{broker_.delete_topic(name) ? 200 : 404, {}}, nullptr};
    case Method::post: {
        auto r = broker_.publish(name, body);
        if (r.ok()) return {{200, {}}, nullptr};
        return {{r.error() == PublishError::not_found ? 404 : 413, {}}, nullptr};
    }
    case Method::get: {
        auto r = broker_.subscribe(name);
        if (r.ok()) return {{200, {}}, r.value()};
        return {{404, {}}, nullptr};
    }
    }
    return {{400, {}}, nullptr};
}

namespace {
std::string status_str(int code) {
    char buf[8];
    auto [end, ec] = std::to_chars(buf, buf + sizeof buf, code);
    return std::string(buf, end);
}
}  // namespace

// ---------------------------------------------------------------------------
// ServerEndpoint
// ---------------------------------------------------------------------------

ServerEndpoint::ServerEndpoint(Broker& broker, net::Connection& conn, Scheduler& sched)
    : broker_(broker), conn_(conn), sched_(sched), router_(broker) {
    conn_.on_stream_data([this](std::uint64_t sid, std::span<const std::uint8_t> b, bool fin) {
        on_stream_data(sid, b, fin);
    });
    conn_.on_stream_reset([this](std::uint64_t sid) { drop_stream(sid); });
    conn_.on_closed([this] { release_all(); });
}

ServerEndpoint::~ServerEndpoint() {
    release_all();
}

void ServerEndpoint::on_stream_data(std::uint64_t sid, std::span<const std::uint8_t> bytes,
                                    bool fin) {
    RequestStream& st = streams_[sid];
    if (st.responded && !st.subscription) return;
    st.reader.feed(bytes);

    while (auto frame = st.reader.next()) {
        if (st.bad_request) break;
        if (frame->type == kFrameHeaders && !st.headers_done) {
            auto headers = decode_field_section(frame->payload);
            if (!headers.ok()) {
                st.bad_request = true;
                break;
            }
            auto method = header_value(headers.value(), ":method");
            auto path = header_value(headers.value(), ":path");
            if (!method || !path) {
                st.bad_request = true;
                break;
            }
            st.method = method_from_string(*method);
            if (!st.method) st.bad_request = true;
            st.path = *path;
            st.headers_done = true;
        } else if (frame->type == kFrameData && st.headers_done) {
            // Cap the buffered body just past the publish limit; the route
            // answers 413 for anything bigger anyway.
            const std::size_t cap = broker_.config().max_message_size + 1;
            if (st.body.size() < cap) {
                const std::size_t room = cap - st.body.size();
                const std::size_t take = std::min(room, frame->payload.size());
                st.body.insert(st.body.end(), frame->payload.begin(),
                               frame->payload.begin() + take);
            }
        } else if (frame->type == kFrameHeaders || frame->type == kFrameData) {
            st.bad_request = true;  // out of order
        }
        // Unknown frame types are skipped, as a real stack would.
    }

    if (fin && !st.responded) finish_request(sid, st);
}

void ServerEndpoint::finish_request(std::uint64_t sid, RequestStream& st) {
    if (st.bad_request || !st.headers_done || !st.method) {
        respond(sid, 400, {}, true);
        return;
    }
    RouteResult r = router_.route(*st.method, st.path, st.body);
    if (r.subscription) {
        st.subscription = r.subscription;
        respond(sid, 200, {}, false);
        start_subscription(sid, st);
    } else {
        respond(sid, r.status.code, r.status.body, true);
    }
}

void ServerEndpoint::respond(std::uint64_t sid, int code, std::span<const std::uint8_t> body,
                             bool fin) {
    RequestStream& st = streams_[sid];
    st.responded = true;
    HeaderList headers{{":status", status_str(code)}};
    if (!fin || !body.empty()) headers.emplace_back("content-type", "application/octet-stream");
    auto block = encode_field_section(headers);
    auto frame = encode_frame(kFrameHeaders, block);
    conn_.write(sid, frame, body.empty() && fin, false);
    if (!body.empty()) {
        auto data = encode_frame(kFrameData, body);
        conn_.write(sid, data, fin, false);
    }
    if (fin && !st.subscription) streams_.erase(sid);
}

void ServerEndpoint::start_subscription(std::uint64_t sid, RequestStream& st) {
    auto& sink = st.subscription->sink();
    sink.set_notify([this, sid] {
        sched_.post([this, sid] { pump_subscription(sid); });
    });
    // Catch anything that raced in before the notify hook was set.
    pump_subscription(sid);
}

void ServerEndpoint::pump_subscription(std::uint64_t sid) {
    auto it = streams_.find(sid);
    if (it == streams_.end() || !it->second.subscription) return;
    auto& sink = it->second.subscription->sink();
    while (auto msg = sink.try_pop()) {
        auto ev = encode_event_frame(msg->payload);
        auto frame = encode_frame(kFrameData, ev);
        conn_.write(sid, frame, false, true);
    }
    if (sink.closed() && sink.size() == 0) {
        // Topic deleted (or unsubscribed elsewhere): end the stream cleanly.
        conn_.write(sid, {}, true, false);
        streams_.erase(sid);
    }
}

void ServerEndpoint::drop_stream(std::uint64_t sid) {
    auto it = streams_.find(sid);
    if (it == streams_.end()) return;
    if (it->second.subscription) {
        it->second.subscription->sink().set_notify({});
        broker_.unsubscribe(it->second.subscription->id());
    }
    streams_.erase(it);
}

void ServerEndpoint::release_all() {
    for (auto& [sid, st] : streams_) {
        if (st.subscription) {
            st.subscription->sink().set_notify({});
            broker_.unsubscribe(st.subscription->id());
        }
    }
    streams_.clear();
}

// ---------------------------------------------------------------------------
// Client
// ---------------------------------------------------------------------------

Client::Client(net::Connection& conn, Scheduler& sched, std::string authority)
    : conn_(conn), sched_(sched), authority_(std::move(authority)) {
    conn_.on_stream_data([this](std::uint64_t sid, std::span<const std::uint8_t> b, bool fin) {
        on_stream_data(sid, b, fin);
    });
    conn_.on_stream_reset([this](std::uint64_t sid) {
        auto it = pending_.find(sid);
        if (it == pending_.end()) return;
        auto events = std::move(it->second.events);
        const bool was_sub = it->second.is_subscription;
        pending_.erase(it);
        if (was_sub && events.on_end) events.on_end(false);
    });
}

Client::~Client() = default;

HeaderList Client::request_headers(Method method, std::string_view topic,
                                   std::size_t body_size) const {
    HeaderList h;
    h.emplace_back(":method", to_string(method));
    h.emplace_back(":scheme", "https");
    h.emplace_back(":authority", authority_);
    h.emplace_back(":path", std::string("/topic/") + std::string(topic));
    if (method == Method::post) {
        h.emplace_back("content-type", "application/octet-stream");
        h.emplace_back("content-length", std::to_string(body_size));
    }
    return h;
}

std::uint64_t Client::send_request(Method method, std::string_view topic,
                                   std::span<const std::uint8_t> body) {
    const std::uint64_t sid = conn_.open_stream();
    auto block = encode_field_section(request_headers(method, topic, body.size()));
    auto headers = encode_frame(kFrameHeaders, block);
    if (body.empty()) {
        conn_.write(sid, headers, true, false);
    } else {
        conn_.write(sid, headers, false, false);
        auto data = encode_frame(kFrameData, body);
        conn_.write(sid, data, true, true);  // the measured application payload
    }
    return sid;
}

void Client::exists(const TopicName& topic, StatusFn done) {
    request_raw(Method::head, topic.str(), {}, std::move(done));
}
void Client::create(const TopicName& topic, StatusFn done) {
    request_raw(Method::put, topic.str(), {}, std::move(done));
}
void Client::remove(const TopicName& topic, StatusFn done) {
    request_raw(Method::del, topic.str(), {}, std::move(done));
}
void Client::publish(const TopicName& topic, std::span<const std::uint8_t> payload,
                     StatusFn done) {
    request_raw(Method::post, topic.str(), payload, std::move(done));
}

void Client::request_raw(Method method, std::string_view raw_topic,
                         std::span<const std::uint8_t> body, StatusFn done) {
    const std::uint64_t sid = send_request(method, raw_topic, body);
    PendingStream& ps = pending_[sid];
    ps.done = std::move(done);
}

std::uint64_t Client::subscribe(const TopicName& topic, SubscriptionEvents events) {
    const std::uint64_t sid = send_request(Method::get, topic.str(), {});
    PendingStream& ps = pending_[sid];
    ps.is_subscription = true;
    ps.events = std::move(events);
    return sid;
}

void Client::cancel(std::uint64_t handle) {
    auto it = pending_.find(handle);
    if (it == pending_.end()) return;
    it->second.cancelled = true;
    pending_.erase(it);
    conn_.reset_stream(handle);
}

void Client::on_stream_data(std::uint64_t sid, std::span<const std::uint8_t> bytes, bool fin) {
    auto it = pending_.find(sid);
    if (it == pending_.end()) return;
    PendingStream& ps = it->second;
    ps.reader.feed(bytes);

    while (auto frame = ps.reader.next()) {
        if (frame->type == kFrameHeaders && !ps.got_status) {
            ps.got_status = true;
            int code = 0;
            if (auto hs = decode_field_section(frame->payload); hs.ok()) {
                if (auto status = header_value(hs.value(), ":status")) {
                    std::from_chars(status->data(), status->data() + status->size(), code);
                }
            }
            ps.code = code;
            if (ps.is_subscription) {
                if (ps.events.on_result) ps.events.on_result({code, {}});
                if (!pending_.count(sid)) return;  // cancelled from the callback
                if (code != 200) {
                    pending_.erase(sid);
                    return;
                }
            }
        } else if (frame->type == kFrameData && ps.got_status) {
            if (ps.is_subscription) {
                ps.event_buf.insert(ps.event_buf.end(), frame->payload.begin(),
                                    frame->payload.end());
                auto frames = decode_event_frames(ps.event_buf);
                ps.event_buf = std::move(frames.remainder);
                for (const auto& payload : frames.payloads) {
                    if (ps.events.on_event) ps.events.on_event(payload);
                    if (!pending_.count(sid)) return;  // cancelled from the callback
                }
            }
        }
    }

    if (fin) {
        auto node = pending_.extract(sid);
        if (node.empty()) return;
        PendingStream& fin_ps = node.mapped();
        if (fin_ps.is_subscription) {
            if (fin_ps.events.on_end) fin_ps.events.on_end(true);
        } else if (fin_ps.done) {
            fin_ps.done({fin_ps.code, {}});
        }
    }
}

}  // namespace h3ps::h3
