#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "core/broker.hpp"
#include "core/h3_wire.hpp"
#include "core/scheduler.hpp"
#include "core/transport.hpp"

namespace h3ps::h3 {

enum class Method { head, put, del, post, get };

std::optional<Method> method_from_string(std::string_view s);
const char* to_string(Method m);

struct StatusOutcome {
    int code = 0;
    std::vector<std::uint8_t> body;
};

struct RouteResult {
    StatusOutcome status;
    SubscriberPtr subscription;  // set iff GET resolved to 200
};

/// Maps request semantics onto the broker:
///   HEAD   /topic/{name} -> topic_exists   (200 / 404)
///   PUT    /topic/{name} -> create_topic   (201 created / 200 exists)
///   DELETE /topic/{name} -> delete_topic   (200 / 404)
///   POST   /topic/{name} -> publish        (200 / 404 / 413)
///   GET    /topic/{name} -> subscribe      (200 + open stream / 404)
/// Malformed paths and invalid topic names yield 400.
class Router {
public:
    explicit Router(Broker& broker) : broker_(broker) {}

    RouteResult route(Method method, std::string_view path, std::span<const std::uint8_t> body);

    /// Extracts and validates `{name}` from `/topic/{name}`; the error is the
    /// status code to return (always 400).
    static Result<TopicName, int> topic_from_path(std::string_view path);

private:
    Broker& broker_;
};

/// Broker-side handler for one accepted connection. Parses request streams,
/// routes them, and carries subscriptions as long-lived streamed responses of
/// length-prefixed event frames.
class ServerEndpoint {
public:
    ServerEndpoint(Broker& broker, net::Connection& conn, Scheduler& sched);
    ~ServerEndpoint();

private:
    struct RequestStream {
        FrameReader reader;
        std::optional<Method> method;
        std::string path;
        std::vector<std::uint8_t> body;
        bool headers_done = false;
        bool bad_request = false;
        bool responded = false;
        SubscriberPtr subscription;
    };

    void on_stream_data(std::uint64_t sid, std::span<const std::uint8_t> bytes, bool fin);
    void finish_request(std::uint64_t sid, RequestStream& st);
    void respond(std::uint64_t sid, int code, std::span<const std::uint8_t> body, bool fin);
    void start_subscription(std::uint64_t sid, RequestStream& st);
    void pump_subscription(std::uint64_t sid);
    void drop_stream(std::uint64_t sid);
    void release_all();

    Broker& broker_;
    net::Connection& conn_;
    Scheduler& sched_;
    Router router_;
    std::map<std::uint64_t, RequestStream> streams_;
};

/// Client SDK. One connection may carry any number of concurrent operations,
/// each on its own request stream.
class Client {
public:
    using StatusFn = std::function<void(StatusOutcome)>;

    Client(net::Connection& conn, Scheduler& sched, std::string authority = "broker.sim");
    ~Client();

    void exists(const TopicName& topic, StatusFn done);
    void create(const TopicName& topic, StatusFn done);
    void remove(const TopicName& topic, StatusFn done);

    /// POST with the payload as body; the request (headers coalesced with the
    /// first body bytes) is the first thing this client ever sends, so data
    /// goes out immediately after the transport handshake completes.
    void publish(const TopicName& topic, std::span<const std::uint8_t> payload, StatusFn done);

    /// Raw-path variant used to exercise server-side validation.
    void request_raw(Method method, std::string_view raw_topic,
                     std::span<const std::uint8_t> body, StatusFn done);

    struct SubscriptionEvents {
        std::function<void(std::span<const std::uint8_t>)> on_event;
        StatusFn on_result;                    // subscribe status, once
        std::function<void(bool clean)> on_end;  // fin (clean) or reset
    };

    /// Returns the subscription handle (its stream id).
    std::uint64_t subscribe(const TopicName& topic, SubscriptionEvents events);

    /// Cancels a subscription: resets the request stream, which unsubscribes
    /// broker-side. No further on_event calls afterwards.
    void cancel(std::uint64_t handle);

private:
    struct PendingStream {
        FrameReader reader;
        bool got_status = false;
        int code = 0;
        bool is_subscription = false;
        bool cancelled = false;
        std::vector<std::uint8_t> event_buf;  // partial event frame
        StatusFn done;
        SubscriptionEvents events;
    };

    void on_stream_data(std::uint64_t sid, std::span<const std::uint8_t> bytes, bool fin);
    std::uint64_t send_request(Method method, std::string_view topic,
                               std::span<const std::uint8_t> body);
    HeaderList request_headers(Method method, std::string_view topic, std::size_t body_size) const;

    net::Connection& conn_;
    Scheduler& sched_;
    std::string authority_;
    std::map<std::uint64_t, PendingStream> pending_;
};

}  // namespace h3ps::h3
