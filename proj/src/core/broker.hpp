#pragma once

#include <condition_variable>
#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "core/result.hpp"
#include "core/sim_time.hpp"
#include "core/topic.hpp"

namespace h3ps {

struct Message {
    std::uint64_t seq = 0;
    std::vector<std::uint8_t> payload;
    SimTime published_at = 0;
};

/// Ordered single-producer/single-consumer delivery channel. The broker is
/// the producer; one subscriber stream drains it. push() blocks while the
/// queue is at capacity so fan-out stays lossless and in order.
class SubscriberSink {
public:
    explicit SubscriberSink(std::size_t capacity) : capacity_(capacity) {}

    /// Blocks while full. Returns false once the sink has been closed.
    bool push(Message m);

    std::optional<Message> try_pop();

    /// Blocks until a message arrives or the sink closes with nothing left.
    std::optional<Message> pop_wait();

    /// End-of-stream: wakes producer and consumer, rejects further pushes.
    void close();

    bool closed() const;
    std::size_t size() const;

    /// Hook fired after every push and on close; used by endpoints to
    /// schedule a drain. Must not call back into the sink synchronously.
    void set_notify(std::function<void()> fn);

private:
    mutable std::mutex mu_;
    std::condition_variable cv_space_;
    std::condition_variable cv_items_;
    std::deque<Message> q_;
    std::size_t capacity_;
    bool closed_ = false;
    std::function<void()> notify_;
};

using SubscriberId = std::uint64_t;

class Subscriber {
public:
    Subscriber(SubscriberId id, TopicName topic, std::size_t capacity)
        : id_(id), topic_(std::move(topic)), sink_(capacity) {}

    SubscriberId id() const { return id_; }
    const TopicName& topic() const { return topic_; }
    SubscriberSink& sink() { return sink_; }

private:
    SubscriberId id_;
    TopicName topic_;
    SubscriberSink sink_;
};

using SubscriberPtr = std::shared_ptr<Subscriber>;

enum class PublishError { not_found, payload_too_large };
enum class SubscribeError { not_found };

/// Transport-agnostic broker state: topic registry, per-topic retained FIFO,
/// subscriber registry, and publish fan-out. All operations are safe for
/// concurrent callers and linearize on an internal lock.
class Broker {
public:
    struct Config {
        std::size_t retained_capacity = 100;
        std::size_t max_message_size = 1 << 20;
        std::size_t sink_capacity = 64;
    };

    enum class Create { created, already_exists };

    Broker() : Broker(Config{}) {}
    explicit Broker(Config cfg, std::function<SimTime()> clock = {});

    Create create_topic(const TopicName& name);
    bool topic_exists(const TopicName& name) const;

    /// Removes the topic, closes every subscriber sink registered under it,
    /// and discards retained messages. Returns false when absent.
    bool delete_topic(const TopicName& name);

    /// Appends to the retained FIFO and enqueues on every registered sink in
    /// registration order. Returns the number of sinks registered at the
    /// linearization instant.
    Result<std::size_t, PublishError> publish(const TopicName& name,
                                              std::span<const std::uint8_t> payload);

    /// Registers a new subscriber. It sees only messages published after
    /// registration; retained history is not replayed.
    Result<SubscriberPtr, SubscribeError> subscribe(const TopicName& name);

    /// Removes the handle and closes its sink. False for unknown handles
    /// (including handles already removed by delete_topic).
    bool unsubscribe(SubscriberId id);

    const Config& config() const { return cfg_; }

    // Inspection, primarily for tests and stats.
    std::vector<Message> retained(const TopicName& name) const;
    std::size_t subscriber_count(const TopicName& name) const;
    std::size_t topic_count() const;

private:
    struct TopicRecord {
        std::uint64_t next_seq = 1;
        std::deque<Message> retained;
        std::vector<SubscriberPtr> subscribers;
    };

    Config cfg_;
    std::function<SimTime()> clock_;
    mutable std::mutex mu_;
    std::map<std::string, TopicRecord> topics_;
    std::map<SubscriberId, std::string> subscriber_topics_;
    SubscriberId next_subscriber_id_ = 1;
};

}  // namespace h3ps
