#include "core/broker.hpp"

#include <algorithm>
#include <chrono>

namespace h3ps {

bool SubscriberSink::push(Message m) {
    std::function<void()> notify;
    {
        std::unique_lock lock(mu_);
        cv_space_.wait(lock, [&] { return closed_ || q_.size() < capacity_; });
        if (closed_) return false;
        q_.push_back(std::move(m));
        cv_items_.notify_one();
        notify = notify_;
    }
    if (notify) notify();
    return true;
}

std::optional<Message> SubscriberSink::try_pop() {
    std::lock_guard lock(mu_);
    if (q_.empty()) return std::nullopt;
    Message m = std::move(q_.front());
    q_.pop_front();
    cv_space_.notify_one();
    return m;
}

std::optional<Message> SubscriberSink::pop_wait() {
    std::unique_lock lock(mu_);
    cv_items_.wait(lock, [&] { return closed_ || !q_.empty(); });
    if (q_.empty()) return std::nullopt;
    Message m = std::move(q_.front());
    q_.pop_front();
    cv_space_.notify_one();
    return m;
}

void SubscriberSink::close() {
    std::function<void()> notify;
    {
        std::lock_guard lock(mu_);
        if (closed_) return;
        closed_ = true;
        cv_space_.notify_all();
        cv_items_.notify_all();
        notify = notify_;
    }
    if (notify) notify();
}

bool SubscriberSink::closed() const {
    std::lock_guard lock(mu_);
    return closed_;
}

std::size_t SubscriberSink::size() const {
    std::lock_guard lock(mu_);
    return q_.size();
}

void SubscriberSink::set_notify(std::function<void()> fn) {
    std::lock_guard lock(mu_);
    notify_ = std::move(fn);
}

namespace {
SimTime wall_ns() {
    return std::chrono::duration_cast<std::chrono::nanoseconds>(
               std::chrono::steady_clock::now().time_since_epoch())
        .count();
}
}  // namespace

Broker::Broker(Config cfg, std::function<SimTime()> clock)
    : cfg_(cfg), clock_(clock ? std::move(clock) : wall_ns) {}

Broker::Create Broker::create_topic(const TopicName& name) {
    std::lock_guard lock(mu_);
    auto [it, inserted] = topics_.try_emplace(name.str());
    return inserted ? Create::created : Create::already_exists;
}

bool Broker::topic_exists(const TopicName& name) const {
    std::lock_guard lock(mu_);
    return topics_.count(name.str()) != 0;
}

bool Broker::delete_topic(const TopicName& name) {
    std::vector<SubscriberPtr> to_close;
    {
        std::lock_guard lock(mu_);
        auto it = topics_.find(name.str());
        if (it == topics_.end()) return false;
        to_close = std::move(it->second.subscribers);
        for (const auto& sub : to_close) subscriber_topics_.erase(sub->id());
        topics_.erase(it);
    }
    for (const auto& sub : to_close) sub->sink().close();
    return true;
}

Result<std::size_t, PublishError> Broker::publish(const TopicName& name,
                                                  std::span<const std::uint8_t> payload) {
    if (payload.size() > cfg_.max_message_size) return PublishError::payload_too_large;

    Message msg;
    std::vector<SubscriberPtr> sinks;
    {
        std::lock_guard lock(mu_);
        auto it = topics_.find(name.str());
        if (it == topics_.end()) return PublishError::not_found;
        TopicRecord& rec = it->second;
        msg.seq = rec.next_seq++;
        msg.payload.assign(payload.begin(), payload.end());
        msg.published_at = clock_();
        rec.retained.push_back(msg);
        if (rec.retained.size() > cfg_.retained_capacity) rec.retained.pop_front();
        sinks = rec.subscribers;
    }
    // Fan-out happens outside the registry lock so a full sink blocks only
    // this publish, never unrelated broker operations.
    for (const auto& sub : sinks) sub->sink().push(msg);
    return sinks.size();
}

Result<SubscriberPtr, SubscribeError> Broker::subscribe(const TopicName& name) {
    std::lock_guard lock(mu_);
    auto it = topics_.find(name.str());
    if (it == topics_.end()) return SubscribeError::not_found;
    auto sub = std::make_shared<Subscriber>(next_subscriber_id_++, name, cfg_.sink_capacity);
    it->second.subscribers.push_back(sub);
    subscriber_topics_.emplace(sub->id(), name.str());
    return sub;
}

bool Broker::unsubscribe(SubscriberId id) {
    SubscriberPtr removed;
    {
        std::lock_guard lock(mu_);
        auto idx = subscriber_topics_.find(id);
        if (idx == subscriber_topics_.end()) return false;
        auto topic = topics_.find(idx->second);
        subscriber_topics_.erase(idx);
        if (topic != topics_.end()) {
            auto& subs = topic->second.subscribers;
            auto pos = std::find_if(subs.begin(), subs.end(),
                                    [&](const SubscriberPtr& s) { return s->id() == id; });
            if (pos != subs.end()) {
                removed = *pos;
                subs.erase(pos);
            }
        }
    }
    if (removed) removed->sink().close();
    return true;
}

std::vector<Message> Broker::retained(const TopicName& name) const {
    std::lock_guard lock(mu_);
    auto it = topics_.find(name.str());
    if (it == topics_.end()) return {};
    return {it->second.retained.begin(), it->second.retained.end()};
}

std::size_t Broker::subscriber_count(const TopicName& name) const {
    std::lock_guard lock(mu_);
    auto it = topics_.find(name.str());
    return it == topics_.end() ? 0 : it->second.subscribers.size();
}

std::size_t Broker::topic_count() const {
    std::lock_guard lock(mu_);
    return topics_.size();
}

}  // namespace h3ps
