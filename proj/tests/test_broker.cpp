#include <doctest.h>

#include <deque>
#include <map>
#include <random>
#include <thread>
#include <vector>

#include "core/broker.hpp"

using namespace h3ps;

namespace {

TopicName topic(const char* name) {
    auto r = TopicName::parse(name);
    REQUIRE(r.ok());
    return r.value();
}

std::vector<std::uint8_t> bytes(std::string_view s) {
    return {s.begin(), s.end()};
}

// Sequential reference model: plain maps and vectors, no channels, no locks.
// Deliveries are appended eagerly at publish time.
struct RefModel {
    struct Topic {
        std::uint64_t next_seq = 1;
        std::deque<std::pair<std::uint64_t, std::vector<std::uint8_t>>> retained;
        std::vector<std::uint64_t> subs;
    };
    struct Sub {
        std::string topic;
        std::vector<std::pair<std::uint64_t, std::vector<std::uint8_t>>> got;
        bool closed = false;   // topic deleted underneath it
        bool removed = false;  // explicitly unsubscribed
    };

    std::size_t retained_capacity;
    std::map<std::string, Topic> topics;
    std::map<std::uint64_t, Sub> subs;
    std::uint64_t next_id = 1;

    explicit RefModel(std::size_t cap) : retained_capacity(cap) {}

    bool create(const std::string& t) { return topics.try_emplace(t).second; }
    bool exists(const std::string& t) const { return topics.count(t) != 0; }

    bool erase(const std::string& t) {
        auto it = topics.find(t);
        if (it == topics.end()) return false;
        for (auto id : it->second.subs) subs.at(id).closed = true;
        topics.erase(it);
        return true;
    }

    // delivered count, or -1 for missing topic
    int publish(const std::string& t, const std::vector<std::uint8_t>& payload) {
        auto it = topics.find(t);
        if (it == topics.end()) return -1;
        auto& rec = it->second;
        const std::uint64_t seq = rec.next_seq++;
        rec.retained.emplace_back(seq, payload);
        if (rec.retained.size() > retained_capacity) rec.retained.pop_front();
        for (auto id : rec.subs) subs.at(id).got.emplace_back(seq, payload);
        return static_cast<int>(rec.subs.size());
    }

    std::uint64_t subscribe(const std::string& t) {
        auto it = topics.find(t);
        if (it == topics.end()) return 0;
        const std::uint64_t id = next_id++;
        it->second.subs.push_back(id);
        subs[id] = Sub{t, {}, false};
        return id;
    }

    bool unsubscribe(std::uint64_t id) {
        auto it = subs.find(id);
        if (it == subs.end() || it->second.closed || it->second.removed) return false;
        auto topic_it = topics.find(it->second.topic);
        if (topic_it != topics.end()) {
            std::erase(topic_it->second.subs, id);
        }
        it->second.removed = true;
        return true;
    }
};

}  // namespace

TEST_CASE("create is idempotent and reports the repeat") {
    Broker b;
    CHECK(b.create_topic(topic("t")) == Broker::Create::created);
    CHECK(b.create_topic(topic("t")) == Broker::Create::already_exists);
    CHECK(b.topic_count() == 1);
}

TEST_CASE("exists reflects create and delete") {
    Broker b;
    CHECK(!b.topic_exists(topic("t")));
    b.create_topic(topic("t"));
    CHECK(b.topic_exists(topic("t")));
    CHECK(b.delete_topic(topic("t")));
    CHECK(!b.topic_exists(topic("t")));
}

TEST_CASE("create delete create resets the sequence counter") {
    Broker b;
    b.create_topic(topic("t"));
    b.publish(topic("t"), bytes("a"));
    b.publish(topic("t"), bytes("b"));
    CHECK(b.delete_topic(topic("t")));
    CHECK(b.create_topic(topic("t")) == Broker::Create::created);
    auto sub = b.subscribe(topic("t")).value();
    b.publish(topic("t"), bytes("c"));
    auto m = sub->sink().try_pop();
    REQUIRE(m.has_value());
    CHECK(m->seq == 1);
}

TEST_CASE("delete closes every subscriber sink and discards retained state") {
    Broker b;
    b.create_topic(topic("t"));
    auto s1 = b.subscribe(topic("t")).value();
    auto s2 = b.subscribe(topic("t")).value();
    auto s3 = b.subscribe(topic("t")).value();
    b.publish(topic("t"), bytes("x"));
    CHECK(b.delete_topic(topic("t")));
    for (auto& s : {s1, s2, s3}) CHECK(s->sink().closed());
    CHECK(b.retained(topic("t")).empty());
    CHECK(!b.delete_topic(topic("t")));  // second delete: nothing there
}

TEST_CASE("publish without subscribers retains the message") {
    Broker b;
    b.create_topic(topic("t"));
    auto r = b.publish(topic("t"), bytes("x"));
    REQUIRE(r.ok());
    CHECK(r.value() == 0);
    auto kept = b.retained(topic("t"));
    REQUIRE(kept.size() == 1);
    CHECK(kept[0].payload == bytes("x"));
    CHECK(kept[0].seq == 1);
}

TEST_CASE("publish reaches every sink with the same seq") {
    Broker b;
    b.create_topic(topic("t"));
    auto s1 = b.subscribe(topic("t")).value();
    auto s2 = b.subscribe(topic("t")).value();
    auto r = b.publish(topic("t"), bytes("hello"));
    REQUIRE(r.ok());
    CHECK(r.value() == 2);
    auto m1 = s1->sink().try_pop();
    auto m2 = s2->sink().try_pop();
    REQUIRE(m1.has_value());
    REQUIRE(m2.has_value());
    CHECK(m1->seq == m2->seq);
    CHECK(m1->payload == bytes("hello"));
}

TEST_CASE("publish to an absent topic does not create it") {
    Broker b;
    auto r = b.publish(topic("nope"), bytes("x"));
    REQUIRE(!r.ok());
    CHECK(r.error() == PublishError::not_found);
    CHECK(!b.topic_exists(topic("nope")));
}

TEST_CASE("publish enforces the payload ceiling") {
    Broker::Config cfg;
    cfg.max_message_size = 8;
    Broker b(cfg);
    b.create_topic(topic("t"));
    CHECK(b.publish(topic("t"), std::vector<std::uint8_t>(8, 0)).ok());
    auto r = b.publish(topic("t"), std::vector<std::uint8_t>(9, 0));
    REQUIRE(!r.ok());
    CHECK(r.error() == PublishError::payload_too_large);
}

TEST_CASE("subscribers see only messages published after registration") {
    Broker b;
    b.create_topic(topic("t"));
    b.publish(topic("t"), bytes("before"));
    auto sub = b.subscribe(topic("t")).value();
    CHECK(!sub->sink().try_pop().has_value());
    b.publish(topic("t"), bytes("after"));
    auto m = sub->sink().try_pop();
    REQUIRE(m.has_value());
    CHECK(m->payload == bytes("after"));
}

TEST_CASE("subscribe to an absent topic fails") {
    Broker b;
    auto r = b.subscribe(topic("missing"));
    REQUIRE(!r.ok());
    CHECK(r.error() == SubscribeError::not_found);
}

TEST_CASE("unsubscribe detaches the sink") {
    Broker b;
    b.create_topic(topic("t"));
    auto sub = b.subscribe(topic("t")).value();
    CHECK(b.unsubscribe(sub->id()));
    CHECK(sub->sink().closed());
    auto r = b.publish(topic("t"), bytes("x"));
    CHECK(r.value() == 0);
    CHECK(!b.unsubscribe(sub->id()));  // second time: unknown handle
}

TEST_CASE("unsubscribe after delete_topic reports unknown handle") {
    Broker b;
    b.create_topic(topic("t"));
    auto sub = b.subscribe(topic("t")).value();
    b.delete_topic(topic("t"));
    CHECK(!b.unsubscribe(sub->id()));
}

TEST_CASE("retained store evicts oldest past capacity") {
    Broker::Config cfg;
    cfg.retained_capacity = 3;
    Broker b(cfg);
    b.create_topic(topic("t"));
    for (int i = 0; i < 5; ++i) b.publish(topic("t"), std::vector<std::uint8_t>{static_cast<std::uint8_t>(i)});
    auto kept = b.retained(topic("t"));
    REQUIRE(kept.size() == 3);
    CHECK(kept.front().seq == 3);
    CHECK(kept.back().seq == 5);
}

TEST_CASE("a full sink blocks the publisher until the consumer drains") {
    Broker::Config cfg;
    cfg.sink_capacity = 2;
    Broker b(cfg);
    b.create_topic(topic("t"));
    auto sub = b.subscribe(topic("t")).value();

    std::thread producer([&] {
        for (int i = 0; i < 6; ++i) b.publish(topic("t"), std::vector<std::uint8_t>{static_cast<std::uint8_t>(i)});
    });
    std::vector<std::uint8_t> seen;
    for (int i = 0; i < 6; ++i) {
        auto m = sub->sink().pop_wait();
        REQUIRE(m.has_value());
        seen.push_back(m->payload.at(0));
        std::this_thread::sleep_for(std::chrono::milliseconds(1));
    }
    producer.join();
    CHECK(seen == std::vector<std::uint8_t>{0, 1, 2, 3, 4, 5});
}

TEST_CASE("randomized op sequences match the sequential reference model") {
    for (std::uint64_t seed : {11ull, 23ull, 47ull, 91ull, 1234ull}) {
        std::mt19937_64 rng(seed);
        Broker::Config cfg;
        cfg.retained_capacity = 5;
        Broker b(cfg);
        RefModel ref(cfg.retained_capacity);

        const std::vector<std::string> names{"alpha", "beta", "gamma"};
        std::map<std::uint64_t, SubscriberPtr> live;           // ref id -> real handle
        std::map<std::uint64_t, std::vector<Message>> drained; // ref id -> deliveries

        auto drain_all = [&] {
            for (auto& [id, sub] : live) {
                while (auto m = sub->sink().try_pop()) drained[id].push_back(std::move(*m));
            }
        };

        for (int step = 0; step < 200; ++step) {
            const auto& name = names[rng() % names.size()];
            const TopicName t = topic(name.c_str());
            switch (rng() % 6) {
            case 0:
                CHECK((b.create_topic(t) == Broker::Create::created) == ref.create(name));
                break;
            case 1:
                CHECK(b.topic_exists(t) == ref.exists(name));
                break;
            case 2:
                CHECK(b.delete_topic(t) == ref.erase(name));
                break;
            case 3: {
                std::vector<std::uint8_t> payload{static_cast<std::uint8_t>(rng()),
                                                  static_cast<std::uint8_t>(step)};
                auto r = b.publish(t, payload);
                const int expect = ref.publish(name, payload);
                if (expect < 0) {
                    CHECK(!r.ok());
                } else {
                    REQUIRE(r.ok());
                    CHECK(r.value() == static_cast<std::size_t>(expect));
                }
                break;
            }
            case 4: {
                auto r = b.subscribe(t);
                const std::uint64_t id = ref.subscribe(name);
                CHECK(r.ok() == (id != 0));
                if (r.ok()) live[id] = r.value();
                break;
            }
            case 5: {
                if (live.empty()) break;
                auto it = live.begin();
                std::advance(it, rng() % live.size());
                const bool real = b.unsubscribe(it->second->id());
                const bool expected = ref.unsubscribe(it->first);
                CHECK(real == expected);
                drain_all();
                live.erase(it->first);
                break;
            }
            }
            drain_all();
        }
        drain_all();

        // Every reference subscriber's delivery log must match, in order,
        // with strictly increasing seq and identical payloads.
        for (auto& [id, got] : drained) {
            auto ref_it = ref.subs.find(id);
            std::vector<std::pair<std::uint64_t, std::vector<std::uint8_t>>> expect;
            if (ref_it != ref.subs.end()) expect = ref_it->second.got;
            REQUIRE(got.size() == expect.size());
            std::uint64_t last_seq = 0;
            for (std::size_t i = 0; i < got.size(); ++i) {
                CHECK(got[i].seq == expect[i].first);
                CHECK(got[i].payload == expect[i].second);
                CHECK(got[i].seq > last_seq);
                last_seq = got[i].seq;
            }
        }

        // Topic registry and retained stores agree too.
        for (const auto& name : names) {
            const TopicName t = topic(name.c_str());
            CHECK(b.topic_exists(t) == ref.exists(name));
            if (!ref.exists(name)) continue;
            auto kept = b.retained(t);
            const auto& ref_kept = ref.topics.at(name).retained;
            REQUIRE(kept.size() == ref_kept.size());
            for (std::size_t i = 0; i < kept.size(); ++i) {
                CHECK(kept[i].seq == ref_kept[i].first);
                CHECK(kept[i].payload == ref_kept[i].second);
            }
        }
    }
}
