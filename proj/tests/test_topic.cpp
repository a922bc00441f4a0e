#include <doctest.h>

#include <string>

#include "core/topic.hpp"

using namespace h3ps;

TEST_CASE("accepts names within the charset") {
    for (const char* name : {"sensors.temp", "a", "A-Z_09.x", "room-42"}) {
        auto r = TopicName::parse(name);
        REQUIRE(r.ok());
        CHECK(r.value().str() == name);
    }
}

TEST_CASE("rejects the empty name") {
    auto r = TopicName::parse("");
    REQUIRE(!r.ok());
    CHECK(r.error() == TopicError::empty);
}

TEST_CASE("rejects names over 255 bytes") {
    CHECK(TopicName::parse(std::string(255, 'a')).ok());
    auto r = TopicName::parse(std::string(256, 'a'));
    REQUIRE(!r.ok());
    CHECK(r.error() == TopicError::too_long);
}

TEST_CASE("rejects separators and whitespace") {
    for (const char* name : {"a/b c", "a/b", "a b", "topic!", "t#", "t+x", "caf\xc3\xa9"}) {
        auto r = TopicName::parse(name);
        REQUIRE(!r.ok());
        CHECK(r.error() == TopicError::illegal_character);
    }
}
