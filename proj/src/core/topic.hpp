#pragma once

#include <string>
#include <string_view>

#include "core/result.hpp"

namespace h3ps {

enum class TopicError {
    empty,
    too_long,
    illegal_character,
};

const char* to_string(TopicError e);

/// Validated pub-sub channel identifier: 1-255 bytes drawn from
/// [A-Za-z0-9_.-]. No separators, no whitespace.
class TopicName {
public:
    static constexpr std::size_t kMaxLength = 255;

    static Result<TopicName, TopicError> parse(std::string_view raw);

    const std::string& str() const { return name_; }

    friend bool operator==(const TopicName&, const TopicName&) = default;
    friend auto operator<=>(const TopicName&, const TopicName&) = default;

private:
    explicit TopicName(std::string name) : name_(std::move(name)) {}
    std::string name_;
};

}  // namespace h3ps
