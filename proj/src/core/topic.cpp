#include "core/topic.hpp"

namespace h3ps {

namespace {
bool legal_char(char c) {
    return (c >= 'A' && c <= 'Z') || (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') ||
           c == '_' || c == '-' || c == '.';
}
}  // namespace

const char* to_string(TopicError e) {
    switch (e) {
    case TopicError::empty: return "empty";
    case TopicError::too_long: return "too_long";
    case TopicError::illegal_character: return "illegal_character";
    }
    return "unknown";
}

Result<TopicName, TopicError> TopicName::parse(std::string_view raw) {
    if (raw.empty()) return TopicError::empty;
    if (raw.size() > kMaxLength) return TopicError::too_long;
    for (char c : raw) {
        if (!legal_char(c)) return TopicError::illegal_character;
    }
    return TopicName(std::string(raw));
}

}  // namespace h3ps
