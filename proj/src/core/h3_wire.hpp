#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "core/result.hpp"

namespace h3ps::h3 {

// HTTP/3-style request-stream encoding: frames with varint type and length,
// header blocks compressed against the QPACK static table only (indexed
// entries and string literals; no dynamic table).

enum class WireError { malformed };

inline constexpr std::uint64_t kFrameData = 0x00;
inline constexpr std::uint64_t kFrameHeaders = 0x01;

struct Frame {
    std::uint64_t type = 0;
    std::vector<std::uint8_t> payload;
};

std::vector<std::uint8_t> encode_frame(std::uint64_t type, std::span<const std::uint8_t> payload);

/// Incremental frame parser for one stream direction.
class FrameReader {
public:
    void feed(std::span<const std::uint8_t> bytes);

    /// Returns the next complete frame, or nullopt until more bytes arrive.
    std::optional<Frame> next();

    std::size_t buffered() const { return buf_.size(); }

private:
    std::vector<std::uint8_t> buf_;
};

// ---------------------------------------------------------------------------
// Header block codec (QPACK static table + literals)
// ---------------------------------------------------------------------------

using HeaderList = std::vector<std::pair<std::string, std::string>>;

std::vector<std::uint8_t> encode_field_section(const HeaderList& headers);
Result<HeaderList, WireError> decode_field_section(std::span<const std::uint8_t> block);

std::optional<std::string> header_value(const HeaderList& headers, const std::string& name);

// ---------------------------------------------------------------------------
// Subscription event framing: 4-byte big-endian length prefix, frames
// concatenated with no padding on the response body.
// ---------------------------------------------------------------------------

std::vector<std::uint8_t> encode_event_frame(std::span<const std::uint8_t> payload);

struct EventFrames {
    std::vector<std::vector<std::uint8_t>> payloads;
    std::vector<std::uint8_t> remainder;  // trailing partial frame, if any
};

/// Consumes every complete frame; truncation is not an error, the unconsumed
/// suffix comes back for continuation.
EventFrames decode_event_frames(std::span<const std::uint8_t> bytes);

}  // namespace h3ps::h3
