#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "core/result.hpp"

namespace h3ps::mqtt {

// MQTT 5 control-packet codec restricted to the exchanged subset: CONNECT,
// CONNACK, PUBLISH (QoS 0), SUBSCRIBE, SUBACK, DISCONNECT, AUTH. The decoder
// is strict: it accepts exactly the canonical form the encoder emits, so a
// successful decode always re-encodes to the same bytes.

inline constexpr std::uint32_t kVarIntMax = 268'435'455;

enum class CodecError {
    incomplete,  // need more bytes
    malformed,   // structurally invalid; never silently mis-parsed
};

// ---------------------------------------------------------------------------
// Variable Byte Integer: 7 bits per byte, continuation bit 0x80, least
// significant group first, minimal length only.
// ---------------------------------------------------------------------------

std::vector<std::uint8_t> encode_varint(std::uint32_t n);

struct VarIntDecode {
    std::uint32_t value = 0;
    std::size_t consumed = 0;
};

Result<VarIntDecode, CodecError> decode_varint(std::span<const std::uint8_t> in);

// ---------------------------------------------------------------------------
// Packets
// ---------------------------------------------------------------------------

enum class PacketType : std::uint8_t {
    connect = 1,
    connack = 2,
    publish = 3,
    subscribe = 8,
    suback = 9,
    disconnect = 14,
    auth = 15,
};

// Reason codes used by the broker/client state machines.
inline constexpr std::uint8_t kReasonSuccess = 0x00;
inline constexpr std::uint8_t kReasonUnspecifiedError = 0x80;
inline constexpr std::uint8_t kReasonProtocolError = 0x82;
inline constexpr std::uint8_t kReasonBadCredentials = 0x86;

struct Connect {
    std::string client_id;
    std::optional<std::string> auth_method;
    std::optional<std::string> username;
    std::optional<std::string> password;
    bool operator==(const Connect&) const = default;
};
struct Connack {
    std::uint8_t reason_code = 0;
    bool operator==(const Connack&) const = default;
};
struct Publish {
    std::string topic;
    std::vector<std::uint8_t> payload;
    bool operator==(const Publish&) const = default;
};
struct Subscribe {
    std::uint16_t packet_id = 0;
    std::string topic;
    bool operator==(const Subscribe&) const = default;
};
struct Suback {
    std::uint16_t packet_id = 0;
    std::uint8_t reason_code = 0;
    bool operator==(const Suback&) const = default;
};
struct Disconnect {
    std::uint8_t reason_code = 0;
    bool operator==(const Disconnect&) const = default;
};
struct Auth {
    std::uint8_t reason_code = 0;
    bool operator==(const Auth&) const = default;
};

using Packet = std::variant<Connect, Connack, Publish, Subscribe, Suback, Disconnect, Auth>;

PacketType packet_type(const Packet& p);

std::vector<std::uint8_t> encode_packet(const Packet& p);

struct PacketDecode {
    Packet packet;
    std::size_t consumed = 0;
};

/// Decodes one packet from the front of `in`. Extra trailing bytes are fine;
/// `consumed` reports where the next packet starts.
Result<PacketDecode, CodecError> decode_packet(std::span<const std::uint8_t> in);

}  // namespace h3ps::mqtt
