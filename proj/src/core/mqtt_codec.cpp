#include "core/mqtt_codec.hpp"

#include <cassert>

namespace h3ps::mqtt {

std::vector<std::uint8_t> encode_varint(std::uint32_t n) {
    assert(n <= kVarIntMax);
    std::vector<std::uint8_t> out;
    do {
        std::uint8_t byte = n % 128;
        n /= 128;
        if (n > 0) byte |= 0x80;
        out.push_back(byte);
    } while (n > 0);
    return out;
}

Result<VarIntDecode, CodecError> decode_varint(std::span<const std::uint8_t> in) {
    std::uint32_t value = 0;
    std::uint32_t multiplier = 1;
    for (std::size_t i = 0; i < 4; ++i) {
        if (i >= in.size()) return CodecError::incomplete;
        const std::uint8_t byte = in[i];
        value += static_cast<std::uint32_t>(byte & 0x7f) * multiplier;
        if ((byte & 0x80) == 0) {
            if (i > 0 && (byte & 0x7f) == 0) return CodecError::malformed;  // over-long
            return VarIntDecode{value, i + 1};
        }
        multiplier *= 128;
    }
    return CodecError::malformed;  // continuation past 4 bytes
}

namespace {

constexpr std::uint8_t kPropAuthenticationMethod = 0x15;
constexpr std::uint8_t kConnectFlagCleanStart = 0x02;
constexpr std::uint8_t kConnectFlagPassword = 0x40;
constexpr std::uint8_t kConnectFlagUsername = 0x80;

void put_u16(std::vector<std::uint8_t>& out, std::uint16_t v) {
    out.push_back(static_cast<std::uint8_t>(v >> 8));
    out.push_back(static_cast<std::uint8_t>(v));
}

void put_string(std::vector<std::uint8_t>& out, const std::string& s) {
    assert(s.size() <= 0xffff);
    put_u16(out, static_cast<std::uint16_t>(s.size()));
    out.insert(out.end(), s.begin(), s.end());
}

void put_varint(std::vector<std::uint8_t>& out, std::uint32_t n) {
    auto bytes = encode_varint(n);
    out.insert(out.end(), bytes.begin(), bytes.end());
}

std::vector<std::uint8_t> connect_body(const Connect& c) {
    std::vector<std::uint8_t> body;
    put_string(body, "MQTT");
    body.push_back(0x05);
    std::uint8_t flags = kConnectFlagCleanStart;
    if (c.username) flags |= kConnectFlagUsername;
    if (c.password) flags |= kConnectFlagPassword;
    body.push_back(flags);
    put_u16(body, 0);  // keep alive
    std::vector<std::uint8_t> props;
    if (c.auth_method) {
        props.push_back(kPropAuthenticationMethod);
        put_string(props, *c.auth_method);
    }
    put_varint(body, static_cast<std::uint32_t>(props.size()));
    body.insert(body.end(), props.begin(), props.end());
    put_string(body, c.client_id);
    if (c.username) put_string(body, *c.username);
    if (c.password) put_string(body, *c.password);
    return body;
}

// Cursor over a packet body with bounds-checked reads.
class Reader {
public:
    explicit Reader(std::span<const std::uint8_t> in) : in_(in) {}

    bool done() const { return pos_ == in_.size(); }
    std::size_t remaining() const { return in_.size() - pos_; }

    std::optional<std::uint8_t> u8() {
        if (remaining() < 1) return std::nullopt;
        return in_[pos_++];
    }
    std::optional<std::uint16_t> u16() {
        if (remaining() < 2) return std::nullopt;
        std::uint16_t v = static_cast<std::uint16_t>(in_[pos_] << 8) | in_[pos_ + 1];
        pos_ += 2;
        return v;
    }
    std::optional<std::string> string() {
        auto len = u16();
        if (!len || remaining() < *len) return std::nullopt;
        std::string s(reinterpret_cast<const char*>(in_.data() + pos_), *len);
        pos_ += *len;
        return s;
    }
    std::optional<std::uint32_t> varint() {
        auto r = decode_varint(in_.subspan(pos_));
        if (!r.ok()) return std::nullopt;
        pos_ += r.value().consumed;
        return r.value().value;
    }
    std::vector<std::uint8_t> rest() {
        std::vector<std::uint8_t> v(in_.begin() + pos_, in_.end());
        pos_ = in_.size();
        return v;
    }
    bool take(std::span<const std::uint8_t> literal) {
        if (remaining() < literal.size()) return false;
        for (std::size_t i = 0; i < literal.size(); ++i) {
            if (in_[pos_ + i] != literal[i]) return false;
        }
        pos_ += literal.size();
        return true;
    }

private:
    std::span<const std::uint8_t> in_;
    std::size_t pos_ = 0;
};

Result<Packet, CodecError> parse_connect(Reader r) {
    const std::uint8_t proto[] = {0x00, 0x04, 'M', 'Q', 'T', 'T', 0x05};
    if (!r.take(proto)) return CodecError::malformed;
    auto flags = r.u8();
    if (!flags) return CodecError::malformed;
    if ((*flags & ~(kConnectFlagCleanStart | kConnectFlagUsername | kConnectFlagPassword)) != 0)
        return CodecError::malformed;
    if ((*flags & kConnectFlagCleanStart) == 0) return CodecError::malformed;
    auto keep_alive = r.u16();
    if (!keep_alive || *keep_alive != 0) return CodecError::malformed;

    Connect c;
    auto prop_len = r.varint();
    if (!prop_len || r.remaining() < *prop_len) return CodecError::malformed;
    std::size_t prop_end = r.remaining() - *prop_len;
    while (r.remaining() > prop_end) {
        auto id = r.u8();
        if (!id) return CodecError::malformed;
        if (*id == kPropAuthenticationMethod && !c.auth_method) {
            auto m = r.string();
            if (!m) return CodecError::malformed;
            c.auth_method = std::move(m);
        } else {
            return CodecError::malformed;  // outside the implemented subset
        }
    }
    if (r.remaining() != prop_end) return CodecError::malformed;

    auto cid = r.string();
    if (!cid) return CodecError::malformed;
    c.client_id = std::move(*cid);
    if (*flags & kConnectFlagUsername) {
        auto u = r.string();
        if (!u) return CodecError::malformed;
        c.username = std::move(u);
    }
    if (*flags & kConnectFlagPassword) {
        auto p = r.string();
        if (!p) return CodecError::malformed;
        c.password = std::move(p);
    }
    if (!r.done()) return CodecError::malformed;
    return Packet{std::move(c)};
}

Result<Packet, CodecError> parse_reason_only(Reader r, PacketType type) {
    auto reason = r.u8();
    if (!reason) return CodecError::malformed;
    auto props = r.u8();
    if (!props || *props != 0 || !r.done()) return CodecError::malformed;
    switch (type) {
    case PacketType::disconnect: return Packet{Disconnect{*reason}};
    case PacketType::auth: return Packet{Auth{*reason}};
    default: return CodecError::malformed;
    }
}

}  // namespace

PacketType packet_type(const Packet& p) {
    switch (p.index()) {
    case 0: return PacketType::connect;
    case 1: return PacketType::connack;
    case 2: return PacketType::publish;
    case 3: return PacketType::subscribe;
    case 4: return PacketType::suback;
    case 5: return PacketType::disconnect;
    default: return PacketType::auth;
    }
}

std::vector<std::uint8_t> encode_packet(const Packet& p) {
    std::vector<std::uint8_t> body;
    std::uint8_t first = 0;

    if (const auto* c = std::get_if<Connect>(&p)) {
        first = 0x10;
        body = connect_body(*c);
    } else if (const auto* ca = std::get_if<Connack>(&p)) {
        first = 0x20;
        body.push_back(0x00);  // ack flags, no session present
        body.push_back(ca->reason_code);
        body.push_back(0x00);  // empty properties
    } else if (const auto* pub = std::get_if<Publish>(&p)) {
        first = 0x30;  // QoS 0, no dup, no retain
        put_string(body, pub->topic);
        body.push_back(0x00);  // empty properties
        body.insert(body.end(), pub->payload.begin(), pub->payload.end());
    } else if (const auto* sub = std::get_if<Subscribe>(&p)) {
        first = 0x82;  // reserved flags 0b0010
        put_u16(body, sub->packet_id);
        body.push_back(0x00);  // empty properties
        put_string(body, sub->topic);
        body.push_back(0x00);  // subscription options: QoS 0
    } else if (const auto* sa = std::get_if<Suback>(&p)) {
        first = 0x90;
        put_u16(body, sa->packet_id);
        body.push_back(0x00);  // empty properties
        body.push_back(sa->reason_code);
    } else if (const auto* d = std::get_if<Disconnect>(&p)) {
        first = 0xe0;
        body.push_back(d->reason_code);
        body.push_back(0x00);
    } else if (const auto* a = std::get_if<Auth>(&p)) {
        first = 0xf0;
        body.push_back(a->reason_code);
        body.push_back(0x00);
    }

    std::vector<std::uint8_t> out;
    out.push_back(first);
    put_varint(out, static_cast<std::uint32_t>(body.size()));
    out.insert(out.end(), body.begin(), body.end());
    return out;
}

Result<PacketDecode, CodecError> decode_packet(std::span<const std::uint8_t> in) {
    if (in.empty()) return CodecError::incomplete;
    const std::uint8_t first = in[0];
    auto remlen = decode_varint(in.subspan(1));
    if (!remlen.ok()) return remlen.error();
    const std::size_t header = 1 + remlen.value().consumed;
    const std::size_t total = header + remlen.value().value;
    if (in.size() < total) return CodecError::incomplete;

    const std::uint8_t type_nibble = first >> 4;
    const std::uint8_t flags = first & 0x0f;
    Reader r(in.subspan(header, remlen.value().value));

    Result<Packet, CodecError> parsed = CodecError::malformed;
    switch (type_nibble) {
    case 1:
        if (flags != 0) return CodecError::malformed;
        parsed = parse_connect(r);
        break;
    case 2: {
        if (flags != 0) return CodecError::malformed;
        auto ack_flags = r.u8();
        auto reason = r.u8();
        auto props = r.u8();
        if (!ack_flags || *ack_flags != 0 || !reason || !props || *props != 0 || !r.done())
            return CodecError::malformed;
        parsed = Packet{Connack{*reason}};
        break;
    }
    case 3: {
        if (flags != 0) return CodecError::malformed;  // QoS 0 only
        auto topic = r.string();
        if (!topic) return CodecError::malformed;
        auto props = r.u8();
        if (!props || *props != 0) return CodecError::malformed;
        parsed = Packet{Publish{std::move(*topic), r.rest()}};
        break;
    }
    case 8: {
        if (flags != 0x02) return CodecError::malformed;
        auto id = r.u16();
        auto props = r.u8();
        if (!id || !props || *props != 0) return CodecError::malformed;
        auto topic = r.string();
        auto opts = r.u8();
        if (!topic || !opts || *opts != 0 || !r.done()) return CodecError::malformed;
        parsed = Packet{Subscribe{*id, std::move(*topic)}};
        break;
    }
    case 9: {
        if (flags != 0) return CodecError::malformed;
        auto id = r.u16();
        auto props = r.u8();
        auto reason = r.u8();
        if (!id || !props || *props != 0 || !reason || !r.done()) return CodecError::malformed;
        parsed = Packet{Suback{*id, *reason}};
        break;
    }
    case 14:
        if (flags != 0) return CodecError::malformed;
        parsed = parse_reason_only(r, PacketType::disconnect);
        break;
    case 15:
        if (flags != 0) return CodecError::malformed;
        parsed = parse_reason_only(r, PacketType::auth);
        break;
    default:
        return CodecError::malformed;
    }

    if (!parsed.ok()) return parsed.error();
    return PacketDecode{std::move(parsed.value()), total};
}

}  // namespace h3ps::mqtt
