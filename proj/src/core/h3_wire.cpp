#include "core/h3_wire.hpp"

#include <array>

#include "core/quic_varint.hpp"

namespace h3ps::h3 {

std::vector<std::uint8_t> encode_frame(std::uint64_t type, std::span<const std::uint8_t> payload) {
    std::vector<std::uint8_t> out;
    qvarint_append(out, type);
    qvarint_append(out, payload.size());
    out.insert(out.end(), payload.begin(), payload.end());
    return out;
}

void FrameReader::feed(std::span<const std::uint8_t> bytes) {
    buf_.insert(buf_.end(), bytes.begin(), bytes.end());
}

std::optional<Frame> FrameReader::next() {
    std::span<const std::uint8_t> view(buf_);
    auto type = qvarint_read(view);
    if (!type) return std::nullopt;
    auto len = qvarint_read(view.subspan(type->consumed));
    if (!len) return std::nullopt;
    const std::size_t header = type->consumed + len->consumed;
    if (view.size() < header + len->value) return std::nullopt;

    Frame f;
    f.type = type->value;
    f.payload.assign(buf_.begin() + header, buf_.begin() + header + len->value);
    buf_.erase(buf_.begin(), buf_.begin() + header + len->value);
    return f;
}

namespace {

struct StaticEntry {
    std::uint64_t index;
    const char* name;
    const char* value;
};

// The slice of the QPACK static table this endpoint actually references.
constexpr std::array<StaticEntry, 22> kStaticTable{{
    {0, ":authority", ""},
    {1, ":path", "/"},
    {4, "content-length", "0"},
    {15, ":method", "CONNECT"},
    {16, ":method", "DELETE"},
    {17, ":method", "GET"},
    {18, ":method", "HEAD"},
    {19, ":method", "OPTIONS"},
    {20, ":method", "POST"},
    {21, ":method", "PUT"},
    {22, ":scheme", "http"},
    {23, ":scheme", "https"},
    {24, ":status", "103"},
    {25, ":status", "200"},
    {26, ":status", "304"},
    {27, ":status", "404"},
    {28, ":status", "503"},
    {47, "content-type", "application/octet-stream"},
    {63, ":status", "100"},
    {64, ":status", "204"},
    {67, ":status", "400"},
    {71, ":status", "500"},
}};

const StaticEntry* find_exact(const std::string& name, const std::string& value) {
    for (const auto& e : kStaticTable) {
        if (name == e.name && value == e.value) return &e;
    }
    return nullptr;
}

const StaticEntry* find_name(const std::string& name) {
    for (const auto& e : kStaticTable) {
        if (name == e.name) return &e;
    }
    return nullptr;
}

const StaticEntry* find_index(std::uint64_t index) {
    for (const auto& e : kStaticTable) {
        if (e.index == index) return &e;
    }
    return nullptr;
}

void prefix_int(std::vector<std::uint8_t>& out, std::uint8_t high_bits, int prefix_bits,
                std::uint64_t v) {
    const std::uint64_t max_prefix = (1ull << prefix_bits) - 1;
    if (v < max_prefix) {
        out.push_back(static_cast<std::uint8_t>(high_bits | v));
        return;
    }
    out.push_back(static_cast<std::uint8_t>(high_bits | max_prefix));
    v -= max_prefix;
    while (v >= 128) {
        out.push_back(static_cast<std::uint8_t>(0x80 | (v % 128)));
        v /= 128;
    }
    out.push_back(static_cast<std::uint8_t>(v));
}

struct IntDecode {
    std::uint64_t value;
    std::size_t consumed;
};

std::optional<IntDecode> read_prefix_int(std::span<const std::uint8_t> in, int prefix_bits) {
    if (in.empty()) return std::nullopt;
    const std::uint64_t max_prefix = (1ull << prefix_bits) - 1;
    std::uint64_t v = in[0] & max_prefix;
    if (v < max_prefix) return IntDecode{v, 1};
    std::uint64_t m = 1;
    for (std::size_t i = 1; i < in.size() && i <= 10; ++i) {
        v += static_cast<std::uint64_t>(in[i] & 0x7f) * m;
        if ((in[i] & 0x80) == 0) return IntDecode{v, i + 1};
        m *= 128;
    }
    return std::nullopt;
}

void put_literal_string(std::vector<std::uint8_t>& out, const std::string& s, int prefix_bits,
                        std::uint8_t high_bits) {
    // H (huffman) bit stays 0: literals only.
    prefix_int(out, high_bits, prefix_bits, s.size());
    out.insert(out.end(), s.begin(), s.end());
}

}  // namespace

std::vector<std::uint8_t> encode_field_section(const HeaderList& headers) {
    std::vector<std::uint8_t> out;
    out.push_back(0x00);  // required insert count: dynamic table unused
    out.push_back(0x00);  // base
    for (const auto& [name, value] : headers) {
        if (const StaticEntry* e = find_exact(name, value)) {
            prefix_int(out, 0xc0, 6, e->index);  // indexed, static
        } else if (const StaticEntry* e2 = find_name(name)) {
            prefix_int(out, 0x50, 4, e2->index);  // literal with static name ref
            put_literal_string(out, value, 7, 0x00);
        } else {
            put_literal_string(out, name, 3, 0x20);  // literal name
            put_literal_string(out, value, 7, 0x00);
        }
    }
    return out;
}

Result<HeaderList, WireError> decode_field_section(std::span<const std::uint8_t> block) {
    if (block.size() < 2 || block[0] != 0x00 || block[1] != 0x00) return WireError::malformed;
    block = block.subspan(2);

    HeaderList out;
    while (!block.empty()) {
        const std::uint8_t b = block[0];
        if (b & 0x80) {  // indexed field line
            if ((b & 0x40) == 0) return WireError::malformed;  // dynamic table unused
            auto idx = read_prefix_int(block, 6);
            if (!idx) return WireError::malformed;
            const StaticEntry* e = find_index(idx->value);
            if (!e) return WireError::malformed;
            out.emplace_back(e->name, e->value);
            block = block.subspan(idx->consumed);
        } else if ((b & 0xc0) == 0x40) {  // literal with name reference
            if ((b & 0x10) == 0) return WireError::malformed;  // must reference static table
            auto idx = read_prefix_int(block, 4);
            if (!idx) return WireError::malformed;
            const StaticEntry* e = find_index(idx->value);
            if (!e) return WireError::malformed;
            block = block.subspan(idx->consumed);
            if (block.empty() || (block[0] & 0x80)) return WireError::malformed;  // no huffman
            auto len = read_prefix_int(block, 7);
            if (!len || block.size() < len->consumed + len->value) return WireError::malformed;
            std::string value(reinterpret_cast<const char*>(block.data() + len->consumed),
                              len->value);
            block = block.subspan(len->consumed + len->value);
            out.emplace_back(e->name, std::move(value));
        } else if ((b & 0xe0) == 0x20) {  // literal name + literal value
            if (b & 0x08) return WireError::malformed;  // no huffman
            auto nlen = read_prefix_int(block, 3);
            if (!nlen || block.size() < nlen->consumed + nlen->value) return WireError::malformed;
            std::string name(reinterpret_cast<const char*>(block.data() + nlen->consumed),
                             nlen->value);
            block = block.subspan(nlen->consumed + nlen->value);
            if (block.empty() || (block[0] & 0x80)) return WireError::malformed;
            auto vlen = read_prefix_int(block, 7);
            if (!vlen || block.size() < vlen->consumed + vlen->value) return WireError::malformed;
            std::string value(reinterpret_cast<const char*>(block.data() + vlen->consumed),
                              vlen->value);
            block = block.subspan(vlen->consumed + vlen->value);
            out.emplace_back(std::move(name), std::move(value));
        } else {
            return WireError::malformed;
        }
    }
    return out;
}

std::optional<std::string> header_value(const HeaderList& headers, const std::string& name) {
    for (const auto& [n, v] : headers) {
        if (n == name) return v;
    }
    return std::nullopt;
}

std::vector<std::uint8_t> encode_event_frame(std::span<const std::uint8_t> payload) {
    std::vector<std::uint8_t> out;
    const std::uint32_t n = static_cast<std::uint32_t>(payload.size());
    out.push_back(static_cast<std::uint8_t>(n >> 24));
    out.push_back(static_cast<std::uint8_t>(n >> 16));
    out.push_back(static_cast<std::uint8_t>(n >> 8));
    out.push_back(static_cast<std::uint8_t>(n));
    out.insert(out.end(), payload.begin(), payload.end());
    return out;
}

EventFrames decode_event_frames(std::span<const std::uint8_t> bytes) {
    EventFrames out;
    while (bytes.size() >= 4) {
        const std::uint32_t n = (static_cast<std::uint32_t>(bytes[0]) << 24) |
                                (static_cast<std::uint32_t>(bytes[1]) << 16) |
                                (static_cast<std::uint32_t>(bytes[2]) << 8) |
                                static_cast<std::uint32_t>(bytes[3]);
        if (bytes.size() - 4 < n) break;
        out.payloads.emplace_back(bytes.begin() + 4, bytes.begin() + 4 + n);
        bytes = bytes.subspan(4 + n);
    }
    out.remainder.assign(bytes.begin(), bytes.end());
    return out;
}

}  // namespace h3ps::h3
