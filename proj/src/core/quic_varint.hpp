#pragma once

#include <cassert>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace h3ps {

// Variable-length integers with a 2-bit length prefix (1/2/4/8 bytes,
// big-endian, values up to 2^62-1).

inline constexpr std::uint64_t kQvarintMax = (1ull << 62) - 1;

inline std::size_t qvarint_size(std::uint64_t v) {
    if (v < (1ull << 6)) return 1;
    if (v < (1ull << 14)) return 2;
    if (v < (1ull << 30)) return 4;
    return 8;
}

inline void qvarint_append(std::vector<std::uint8_t>& out, std::uint64_t v) {
    assert(v <= kQvarintMax);
    const std::size_t n = qvarint_size(v);
    const std::uint8_t prefix = static_cast<std::uint8_t>(n == 1 ? 0x00
                                                          : n == 2 ? 0x40
                                                          : n == 4 ? 0x80
                                                                   : 0xc0);
    for (std::size_t i = 0; i < n; ++i) {
        std::uint8_t byte = static_cast<std::uint8_t>(v >> (8 * (n - 1 - i)));
        if (i == 0) byte = static_cast<std::uint8_t>((byte & 0x3f) | prefix);
        out.push_back(byte);
    }
}

struct QvarintResult {
    std::uint64_t value = 0;
    std::size_t consumed = 0;
};

/// nullopt means the buffer ends mid-integer; feed more bytes and retry.
inline std::optional<QvarintResult> qvarint_read(std::span<const std::uint8_t> in) {
    if (in.empty()) return std::nullopt;
    const std::size_t n = std::size_t{1} << (in[0] >> 6);
    if (in.size() < n) return std::nullopt;
    std::uint64_t v = in[0] & 0x3f;
    for (std::size_t i = 1; i < n; ++i) v = (v << 8) | in[i];
    return QvarintResult{v, n};
}

}  // namespace h3ps
