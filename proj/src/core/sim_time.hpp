#pragma once

#include <cstdint>

namespace h3ps {

// Nanosecond tick shared by the virtual and wall clocks.
using SimTime = std::int64_t;

inline constexpr SimTime kMicrosecond = 1'000;
inline constexpr SimTime kMillisecond = 1'000'000;
inline constexpr SimTime kSecond = 1'000'000'000;

constexpr double to_seconds(SimTime t) {
    return static_cast<double>(t) / static_cast<double>(kSecond);
}

constexpr SimTime from_seconds(double s) {
    return static_cast<SimTime>(s * static_cast<double>(kSecond) + (s >= 0 ? 0.5 : -0.5));
}

constexpr SimTime from_millis(double ms) { return from_seconds(ms / 1e3); }

}  // namespace h3ps
