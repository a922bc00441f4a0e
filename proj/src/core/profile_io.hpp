#pragma once

#include <optional>
#include <string>

#include "core/netsim.hpp"
#include "core/result.hpp"

namespace h3ps::net {

struct ProfileFile {
    NetworkProfile profile;
    std::optional<std::string> mode;  // "virtual" | "realtime" hint, optional
};

/// Parses a JSON profile: keys `downlink_kbps`, `uplink_kbps`, `rtt_ms`,
/// `loss`, `seed`, `mode`. Missing keys keep their defaults. The error is a
/// human-readable reason.
Result<ProfileFile, std::string> profile_from_json(const std::string& text);
Result<ProfileFile, std::string> profile_from_file(const std::string& path);

std::string profile_to_json(const NetworkProfile& p);

}  // namespace h3ps::net
