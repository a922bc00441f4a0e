#include "core/profile_io.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

namespace h3ps::net {

using nlohmann::json;

Result<ProfileFile, std::string> profile_from_json(const std::string& text) {
    json j = json::parse(text, nullptr, /*allow_exceptions=*/false);
    if (j.is_discarded()) return std::string("profile: invalid JSON");
    if (!j.is_object()) return std::string("profile: expected a JSON object");

    ProfileFile out;
    try {
        if (j.contains("downlink_kbps")) {
            out.profile.downlink_bps = j.at("downlink_kbps").get<double>() * 1000.0;
        }
        if (j.contains("uplink_kbps")) {
            out.profile.uplink_bps = j.at("uplink_kbps").get<double>() * 1000.0;
        }
        if (j.contains("rtt_ms")) {
            out.profile.rtt = from_millis(j.at("rtt_ms").get<double>());
        }
        if (j.contains("loss")) out.profile.loss_probability = j.at("loss").get<double>();
        if (j.contains("seed")) out.profile.seed = j.at("seed").get<std::uint64_t>();
        if (j.contains("mode")) out.mode = j.at("mode").get<std::string>();
    } catch (const json::exception& e) {
        return std::string("profile: ") + e.what();
    }

    if (!out.profile.validate().ok()) return std::string("profile: values out of range");
    if (out.mode && *out.mode != "virtual" && *out.mode != "realtime") {
        return std::string("profile: mode must be \"virtual\" or \"realtime\"");
    }
    return out;
}

Result<ProfileFile, std::string> profile_from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) return std::string("profile: cannot open ") + path;
    std::ostringstream buf;
    buf << in.rdbuf();
    return profile_from_json(buf.str());
}

std::string profile_to_json(const NetworkProfile& p) {
    json j;
    j["downlink_kbps"] = p.downlink_bps / 1000.0;
    j["uplink_kbps"] = p.uplink_bps / 1000.0;
    j["rtt_ms"] = to_seconds(p.rtt) * 1000.0;
    j["loss"] = p.loss_probability;
    j["seed"] = p.seed;
    return j.dump(2);
}

}  // namespace h3ps::net
