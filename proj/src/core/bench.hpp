#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "core/netsim.hpp"
#include "core/resource_sampler.hpp"
#include "core/result.hpp"
#include "core/transport.hpp"

namespace h3ps::bench {

enum class ScenarioKind { first_data, interleaved, overhead_sweep, resource };
enum class ProtocolChoice { h3, mqtt, both };
enum class RunMode { virtual_time, realtime };

const char* to_string(ScenarioKind s);
const char* to_string(ProtocolChoice p);
const char* to_string(RunMode m);
std::optional<ScenarioKind> scenario_from_string(std::string_view s);
std::optional<ProtocolChoice> protocol_from_string(std::string_view s);
std::optional<RunMode> mode_from_string(std::string_view s);

/// Default packet loss for loss-bearing scenarios. Cellular IoT links sit
/// around a percent; the exact figure is a knob, never an assumption baked
/// into the runner.
inline constexpr double kDefaultNbIotLoss = 0.01;

struct ScenarioConfig {
    ScenarioKind scenario = ScenarioKind::first_data;
    ProtocolChoice protocol = ProtocolChoice::both;
    net::NetworkProfile profile{};
    std::vector<std::size_t> message_sizes;  // empty = scenario default
    int publisher_count = 5;
    SimTime stagger = 1 * kSecond;
    int repetitions = 10;
    RunMode mode = RunMode::virtual_time;
    bool with_subscriber = true;
    bool mqtt_auth = true;  // basic auth on the MQTT side only; H3 runs open
    std::string username = "device";
    std::string password = "secret";
    net::TransportConfig transport{};
    SimTime sample_period = 100 * kMillisecond;
    SimTime realtime_timeout = 60 * kSecond;
    bool loss_explicit = false;  // profile.loss was set by the caller

    /// Fills message_sizes when empty (1..10 KiB for the sweeps, 1 KiB
    /// otherwise) and applies kDefaultNbIotLoss to loss-bearing scenarios
    /// unless the caller pinned a loss value.
    void apply_defaults();

    Result<Unit, std::string> validate() const;
};

struct RunRecord {
    std::string protocol;    // "h3" | "mqtt"
    std::string connection;  // "pub1".."pubN" | "sub"
    std::size_t msg_size = 0;
    int rep = 0;
    SimTime t_first_data = -1;  // -1: no data frame on this connection
    SimTime t_complete = -1;
    net::CaptureStats stats;
    bool failed = false;
    std::string error;
};

struct SeriesPoint {
    SimTime bin_start = 0;
    std::uint64_t bytes = 0;
};

struct ConnectionSeries {
    std::string protocol;
    int rep = 0;
    std::string connection;
    std::vector<SeriesPoint> bins;
    std::uint64_t delivered_bytes = 0;  // sum of bins, by construction
};

struct ResourceSeries {
    std::string protocol;
    int rep = 0;
    std::vector<ResourceSample> samples;
};

struct MetricsReport {
    std::string scenario;
    std::string mode;
    net::NetworkProfile profile;
    std::vector<std::size_t> sizes;
    int repetitions = 0;
    std::vector<RunRecord> runs;
    std::vector<ConnectionSeries> series;
    std::vector<ResourceSeries> resources;
    std::string fingerprint_h3;
    std::string fingerprint_mqtt;
    int failed_runs = 0;
    std::vector<std::string> notes;  // non-fatal conditions, e.g. sampling unsupported
};

enum class MetricsError { no_hello, no_data_frame };

/// Delta between the first uplink hello and the first uplink datagram
/// carrying application payload, both read at the sender-side capture point.
Result<SimTime, MetricsError> time_to_first_data(const net::Trace& trace, std::uint32_t flow);

/// Delivered bytes per fixed-width bin, bins anchored at the first matching
/// event. No direction filter means both directions count.
std::vector<SeriesPoint> bin_throughput(const net::Trace& trace, std::uint32_t flow,
                                        SimTime bin = 200 * kMillisecond,
                                        std::optional<net::Direction> dir = std::nullopt);

/// Number of session-setup packets (stream datagrams, either direction)
/// observed before the first application payload datagram leaves.
int setup_packets_before_first_data(const net::Trace& trace, std::uint32_t flow);

/// Deterministic test payload for a given size and seed; identical across
/// protocols so paired runs push the same bytes.
std::vector<std::uint8_t> make_payload(std::size_t size, std::uint64_t seed);

Result<MetricsReport, std::string> run_scenario(const ScenarioConfig& cfg);

}  // namespace h3ps::bench
