#include "core/bench.hpp"

#include <algorithm>
#include <cinttypes>
#include <cstdio>
#include <functional>
#include <memory>

#include "core/broker.hpp"
#include "core/h3_endpoint.hpp"
#include "core/mqtt_endpoint.hpp"
#include "core/realtime_link.hpp"

namespace h3ps::bench {

const char* to_string(ScenarioKind s) {
    switch (s) {
    case ScenarioKind::first_data: return "first_data";
    case ScenarioKind::interleaved: return "interleaved";
    case ScenarioKind::overhead_sweep: return "overhead_sweep";
    case ScenarioKind::resource: return "resource";
    }
    return "?";
}

const char* to_string(ProtocolChoice p) {
    switch (p) {
    case ProtocolChoice::h3: return "h3";
    case ProtocolChoice::mqtt: return "mqtt";
    case ProtocolChoice::both: return "both";
    }
    return "?";
}

const char* to_string(RunMode m) {
    return m == RunMode::virtual_time ? "virtual" : "realtime";
}

std::optional<ScenarioKind> scenario_from_string(std::string_view s) {
    if (s == "first_data") return ScenarioKind::first_data;
    if (s == "interleaved") return ScenarioKind::interleaved;
    if (s == "overhead_sweep") return ScenarioKind::overhead_sweep;
    if (s == "resource") return ScenarioKind::resource;
    return std::nullopt;
}

std::optional<ProtocolChoice> protocol_from_string(std::string_view s) {
    if (s == "h3") return ProtocolChoice::h3;
    if (s == "mqtt") return ProtocolChoice::mqtt;
    if (s == "both") return ProtocolChoice::both;
    return std::nullopt;
}

std::optional<RunMode> mode_from_string(std::string_view s) {
    if (s == "virtual") return RunMode::virtual_time;
    if (s == "realtime") return RunMode::realtime;
    return std::nullopt;
}

void ScenarioConfig::apply_defaults() {
    if (message_sizes.empty()) {
        if (scenario == ScenarioKind::first_data || scenario == ScenarioKind::overhead_sweep) {
            for (std::size_t k = 1; k <= 10; ++k) message_sizes.push_back(k * 1024);
        } else {
            message_sizes.push_back(1024);
        }
    }
    const bool loss_bearing =
        scenario == ScenarioKind::interleaved || scenario == ScenarioKind::resource;
    if (!loss_explicit && loss_bearing) profile.loss_probability = kDefaultNbIotLoss;
}

Result<Unit, std::string> ScenarioConfig::validate() const {
    if (!profile.validate().ok()) return std::string("invalid network profile");
    if (message_sizes.empty()) return std::string("no message sizes configured");
    if (publisher_count < 1) return std::string("publisher_count must be >= 1");
    if (repetitions < 1) return std::string("repetitions must be >= 1");
    if (stagger < 0) return std::string("stagger must be >= 0");
    if (scenario == ScenarioKind::resource && mode != RunMode::realtime) {
        return std::string("resource scenario needs --mode realtime (wall-clock CPU sampling)");
    }
    return Unit{};
}

// ---------------------------------------------------------------------------
// Metrics
// ---------------------------------------------------------------------------

Result<SimTime, MetricsError> time_to_first_data(const net::Trace& trace, std::uint32_t flow) {
    SimTime hello = -1;
    SimTime data = -1;
    for (const auto& ev : trace.events) {
        if (ev.flow != flow || ev.dir != net::Direction::up) continue;
        if (hello < 0 && ev.kind == net::DgramKind::client_hello) hello = ev.ts;
        if (data < 0 && ev.kind == net::DgramKind::stream && ev.app_data) data = ev.ts;
        if (hello >= 0 && data >= 0) break;
    }
    if (hello < 0) return MetricsError::no_hello;
    if (data < 0) return MetricsError::no_data_frame;
    return data - hello;
}

std::vector<SeriesPoint> bin_throughput(const net::Trace& trace, std::uint32_t flow, SimTime bin,
                                        std::optional<net::Direction> dir) {
    SimTime t0 = -1;
    SimTime t1 = -1;
    for (const auto& ev : trace.events) {
        if (ev.flow != flow || ev.disposition != net::Disposition::delivered) continue;
        if (dir && ev.dir != *dir) continue;
        if (t0 < 0 || ev.ts < t0) t0 = ev.ts;
        t1 = std::max(t1, ev.ts);
    }
    if (t0 < 0) return {};

    std::vector<SeriesPoint> bins(static_cast<std::size_t>((t1 - t0) / bin) + 1);
    for (std::size_t i = 0; i < bins.size(); ++i) bins[i].bin_start = t0 + static_cast<SimTime>(i) * bin;
    for (const auto& ev : trace.events) {
        if (ev.flow != flow || ev.disposition != net::Disposition::delivered) continue;
        if (dir && ev.dir != *dir) continue;
        bins[static_cast<std::size_t>((ev.ts - t0) / bin)].bytes += ev.size_bytes;
    }
    return bins;
}

int setup_packets_before_first_data(const net::Trace& trace, std::uint32_t flow) {
    SimTime first_data = -1;
    for (const auto& ev : trace.events) {
        if (ev.flow == flow && ev.dir == net::Direction::up && ev.kind == net::DgramKind::stream &&
            ev.app_data) {
            first_data = ev.ts;
            break;
        }
    }
    int count = 0;
    for (const auto& ev : trace.events) {
        if (ev.flow != flow || ev.kind != net::DgramKind::stream) continue;
        if (first_data >= 0 && ev.ts >= first_data) continue;
        if (ev.app_data) continue;
        ++count;
    }
    return count;
}

std::vector<std::uint8_t> make_payload(std::size_t size, std::uint64_t seed) {
    net::detail::UniformRng rng(seed);
    std::vector<std::uint8_t> out(size);
    for (std::size_t i = 0; i < size; i += 8) {
        std::uint64_t w = rng.next_u64();
        for (std::size_t k = 0; k < 8 && i + k < size; ++k) {
            out[i + k] = static_cast<std::uint8_t>(w >> (8 * k));
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Execution
// ---------------------------------------------------------------------------

namespace {

constexpr const char* kTopic = "bench";

std::uint64_t mix_seed(std::uint64_t base, std::uint32_t flow) {
    net::detail::UniformRng rng(base ^ (0x9e3779b97f4a7c15ull * (flow + 1)));
    return rng.next_u64();
}

struct Fingerprint {
    std::uint64_t h = 1469598103934665603ull;

    void add_byte(std::uint8_t b) {
        h ^= b;
        h *= 1099511628211ull;
    }
    void add_u64(std::uint64_t v) {
        for (int i = 0; i < 8; ++i) add_byte(static_cast<std::uint8_t>(v >> (8 * i)));
    }
    void add_bytes(std::span<const std::uint8_t> data) {
        for (auto b : data) add_byte(b);
    }
    void add_string(std::string_view s) {
        add_u64(s.size());
        for (char c : s) add_byte(static_cast<std::uint8_t>(c));
    }
    std::string hex() const {
        char buf[17];
        std::snprintf(buf, sizeof buf, "%016" PRIx64, h);
        return buf;
    }
};

struct ConnOutcome {
    std::string name;
    std::uint32_t flow = 0;
    std::size_t msg_size = 0;
    bool is_publisher = true;
    net::Trace trace;
    SimTime t_complete = -1;
    bool failed = false;
    std::string error;
};

struct ExecParams {
    bool use_h3 = true;
    net::NetworkProfile profile;  // seed already adjusted for the repetition
    net::TransportConfig transport;
    int publishers = 1;
    SimTime stagger = 0;
    std::size_t msg_size = 1024;
    bool with_subscriber = false;
    bool mqtt_auth = true;
    std::string username;
    std::string password;
    SimTime horizon = 24 * 3600 * kSecond;  // virtual-time safety net
    SimTime realtime_timeout = 60 * kSecond;
};

struct ExecResult {
    std::vector<ConnOutcome> connections;  // pub1..pubN [, sub]
    bool aborted = false;
    std::string error;
};

// One endpoint pair (client/server transports plus protocol endpoints) over
// one conditioned link. LinkT is VirtualLink or RealtimeLink.
template <typename LinkT>
struct Bundle {
    std::unique_ptr<LinkT> link;
    std::unique_ptr<net::Connection> client_conn;
    std::unique_ptr<net::Connection> server_conn;
    std::unique_ptr<h3::ServerEndpoint> h3_server;
    std::unique_ptr<mqtt::BrokerEndpoint> mqtt_server;
    std::unique_ptr<h3::Client> h3_client;
    std::unique_ptr<mqtt::Client> mqtt_client;

    std::uint32_t flow = 0;
    bool done = false;
    bool failed = false;
    std::string error;
    SimTime t_complete = -1;
    std::size_t received_events = 0;

    void fail(const std::string& why) {
        if (!failed) {
            failed = true;
            error = why;
        }
        done = true;
    }
};

template <typename LinkT>
void wire_bundle(Bundle<LinkT>& b, const ExecParams& P, Broker& broker, Scheduler& sched,
                 std::uint32_t flow, auto make_link) {
    net::NetworkProfile link_profile = P.profile;
    link_profile.seed = mix_seed(P.profile.seed, flow);
    b.flow = flow;
    b.link = make_link(link_profile, flow);
    net::TransportConfig tcfg = P.transport;
    tcfg.alpn = P.use_h3 ? "h3" : "mqtt";
    b.client_conn = std::make_unique<net::Connection>(net::Connection::Role::client, b.link->a(),
                                                      sched, tcfg, flow);
    b.server_conn = std::make_unique<net::Connection>(net::Connection::Role::server, b.link->b(),
                                                      sched, tcfg, flow);
    if (P.use_h3) {
        b.h3_server = std::make_unique<h3::ServerEndpoint>(broker, *b.server_conn, sched);
        b.h3_client = std::make_unique<h3::Client>(*b.client_conn, sched);
    } else {
        mqtt::AuthConfig auth;
        auth.required = P.mqtt_auth;
        auth.username = P.username;
        auth.password = P.password;
        b.mqtt_server = std::make_unique<mqtt::BrokerEndpoint>(broker, *b.server_conn, sched, auth);
        mqtt::ClientOptions opts;
        opts.client_id = "client" + std::to_string(flow);
        if (P.mqtt_auth) {
            opts.username = P.username;
            opts.password = P.password;
        }
        b.mqtt_client = std::make_unique<mqtt::Client>(*b.client_conn, sched, opts);
    }
}

template <typename LinkT>
void start_publisher(Bundle<LinkT>& b, const ExecParams& P, Scheduler& sched,
                     const TopicName& topic, std::vector<std::uint8_t> payload,
                     std::function<void()> on_done) {
    b.client_conn->on_handshake_failed([&b, on_done] {
        b.fail("transport handshake failed");
        on_done();
    });
    if (P.use_h3) {
        b.client_conn->connect();
        // The request is queued now and leaves the instant the handshake
        // completes; no application-level exchange precedes it.
        b.h3_client->publish(topic, payload, [&b, &sched, on_done](h3::StatusOutcome o) {
            if (o.code != 200) b.fail("publish status " + std::to_string(o.code));
            b.client_conn->close();
            b.t_complete = sched.now();
            b.done = true;
            on_done();
        });
    } else {
        b.client_conn->on_stream_acked([&b, &sched, on_done](std::uint64_t sid) {
            if (sid != mqtt::kSessionStream || b.done) return;
            b.client_conn->close();
            b.t_complete = sched.now();
            b.done = true;
            on_done();
        });
        b.client_conn->connect();
        auto* client = b.mqtt_client.get();
        auto* conn = b.client_conn.get();
        b.mqtt_client->connect(
            [&b, client, conn, topic, payload = std::move(payload),
             on_done](Result<std::uint8_t, mqtt::ClientError> r) {
                if (!r.ok()) {
                    conn->close();
                    b.fail("connect refused");
                    on_done();
                    return;
                }
                client->publish(topic, payload);
                client->disconnect();  // marks the stream finished; the full
                                       // ack of that fin completes the run
            });
    }
}

template <typename LinkT>
void start_subscriber(Bundle<LinkT>& b, const ExecParams& P, const TopicName& topic,
                      std::function<void()> on_ready, std::function<void()> on_event) {
    b.client_conn->on_handshake_failed([&b, on_ready] {
        b.fail("transport handshake failed");
        on_ready();
    });
    b.client_conn->connect();
    if (P.use_h3) {
        h3::Client::SubscriptionEvents ev;
        ev.on_event = [&b, on_event](std::span<const std::uint8_t>) {
            ++b.received_events;
            on_event();
        };
        ev.on_result = [&b, on_ready](h3::StatusOutcome o) {
            if (o.code != 200) b.fail("subscribe status " + std::to_string(o.code));
            on_ready();
        };
        ev.on_end = [](bool) {};
        b.h3_client->subscribe(topic, std::move(ev));
    } else {
        auto* client = b.mqtt_client.get();
        b.mqtt_client->connect([&b, client, topic, on_ready,
                                on_event](Result<std::uint8_t, mqtt::ClientError> r) {
            if (!r.ok()) {
                b.fail("connect refused");
                on_ready();
                return;
            }
            client->subscribe(
                topic,
                [&b, on_event](std::span<const std::uint8_t>) {
                    ++b.received_events;
                    on_event();
                },
                [&b, on_ready](Result<std::uint8_t, mqtt::ClientError> r2) {
                    if (!r2.ok()) b.fail("subscribe refused");
                    on_ready();
                });
        });
    }
}

template <typename LinkT, typename SchedT>
ExecResult run_execution(const ExecParams& P, SchedT& sched, auto make_link, auto run_loop,
                         auto snapshot, std::function<void()> request_stop) {
    ExecResult result;

    Broker broker({}, [&sched] { return sched.now(); });
    const TopicName topic = TopicName::parse(kTopic).value();
    broker.create_topic(topic);

    std::vector<std::unique_ptr<Bundle<LinkT>>> pubs;
    auto sub = std::make_unique<Bundle<LinkT>>();

    for (int k = 0; k < P.publishers; ++k) {
        pubs.push_back(std::make_unique<Bundle<LinkT>>());
        wire_bundle(*pubs.back(), P, broker, sched, static_cast<std::uint32_t>(k + 1), make_link);
    }
    if (P.with_subscriber) {
        wire_bundle(*sub, P, broker, sched,
                    static_cast<std::uint32_t>(P.publishers + 1), make_link);
    }

    bool finished = false;
    auto on_progress = [&] {
        // Loop-exit bookkeeping for the realtime path; the virtual loop just
        // drains to idle.
        if (finished) return;
        int open = 0;
        for (auto& p : pubs) {
            if (!p->done) ++open;
        }
        std::size_t succeeded = 0;
        for (auto& p : pubs) {
            if (p->done && !p->failed) ++succeeded;
        }
        if (P.with_subscriber && !sub->failed && sub->received_events < succeeded) ++open;
        if (open == 0) {
            finished = true;
            if (request_stop) request_stop();
        }
    };

    auto start_pubs = [&](SimTime base) {
        for (int k = 0; k < P.publishers; ++k) {
            auto payload = make_payload(P.msg_size, mix_seed(P.profile.seed, 1000 + k));
            sched.call_at(base + static_cast<SimTime>(k) * P.stagger,
                          [&, k, payload = std::move(payload)]() mutable {
                              start_publisher(*pubs[k], P, sched, topic, std::move(payload),
                                              on_progress);
                          });
        }
    };

    if (P.with_subscriber) {
        sched.call_at(0, [&] {
            start_subscriber(*sub, P, topic, [&] { start_pubs(sched.now()); }, on_progress);
        });
    } else {
        start_pubs(0);
    }

    run_loop();

    for (int k = 0; k < P.publishers; ++k) {
        auto& p = *pubs[k];
        ConnOutcome c;
        c.name = "pub" + std::to_string(k + 1);
        c.flow = p.flow;
        c.msg_size = P.msg_size;
        c.is_publisher = true;
        c.trace = snapshot(*p.link);
        c.t_complete = p.t_complete;
        if (!p.done && !p.failed) {
            c.failed = true;
            c.error = "did not complete";
        } else {
            c.failed = p.failed;
            c.error = p.error;
        }
        result.connections.push_back(std::move(c));
    }

    if (P.with_subscriber) {
        std::size_t succeeded = 0;
        for (auto& p : pubs) {
            if (p->done && !p->failed) ++succeeded;
        }
        ConnOutcome c;
        c.name = "sub";
        c.flow = sub->flow;
        c.msg_size = 0;
        c.is_publisher = false;
        c.trace = snapshot(*sub->link);
        for (const auto& ev : c.trace.events) {
            if (ev.disposition == net::Disposition::delivered) {
                c.t_complete = std::max(c.t_complete, ev.ts);
            }
        }
        c.failed = sub->failed || sub->received_events != succeeded;
        if (sub->failed) {
            c.error = sub->error;
        } else if (sub->received_events != succeeded) {
            c.error = "expected " + std::to_string(succeeded) + " events, got " +
                      std::to_string(sub->received_events);
        }
        result.connections.push_back(std::move(c));
    }

    return result;
}

ExecResult run_virtual(const ExecParams& P) {
    VirtualScheduler sched;
    auto make_link = [&sched](const net::NetworkProfile& prof, std::uint32_t flow) {
        return std::make_unique<net::VirtualLink>(prof, sched, flow);
    };
    auto run_loop = [&] { sched.run(P.horizon); };
    auto snapshot = [](net::VirtualLink& l) { return l.trace(); };
    return run_execution<net::VirtualLink>(P, sched, make_link, run_loop, snapshot, {});
}

ExecResult run_realtime(const ExecParams& P, std::vector<ResourceSample>* samples,
                        SimTime sample_period) {
    RealtimeScheduler sched;
    bool timed_out = false;
    auto make_link = [&sched](const net::NetworkProfile& prof, std::uint32_t flow) {
        return std::make_unique<net::RealtimeLink>(prof, sched, flow);
    };
    auto run_loop = [&] {
        sched.call_after(P.realtime_timeout, [&] {
            timed_out = true;
            sched.stop();
        });
        ResourceSampler sampler;
        const bool sample = samples != nullptr && ResourceSampler::supported();
        if (sample) sampler.start(sample_period);
        sched.run();
        if (sample) *samples = sampler.stop();
    };
    auto snapshot = [](net::RealtimeLink& l) { return l.snapshot_trace(); };
    ExecResult r = run_execution<net::RealtimeLink>(P, sched, make_link, run_loop, snapshot,
                                                    [&sched] { sched.stop(); });
    if (timed_out) {
        r.aborted = true;
        r.error = "realtime execution timed out";
    }
    return r;
}

}  // namespace

// ---------------------------------------------------------------------------
// Scenario driver
// ---------------------------------------------------------------------------

Result<MetricsReport, std::string> run_scenario(const ScenarioConfig& input) {
    ScenarioConfig cfg = input;
    cfg.apply_defaults();
    if (auto v = cfg.validate(); !v.ok()) return v.error();

    MetricsReport report;
    report.scenario = to_string(cfg.scenario);
    report.mode = to_string(cfg.mode);
    report.profile = cfg.profile;
    report.sizes = cfg.message_sizes;
    report.repetitions = cfg.repetitions;

    if (cfg.scenario == ScenarioKind::resource && !ResourceSampler::supported()) {
        report.notes.push_back("cpu sampling unsupported on this platform; series omitted");
    }

    std::vector<bool> protocols;  // true = h3
    if (cfg.protocol != ProtocolChoice::mqtt) protocols.push_back(true);
    if (cfg.protocol != ProtocolChoice::h3) protocols.push_back(false);

    for (bool use_h3 : protocols) {
        Fingerprint fp;
        fp.add_string(report.scenario);
        fp.add_u64(static_cast<std::uint64_t>(cfg.publisher_count));
        fp.add_u64(static_cast<std::uint64_t>(cfg.stagger));
        fp.add_string(kTopic);

        for (int rep = 0; rep < cfg.repetitions; ++rep) {
            net::NetworkProfile prof = cfg.profile;
            prof.seed = cfg.profile.seed + static_cast<std::uint64_t>(rep);
            fp.add_u64(prof.seed);
            fp.add_u64(static_cast<std::uint64_t>(prof.rtt));
            fp.add_u64(static_cast<std::uint64_t>(prof.downlink_bps));
            fp.add_u64(static_cast<std::uint64_t>(prof.uplink_bps));
            fp.add_u64(static_cast<std::uint64_t>(prof.loss_probability * 1e9));

            const bool sweep = cfg.scenario == ScenarioKind::first_data ||
                               cfg.scenario == ScenarioKind::overhead_sweep;
            const std::vector<std::size_t> sizes =
                sweep ? cfg.message_sizes
                      : std::vector<std::size_t>{cfg.message_sizes.front()};

            for (std::size_t size : sizes) {
                ExecParams P;
                P.use_h3 = use_h3;
                P.profile = prof;
                P.transport = cfg.transport;
                P.msg_size = size;
                P.mqtt_auth = cfg.mqtt_auth;
                P.username = cfg.username;
                P.password = cfg.password;
                P.realtime_timeout = cfg.realtime_timeout;
                if (sweep) {
                    P.publishers = 1;
                    P.stagger = 0;
                    P.with_subscriber = false;
                } else {
                    P.publishers = cfg.publisher_count;
                    P.stagger = cfg.stagger;
                    P.with_subscriber = cfg.with_subscriber;
                }

                fp.add_u64(size);
                for (int k = 0; k < P.publishers; ++k) {
                    fp.add_bytes(make_payload(size, mix_seed(prof.seed, 1000 + k)));
                }

                ExecResult exec;
                std::vector<ResourceSample> samples;
                if (cfg.mode == RunMode::virtual_time) {
                    exec = run_virtual(P);
                } else {
                    exec = run_realtime(
                        P, cfg.scenario == ScenarioKind::resource ? &samples : nullptr,
                        cfg.sample_period);
                }

                const char* proto_name = use_h3 ? "h3" : "mqtt";
                for (auto& conn : exec.connections) {
                    RunRecord r;
                    r.protocol = proto_name;
                    r.connection = conn.name;
                    r.msg_size = conn.msg_size;
                    r.rep = rep;
                    if (auto t = time_to_first_data(conn.trace, conn.flow); t.ok()) {
                        r.t_first_data = t.value();
                    }
                    r.t_complete = conn.t_complete;
                    r.stats = net::capture_stats(conn.trace);
                    r.failed = conn.failed || exec.aborted;
                    r.error = conn.failed ? conn.error : exec.error;
                    if (r.failed) ++report.failed_runs;
                    report.runs.push_back(std::move(r));

                    if (!sweep) {
                        ConnectionSeries cs;
                        cs.protocol = proto_name;
                        cs.rep = rep;
                        cs.connection = conn.name;
                        const auto dir = conn.is_publisher ? net::Direction::up
                                                           : net::Direction::down;
                        cs.bins = bin_throughput(conn.trace, conn.flow, 200 * kMillisecond, dir);
                        for (const auto& b : cs.bins) cs.delivered_bytes += b.bytes;
                        report.series.push_back(std::move(cs));
                    }
                }
                if (!sweep) {
                    // Aggregate publisher throughput alongside the
                    // per-connection plots.
                    net::Trace merged;
                    for (const auto& conn : exec.connections) {
                        if (!conn.is_publisher) continue;
                        for (const auto& ev : conn.trace.events) {
                            if (ev.dir != net::Direction::up) continue;
                            net::TraceEvent copy = ev;
                            copy.flow = 0;
                            merged.events.push_back(std::move(copy));
                        }
                    }
                    ConnectionSeries all;
                    all.protocol = proto_name;
                    all.rep = rep;
                    all.connection = "all";
                    all.bins = bin_throughput(merged, 0, 200 * kMillisecond, net::Direction::up);
                    for (const auto& b : all.bins) all.delivered_bytes += b.bytes;
                    report.series.push_back(std::move(all));
                }
                if (cfg.scenario == ScenarioKind::resource && !samples.empty()) {
                    report.resources.push_back({proto_name, rep, std::move(samples)});
                }
            }
        }
        if (use_h3) {
            report.fingerprint_h3 = fp.hex();
        } else {
            report.fingerprint_mqtt = fp.hex();
        }
    }

    if (cfg.protocol == ProtocolChoice::both &&
        report.fingerprint_h3 != report.fingerprint_mqtt) {
        return std::string("paired-run fingerprints diverged; executions were not comparable");
    }
    return report;
}

}  // namespace h3ps::bench
