#include "core/report.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <json.hpp>

namespace h3ps::bench {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string ms(SimTime t) {
    if (t < 0) return "";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3f", static_cast<double>(t) / kMillisecond);
    return buf;
}

double ms_num(SimTime t) {
    return static_cast<double>(t) / kMillisecond;
}

Result<Unit, std::string> write_file(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) return std::string("cannot write ") + path.string();
    out << text;
    if (!out) return std::string("short write to ") + path.string();
    return Unit{};
}

double median(std::vector<double> v) {
    if (v.empty()) return 0;
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 ? v[n / 2] : (v[n / 2 - 1] + v[n / 2]) / 2.0;
}

}  // namespace

std::string summary_csv(const MetricsReport& report) {
    std::ostringstream out;
    out << "scenario,protocol,msg_size_bytes,rep,t_first_data_ms,t_complete_ms,"
           "up_bytes,down_bytes,up_pkts,down_pkts,dropped\n";
    for (const auto& r : report.runs) {
        out << report.scenario << ',' << r.protocol << ',' << r.msg_size << ',' << r.rep << ','
            << ms(r.t_first_data) << ',' << ms(r.t_complete) << ',' << r.stats.up_bytes << ','
            << r.stats.down_bytes << ',' << r.stats.up_packets << ',' << r.stats.down_packets
            << ',' << r.stats.dropped << '\n';
    }
    return out.str();
}

std::string report_json(const MetricsReport& report) {
    json j;
    j["scenario"] = report.scenario;
    j["mode"] = report.mode;
    j["profile"] = {{"downlink_kbps", report.profile.downlink_bps / 1000.0},
                    {"uplink_kbps", report.profile.uplink_bps / 1000.0},
                    {"rtt_ms", ms_num(report.profile.rtt)},
                    {"loss", report.profile.loss_probability},
                    {"seed", report.profile.seed}};
    j["sizes"] = report.sizes;
    j["repetitions"] = report.repetitions;
    j["fingerprint_h3"] = report.fingerprint_h3;
    j["fingerprint_mqtt"] = report.fingerprint_mqtt;
    j["failed_runs"] = report.failed_runs;
    j["notes"] = report.notes;

    j["runs"] = json::array();
    for (const auto& r : report.runs) {
        json row;
        row["protocol"] = r.protocol;
        row["connection"] = r.connection;
        row["msg_size_bytes"] = r.msg_size;
        row["rep"] = r.rep;
        if (r.t_first_data >= 0) {
            row["t_first_data_ms"] = ms_num(r.t_first_data);
        } else {
            row["t_first_data_ms"] = nullptr;
        }
        if (r.t_complete >= 0) {
            row["t_complete_ms"] = ms_num(r.t_complete);
        } else {
            row["t_complete_ms"] = nullptr;
        }
        row["up_bytes"] = r.stats.up_bytes;
        row["down_bytes"] = r.stats.down_bytes;
        row["up_pkts"] = r.stats.up_packets;
        row["down_pkts"] = r.stats.down_packets;
        row["dropped"] = r.stats.dropped;
        row["failed"] = r.failed;
        if (!r.error.empty()) row["error"] = r.error;
        j["runs"].push_back(std::move(row));
    }

    j["series"] = json::array();
    for (const auto& s : report.series) {
        json row;
        row["protocol"] = s.protocol;
        row["rep"] = s.rep;
        row["connection"] = s.connection;
        row["delivered_bytes"] = s.delivered_bytes;
        row["bins"] = json::array();
        for (const auto& b : s.bins) {
            row["bins"].push_back({{"bin_start_ms", ms_num(b.bin_start)}, {"bytes", b.bytes}});
        }
        j["series"].push_back(std::move(row));
    }

    j["resources"] = json::array();
    for (const auto& rs : report.resources) {
        json row;
        row["protocol"] = rs.protocol;
        row["rep"] = rs.rep;
        row["samples"] = json::array();
        for (const auto& s : rs.samples) {
            row["samples"].push_back(
                {{"ts_ms", ms_num(s.ts)}, {"cpu_fraction", s.cpu_fraction}});
        }
        j["resources"].push_back(std::move(row));
    }
    return j.dump(2);
}

namespace {

std::string paired_first_data_csv(const MetricsReport& report) {
    // pub1 rows keyed by (size, rep), one column per protocol.
    std::map<std::pair<std::size_t, int>, std::pair<SimTime, SimTime>> cells;  // h3, mqtt
    for (const auto& r : report.runs) {
        if (r.connection != "pub1" || r.t_first_data < 0) continue;
        auto& cell = cells[{r.msg_size, r.rep}];
        if (r.protocol == "h3") {
            cell.first = r.t_first_data;
        } else {
            cell.second = r.t_first_data;
        }
    }
    std::ostringstream out;
    out << "msg_size_bytes,rep,h3_ms,mqtt_ms,delta_ms,delta_rtt_units\n";
    const double rtt_ms = ms_num(report.profile.rtt);
    for (const auto& [key, cell] : cells) {
        if (cell.first <= 0 || cell.second <= 0) continue;
        const double h3v = ms_num(cell.first);
        const double mqv = ms_num(cell.second);
        char buf[160];
        std::snprintf(buf, sizeof buf, "%zu,%d,%.3f,%.3f,%.3f,%.4f\n", key.first, key.second, h3v,
                      mqv, mqv - h3v, rtt_ms > 0 ? (mqv - h3v) / rtt_ms : 0.0);
        out << buf;
    }
    return out.str();
}

}  // namespace

Result<Unit, std::string> write_report(const MetricsReport& report, const std::string& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) return std::string("cannot create ") + dir + ": " + ec.message();

    if (auto r = write_file(fs::path(dir) / "summary.csv", summary_csv(report)); !r.ok())
        return r;
    if (auto r = write_file(fs::path(dir) / "report.json", report_json(report)); !r.ok())
        return r;

    for (const auto& s : report.series) {
        std::ostringstream out;
        out << "bin_start_ms,bytes\n";
        for (const auto& b : s.bins) {
            char buf[64];
            std::snprintf(buf, sizeof buf, "%.3f,%llu\n", ms_num(b.bin_start),
                          static_cast<unsigned long long>(b.bytes));
            out << buf;
        }
        const std::string name =
            "tput_" + s.protocol + "_rep" + std::to_string(s.rep) + "_" + s.connection + ".csv";
        if (auto r = write_file(fs::path(dir) / name, out.str()); !r.ok()) return r;
    }

    for (const auto& rs : report.resources) {
        std::ostringstream out;
        out << "ts_ms,cpu_fraction\n";
        for (const auto& s : rs.samples) {
            char buf[64];
            std::snprintf(buf, sizeof buf, "%.3f,%.4f\n", ms_num(s.ts), s.cpu_fraction);
            out << buf;
        }
        const std::string name = "cpu_" + rs.protocol + "_rep" + std::to_string(rs.rep) + ".csv";
        if (auto r = write_file(fs::path(dir) / name, out.str()); !r.ok()) return r;
    }

    if (report.scenario == "first_data" && !report.fingerprint_h3.empty() &&
        !report.fingerprint_mqtt.empty()) {
        if (auto r = write_file(fs::path(dir) / "paired_first_data.csv",
                                paired_first_data_csv(report));
            !r.ok())
            return r;
    }
    return Unit{};
}

Result<MetricsReport, std::string> load_report(const std::string& dir) {
    std::ifstream in(fs::path(dir) / "report.json");
    if (!in) return std::string("cannot open ") + dir + "/report.json";
    std::ostringstream buf;
    buf << in.rdbuf();
    json j = json::parse(buf.str(), nullptr, false);
    if (j.is_discarded()) return std::string("report.json is not valid JSON");

    MetricsReport r;
    try {
        r.scenario = j.at("scenario").get<std::string>();
        r.mode = j.at("mode").get<std::string>();
        const auto& p = j.at("profile");
        r.profile.downlink_bps = p.at("downlink_kbps").get<double>() * 1000.0;
        r.profile.uplink_bps = p.at("uplink_kbps").get<double>() * 1000.0;
        r.profile.rtt = from_millis(p.at("rtt_ms").get<double>());
        r.profile.loss_probability = p.at("loss").get<double>();
        r.profile.seed = p.at("seed").get<std::uint64_t>();
        r.sizes = j.at("sizes").get<std::vector<std::size_t>>();
        r.repetitions = j.at("repetitions").get<int>();
        r.fingerprint_h3 = j.value("fingerprint_h3", "");
        r.fingerprint_mqtt = j.value("fingerprint_mqtt", "");
        r.failed_runs = j.value("failed_runs", 0);
        r.notes = j.value("notes", std::vector<std::string>{});

        for (const auto& row : j.at("runs")) {
            RunRecord rr;
            rr.protocol = row.at("protocol").get<std::string>();
            rr.connection = row.at("connection").get<std::string>();
            rr.msg_size = row.at("msg_size_bytes").get<std::size_t>();
            rr.rep = row.at("rep").get<int>();
            if (!row.at("t_first_data_ms").is_null()) {
                rr.t_first_data = from_millis(row.at("t_first_data_ms").get<double>());
            }
            if (!row.at("t_complete_ms").is_null()) {
                rr.t_complete = from_millis(row.at("t_complete_ms").get<double>());
            }
            rr.stats.up_bytes = row.at("up_bytes").get<std::uint64_t>();
            rr.stats.down_bytes = row.at("down_bytes").get<std::uint64_t>();
            rr.stats.up_packets = row.at("up_pkts").get<std::uint64_t>();
            rr.stats.down_packets = row.at("down_pkts").get<std::uint64_t>();
            rr.stats.dropped = row.at("dropped").get<std::uint64_t>();
            rr.failed = row.value("failed", false);
            rr.error = row.value("error", "");
            r.runs.push_back(std::move(rr));
        }
        for (const auto& row : j.at("series")) {
            ConnectionSeries cs;
            cs.protocol = row.at("protocol").get<std::string>();
            cs.rep = row.at("rep").get<int>();
            cs.connection = row.at("connection").get<std::string>();
            cs.delivered_bytes = row.at("delivered_bytes").get<std::uint64_t>();
            for (const auto& b : row.at("bins")) {
                cs.bins.push_back({from_millis(b.at("bin_start_ms").get<double>()),
                                   b.at("bytes").get<std::uint64_t>()});
            }
            r.series.push_back(std::move(cs));
        }
        for (const auto& row : j.at("resources")) {
            ResourceSeries rs;
            rs.protocol = row.at("protocol").get<std::string>();
            rs.rep = row.at("rep").get<int>();
            for (const auto& s : row.at("samples")) {
                rs.samples.push_back({from_millis(s.at("ts_ms").get<double>()),
                                      s.at("cpu_fraction").get<double>()});
            }
            r.resources.push_back(std::move(rs));
        }
    } catch (const json::exception& e) {
        return std::string("report.json: ") + e.what();
    }
    return r;
}

std::string render_table(const MetricsReport& report) {
    struct Agg {
        std::vector<double> ttfd_ms;
        std::vector<double> complete_ms;
        double up_bytes = 0, down_bytes = 0, up_pkts = 0, down_pkts = 0, dropped = 0;
        int n = 0;
    };
    std::map<std::pair<std::string, std::size_t>, Agg> groups;
    for (const auto& r : report.runs) {
        if (r.connection == "sub") continue;
        Agg& g = groups[{r.protocol, r.msg_size}];
        ++g.n;
        if (r.t_first_data >= 0) g.ttfd_ms.push_back(ms_num(r.t_first_data));
        if (r.t_complete >= 0) g.complete_ms.push_back(ms_num(r.t_complete));
        g.up_bytes += static_cast<double>(r.stats.up_bytes);
        g.down_bytes += static_cast<double>(r.stats.down_bytes);
        g.up_pkts += static_cast<double>(r.stats.up_packets);
        g.down_pkts += static_cast<double>(r.stats.down_packets);
        g.dropped += static_cast<double>(r.stats.dropped);
    }

    std::ostringstream out;
    char buf[256];
    std::snprintf(buf, sizeof buf,
                  "scenario %s | mode %s | rtt %.0f ms | up %.0f kbit/s | down %.0f kbit/s | "
                  "loss %.3f | seed %llu\n",
                  report.scenario.c_str(), report.mode.c_str(), ms_num(report.profile.rtt),
                  report.profile.uplink_bps / 1000.0, report.profile.downlink_bps / 1000.0,
                  report.profile.loss_probability,
                  static_cast<unsigned long long>(report.profile.seed));
    out << buf;
    if (report.failed_runs > 0) out << "failed runs: " << report.failed_runs << "\n";
    for (const auto& note : report.notes) out << "note: " << note << "\n";
    out << "\n";
    out << "protocol   size_B   runs   ttfd_ms(med)   complete_ms(med)   up_bytes   down_bytes"
           "   up_pkts   down_pkts   dropped\n";
    for (const auto& [key, g] : groups) {
        const double per = g.n > 0 ? 1.0 / g.n : 0.0;
        std::snprintf(buf, sizeof buf,
                      "%-8s %8zu %6d %14.1f %18.1f %10.0f %12.0f %9.1f %11.1f %9.1f\n",
                      key.first.c_str(), key.second, g.n, median(g.ttfd_ms),
                      median(g.complete_ms), g.up_bytes * per, g.down_bytes * per,
                      g.up_pkts * per, g.down_pkts * per, g.dropped * per);
        out << buf;
    }

    // Per-size paired deltas when both protocols are present.
    std::map<std::size_t, std::pair<const Agg*, const Agg*>> paired;
    for (const auto& [key, g] : groups) {
        if (key.first == "h3") {
            paired[key.second].first = &g;
        } else if (key.first == "mqtt") {
            paired[key.second].second = &g;
        }
    }
    bool have_pairs = false;
    for (const auto& [size, pair] : paired) {
        if (pair.first && pair.second) have_pairs = true;
    }
    if (have_pairs) {
        out << "\nmqtt - h3 deltas\n";
        out << "size_B   ttfd_delta_ms   ttfd_delta_rtt   bytes_h3_vs_mqtt%   pkts_h3_vs_mqtt%\n";
        const double rtt_ms = ms_num(report.profile.rtt);
        for (const auto& [size, pair] : paired) {
            if (!pair.first || !pair.second) continue;
            const Agg& h = *pair.first;
            const Agg& m = *pair.second;
            const double dt = median(std::vector<double>(m.ttfd_ms)) -
                              median(std::vector<double>(h.ttfd_ms));
            const double hb = (h.up_bytes + h.down_bytes) / std::max(1, h.n);
            const double mb = (m.up_bytes + m.down_bytes) / std::max(1, m.n);
            const double hp = (h.up_pkts + h.down_pkts) / std::max(1, h.n);
            const double mp = (m.up_pkts + m.down_pkts) / std::max(1, m.n);
            std::snprintf(buf, sizeof buf, "%6zu %15.1f %16.3f %18.2f %18.2f\n", size, dt,
                          rtt_ms > 0 ? dt / rtt_ms : 0.0,
                          mb > 0 ? (hb - mb) / mb * 100.0 : 0.0,
                          mp > 0 ? (hp - mp) / mp * 100.0 : 0.0);
            out << buf;
        }
    }
    return out.str();
}

Result<ScenarioConfig, std::string> config_from_json(const std::string& text) {
    json j = json::parse(text, nullptr, false);
    if (j.is_discarded()) return std::string("config: invalid JSON");
    if (!j.is_object()) return std::string("config: expected a JSON object");

    static const std::set<std::string> known{
        "scenario",        "protocol",        "mode",          "profile",
        "sizes",           "publisher_count", "stagger_ms",    "repetitions",
        "with_subscriber", "mqtt_auth",       "username",      "password",
        "sample_period_ms", "realtime_timeout_ms", "transport"};
    for (auto it = j.begin(); it != j.end(); ++it) {
        if (!known.count(it.key())) return "config: unknown key \"" + it.key() + "\"";
    }

    ScenarioConfig cfg;
    try {
        if (j.contains("scenario")) {
            auto s = scenario_from_string(j.at("scenario").get<std::string>());
            if (!s) return std::string("config: unknown scenario");
            cfg.scenario = *s;
        }
        if (j.contains("protocol")) {
            auto p = protocol_from_string(j.at("protocol").get<std::string>());
            if (!p) return std::string("config: unknown protocol");
            cfg.protocol = *p;
        }
        if (j.contains("mode")) {
            auto m = mode_from_string(j.at("mode").get<std::string>());
            if (!m) return std::string("config: unknown mode");
            cfg.mode = *m;
        }
        if (j.contains("profile")) {
            const auto& p = j.at("profile");
            if (p.contains("downlink_kbps"))
                cfg.profile.downlink_bps = p.at("downlink_kbps").get<double>() * 1000.0;
            if (p.contains("uplink_kbps"))
                cfg.profile.uplink_bps = p.at("uplink_kbps").get<double>() * 1000.0;
            if (p.contains("rtt_ms")) cfg.profile.rtt = from_millis(p.at("rtt_ms").get<double>());
            if (p.contains("loss")) {
                cfg.profile.loss_probability = p.at("loss").get<double>();
                cfg.loss_explicit = true;
            }
            if (p.contains("seed")) cfg.profile.seed = p.at("seed").get<std::uint64_t>();
        }
        if (j.contains("sizes")) cfg.message_sizes = j.at("sizes").get<std::vector<std::size_t>>();
        if (j.contains("publisher_count")) cfg.publisher_count = j.at("publisher_count").get<int>();
        if (j.contains("stagger_ms")) cfg.stagger = from_millis(j.at("stagger_ms").get<double>());
        if (j.contains("repetitions")) cfg.repetitions = j.at("repetitions").get<int>();
        if (j.contains("with_subscriber")) cfg.with_subscriber = j.at("with_subscriber").get<bool>();
        if (j.contains("mqtt_auth")) cfg.mqtt_auth = j.at("mqtt_auth").get<bool>();
        if (j.contains("username")) cfg.username = j.at("username").get<std::string>();
        if (j.contains("password")) cfg.password = j.at("password").get<std::string>();
        if (j.contains("sample_period_ms"))
            cfg.sample_period = from_millis(j.at("sample_period_ms").get<double>());
        if (j.contains("realtime_timeout_ms"))
            cfg.realtime_timeout = from_millis(j.at("realtime_timeout_ms").get<double>());
        if (j.contains("transport")) {
            const auto& t = j.at("transport");
            if (t.contains("hello_size"))
                cfg.transport.hello_size = t.at("hello_size").get<std::size_t>();
            if (t.contains("handshake_timeout_ms"))
                cfg.transport.handshake_timeout =
                    from_millis(t.at("handshake_timeout_ms").get<double>());
            if (t.contains("handshake_backoff"))
                cfg.transport.handshake_backoff = t.at("handshake_backoff").get<double>();
            if (t.contains("max_handshake_retries"))
                cfg.transport.max_handshake_retries = t.at("max_handshake_retries").get<int>();
            if (t.contains("rto_initial_ms"))
                cfg.transport.rto_initial = from_millis(t.at("rto_initial_ms").get<double>());
            if (t.contains("rto_backoff"))
                cfg.transport.rto_backoff = t.at("rto_backoff").get<double>();
            if (t.contains("max_retransmits"))
                cfg.transport.max_retransmits = t.at("max_retransmits").get<int>();
        }
    } catch (const json::exception& e) {
        return std::string("config: ") + e.what();
    }
    return cfg;
}

std::string config_to_json(const ScenarioConfig& cfg) {
    json j;
    j["scenario"] = to_string(cfg.scenario);
    j["protocol"] = to_string(cfg.protocol);
    j["mode"] = to_string(cfg.mode);
    j["profile"] = {{"downlink_kbps", cfg.profile.downlink_bps / 1000.0},
                    {"uplink_kbps", cfg.profile.uplink_bps / 1000.0},
                    {"rtt_ms", ms_num(cfg.profile.rtt)},
                    {"loss", cfg.profile.loss_probability},
                    {"seed", cfg.profile.seed}};
    j["sizes"] = cfg.message_sizes;
    j["publisher_count"] = cfg.publisher_count;
    j["stagger_ms"] = ms_num(cfg.stagger);
    j["repetitions"] = cfg.repetitions;
    j["with_subscriber"] = cfg.with_subscriber;
    j["mqtt_auth"] = cfg.mqtt_auth;
    j["username"] = cfg.username;
    j["password"] = cfg.password;
    return j.dump(2);
}

}  // namespace h3ps::bench
