// bench — scenario driver CLI. Links the h3ps C API; the heavy lifting lives
// behind the shared library.

#include <cstdio>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "h3ps.h"

namespace {

using nlohmann::json;

// Accepts "4096", "4k", "1k,2k,8k" and "1k..10k" (1 KiB steps).
bool parse_sizes(const std::string& text, std::vector<std::size_t>& out) {
    auto parse_one = [](const std::string& tok, std::size_t& v) {
        if (tok.empty()) return false;
        std::size_t mult = 1;
        std::string num = tok;
        if (tok.back() == 'k' || tok.back() == 'K') {
            mult = 1024;
            num = tok.substr(0, tok.size() - 1);
        }
        if (num.empty() || num.find_first_not_of("0123456789") != std::string::npos) return false;
        v = std::stoull(num) * mult;
        return v > 0;
    };

    const auto range = text.find("..");
    if (range != std::string::npos) {
        std::size_t lo = 0, hi = 0;
        if (!parse_one(text.substr(0, range), lo) || !parse_one(text.substr(range + 2), hi) ||
            lo > hi) {
            return false;
        }
        for (std::size_t v = lo; v <= hi; v += 1024) out.push_back(v);
        return !out.empty();
    }

    std::stringstream ss(text);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        std::size_t v = 0;
        if (!parse_one(tok, v)) return false;
        out.push_back(v);
    }
    return !out.empty();
}

int run_command(const std::string& scenario, const std::string& protocol, const std::string& mode,
                const std::string& profile_path, const std::string& sizes,
                const std::string& out_dir, int reps, int publishers, double stagger_ms,
                std::optional<double> loss, std::optional<std::uint64_t> seed, bool no_subscriber,
                bool no_auth, bool quiet, int max_failures) {
    json cfg;
    cfg["scenario"] = scenario;
    cfg["protocol"] = protocol;
    cfg["mode"] = mode;
    cfg["repetitions"] = reps;
    cfg["publisher_count"] = publishers;
    cfg["stagger_ms"] = stagger_ms;
    if (no_subscriber) cfg["with_subscriber"] = false;
    if (no_auth) cfg["mqtt_auth"] = false;

    json profile = json::object();
    if (!profile_path.empty()) {
        std::ifstream in(profile_path);
        if (!in) {
            std::fprintf(stderr, "bench: cannot open profile %s\n", profile_path.c_str());
            return 2;
        }
        std::ostringstream buf;
        buf << in.rdbuf();
        profile = json::parse(buf.str(), nullptr, false);
        if (profile.is_discarded() || !profile.is_object()) {
            std::fprintf(stderr, "bench: profile %s is not a JSON object\n", profile_path.c_str());
            return 2;
        }
        profile.erase("mode");  // run mode comes from --mode
    }
    if (loss) profile["loss"] = *loss;
    if (seed) profile["seed"] = *seed;
    if (!profile.empty()) cfg["profile"] = profile;

    if (!sizes.empty()) {
        std::vector<std::size_t> parsed;
        if (!parse_sizes(sizes, parsed)) {
            std::fprintf(stderr, "bench: cannot parse --sizes \"%s\"\n", sizes.c_str());
            return 2;
        }
        cfg["sizes"] = parsed;
    }

    h3ps_report* report = nullptr;
    const std::string cfg_text = cfg.dump();
    const h3ps_status st = h3ps_run_scenario(cfg_text.c_str(), &report);
    if (st != H3PS_OK) {
        std::fprintf(stderr, "bench: %s: %s\n", h3ps_status_str(st), h3ps_last_error());
        return st == H3PS_ERR_CONFIG ? 2 : 3;
    }

    if (!out_dir.empty()) {
        if (h3ps_report_write(report, out_dir.c_str()) != H3PS_OK) {
            std::fprintf(stderr, "bench: write failed: %s\n", h3ps_last_error());
            h3ps_report_free(report);
            return 3;
        }
        if (!quiet) std::printf("report written to %s\n", out_dir.c_str());
    }

    if (!quiet) {
        char* table = h3ps_report_table(report);
        if (table) {
            std::fputs(table, stdout);
            h3ps_string_free(table);
        }
    }

    const int failed = h3ps_report_failed_runs(report);
    h3ps_report_free(report);
    if (failed > max_failures) {
        std::fprintf(stderr, "bench: %d run(s) failed (threshold %d)\n", failed, max_failures);
        return 3;
    }
    return 0;
}

int report_command(const std::string& dir) {
    h3ps_report* report = nullptr;
    if (h3ps_report_load(dir.c_str(), &report) != H3PS_OK) {
        std::fprintf(stderr, "bench: %s\n", h3ps_last_error());
        return 2;
    }
    char* table = h3ps_report_table(report);
    if (table) {
        std::fputs(table, stdout);
        h3ps_string_free(table);
    }
    h3ps_report_free(report);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"publish-subscribe protocol benchmark (h3 vs mqtt over a conditioned link)"};
    app.require_subcommand(1);

    std::string scenario = "first_data";
    std::string protocol = "both";
    std::string mode = "virtual";
    std::string profile_path;
    std::string sizes;
    std::string out_dir = "bench-out";
    int reps = 10;
    int publishers = 5;
    double stagger_ms = 1000.0;
    double loss_val = 0.0;
    std::uint64_t seed_val = 0;
    bool no_subscriber = false;
    bool no_auth = false;
    bool quiet = false;
    int max_failures = 0;

    auto* run = app.add_subcommand("run", "run a scenario and write a report");
    run->add_option("--scenario", scenario,
                    "first_data | interleaved | overhead_sweep | resource")
        ->capture_default_str();
    run->add_option("--protocol", protocol, "h3 | mqtt | both")->capture_default_str();
    run->add_option("--mode", mode, "virtual | realtime")->capture_default_str();
    run->add_option("--profile", profile_path, "network profile JSON file");
    run->add_option("--sizes", sizes, "message sizes, e.g. 1k..10k or 512,1k,4k");
    run->add_option("--reps", reps, "repetitions (seed+i per rep)")->capture_default_str();
    run->add_option("--publishers", publishers, "publisher count (interleaved)")
        ->capture_default_str();
    run->add_option("--stagger-ms", stagger_ms, "publisher stagger (interleaved)")
        ->capture_default_str();
    auto* loss_opt = run->add_option("--loss", loss_val, "loss probability override");
    auto* seed_opt = run->add_option("--seed", seed_val, "base RNG seed override");
    run->add_option("--out", out_dir, "output directory")->capture_default_str();
    run->add_flag("--no-subscriber", no_subscriber, "skip the subscriber connection");
    run->add_flag("--no-auth", no_auth, "disable MQTT basic auth");
    run->add_flag("--quiet", quiet, "suppress the table on stdout");
    run->add_option("--max-failures", max_failures, "failed-run budget before exit code 3")
        ->capture_default_str();

    std::string report_dir;
    auto* rep = app.add_subcommand("report", "print the comparison table for a report dir");
    rep->add_option("dir", report_dir, "report directory")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    if (run->parsed()) {
        return run_command(scenario, protocol, mode, profile_path, sizes, out_dir, reps,
                           publishers, stagger_ms,
                           loss_opt->count() ? std::optional<double>(loss_val) : std::nullopt,
                           seed_opt->count() ? std::optional<std::uint64_t>(seed_val)
                                             : std::nullopt,
                           no_subscriber, no_auth, quiet, max_failures);
    }
    return report_command(report_dir);
}
