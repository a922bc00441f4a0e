#include "core/resource_sampler.hpp"

#include <unistd.h>

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <optional>

namespace h3ps::bench {

namespace {

// utime + stime in clock ticks, fields 14 and 15 of /proc/self/stat.
std::optional<std::uint64_t> cpu_ticks() {
    FILE* f = std::fopen("/proc/self/stat", "r");
    if (!f) return std::nullopt;
    char buf[1024];
    const std::size_t n = std::fread(buf, 1, sizeof buf - 1, f);
    std::fclose(f);
    if (n == 0) return std::nullopt;
    buf[n] = '\0';
    // comm (field 2) may contain spaces; skip past the closing paren.
    const char* p = strrchr(buf, ')');
    if (!p) return std::nullopt;
    ++p;
    unsigned long long utime = 0, stime = 0;
    int field = 2;
    while (*p && field < 15) {
        while (*p == ' ') ++p;
        ++field;
        if (field == 14) {
            utime = strtoull(p, nullptr, 10);
        } else if (field == 15) {
            stime = strtoull(p, nullptr, 10);
        }
        while (*p && *p != ' ') ++p;
    }
    if (field < 15) return std::nullopt;
    return utime + stime;
}

SimTime steady_ns() {
    return std::chrono::duration_cast<std::chrono::nanoseconds>(
               std::chrono::steady_clock::now().time_since_epoch())
        .count();
}

}  // namespace

ResourceSampler::~ResourceSampler() {
    stop();
}

bool ResourceSampler::supported() {
    return cpu_ticks().has_value();
}

void ResourceSampler::start(SimTime period) {
    if (running_.exchange(true)) return;
    samples_.clear();
    thread_ = std::thread([this, period] { loop(period); });
}

std::vector<ResourceSample> ResourceSampler::stop() {
    if (running_.exchange(false) && thread_.joinable()) thread_.join();
    return samples_;
}

void ResourceSampler::loop(SimTime period) {
    const double tick_ns = 1e9 / static_cast<double>(sysconf(_SC_CLK_TCK));
    const SimTime t0 = steady_ns();
    auto ticks = cpu_ticks();
    if (!ticks) return;
    std::uint64_t last_ticks = *ticks;
    SimTime last_ts = t0;
    SimTime next = t0 + period;

    while (running_.load()) {
        std::this_thread::sleep_until(std::chrono::steady_clock::time_point(
            std::chrono::nanoseconds(next)));
        next += period;
        auto now_ticks = cpu_ticks();
        const SimTime now = steady_ns();
        if (!now_ticks) break;
        const double cpu_ns = static_cast<double>(*now_ticks - last_ticks) * tick_ns;
        const double wall_ns = static_cast<double>(now - last_ts);
        samples_.push_back({now - t0, wall_ns > 0 ? cpu_ns / wall_ns : 0.0});
        last_ticks = *now_ticks;
        last_ts = now;
    }
}

}  // namespace h3ps::bench
