#include <doctest.h>

#include <atomic>
#include <thread>

#include "core/bench.hpp"
#include "core/netsim.hpp"
#include "core/realtime_link.hpp"
#include "core/resource_sampler.hpp"

using namespace h3ps;
using namespace h3ps::net;

namespace {

NetworkProfile quick_profile(double loss = 0.0, std::uint64_t seed = 4) {
    NetworkProfile p;
    p.uplink_bps = 20e6;
    p.downlink_bps = 20e6;
    p.rtt = 60 * kMillisecond;
    p.loss_probability = loss;
    p.seed = seed;
    return p;
}

}  // namespace

TEST_CASE("realtime scheduler runs posted and timed events in order") {
    RealtimeScheduler sched;
    std::vector<int> order;
    sched.call_after(20 * kMillisecond, [&] { order.push_back(2); });
    sched.call_after(5 * kMillisecond, [&] { order.push_back(1); });
    sched.call_after(40 * kMillisecond, [&] {
        order.push_back(3);
        sched.stop();
    });
    sched.run();
    CHECK(order == std::vector<int>{1, 2, 3});
}

TEST_CASE("realtime link shapes loopback datagrams with the configured floor") {
    RealtimeScheduler sched;
    RealtimeLink link(quick_profile(), sched, 1);

    std::atomic<int> received{0};
    link.b().set_receiver([&](std::span<const std::uint8_t>) {
        if (++received == 20) sched.stop();
    });
    sched.call_at(0, [&] {
        for (int i = 0; i < 20; ++i) link.a().send(std::vector<std::uint8_t>(200, 1), {});
    });
    sched.call_after(5 * kSecond, [&] { sched.stop(); });  // watchdog
    sched.run();

    CHECK(received.load() == 20);
    auto trace = link.snapshot_trace();
    REQUIRE(trace.events.size() == 20);
    for (const auto& ev : trace.events) {
        CHECK(ev.disposition == Disposition::delivered);
        CHECK(ev.delivered_ts - ev.ts >= quick_profile().one_way_delay());
    }
}

TEST_CASE("drop decisions match virtual mode for the same seed and schedule") {
    const auto profile = quick_profile(0.3, 1234);
    const int n = 200;

    std::vector<Disposition> virt;
    {
        VirtualScheduler sched;
        VirtualLink link(profile, sched, 1);
        for (int i = 0; i < n; ++i) link.a().send(std::vector<std::uint8_t>(100, 0), {});
        sched.run();
        for (const auto& ev : link.trace().events) virt.push_back(ev.disposition);
    }

    std::vector<Disposition> real;
    {
        RealtimeScheduler sched;
        RealtimeLink link(profile, sched, 1);
        sched.call_at(0, [&] {
            for (int i = 0; i < n; ++i) link.a().send(std::vector<std::uint8_t>(100, 0), {});
            sched.stop();
        });
        sched.run();
        auto trace = link.snapshot_trace();
        for (const auto& ev : trace.events) real.push_back(ev.disposition);
    }

    CHECK(virt == real);
}

TEST_CASE("resource sampler tracks a busy loop and honours the cadence") {
    if (!bench::ResourceSampler::supported()) {
        MESSAGE("process accounting unavailable; skipping");
        return;
    }
    bench::ResourceSampler sampler;
    sampler.start(100 * kMillisecond);
    std::atomic<bool> spin{true};
    std::thread burner([&] {
        volatile std::uint64_t x = 0;
        while (spin.load()) x = x + 1;
    });
    std::this_thread::sleep_for(std::chrono::milliseconds(650));
    spin.store(false);
    burner.join();
    auto samples = sampler.stop();

    // duration / period, give or take one sample
    CHECK(samples.size() >= 5);
    CHECK(samples.size() <= 7);
    double peak = 0;
    for (const auto& s : samples) peak = std::max(peak, s.cpu_fraction);
    CHECK(peak > 0.5);  // the burner thread alone should near a full core
}

TEST_CASE("resource scenario samples cpu while a realtime workload runs") {
    if (!bench::ResourceSampler::supported()) {
        MESSAGE("process accounting unavailable; skipping");
        return;
    }
    bench::ScenarioConfig cfg;
    cfg.scenario = bench::ScenarioKind::resource;
    cfg.protocol = bench::ProtocolChoice::mqtt;
    cfg.mode = bench::RunMode::realtime;
    cfg.profile = quick_profile();
    cfg.loss_explicit = true;
    cfg.publisher_count = 2;
    cfg.stagger = 100 * kMillisecond;
    cfg.repetitions = 1;
    cfg.sample_period = 50 * kMillisecond;
    cfg.realtime_timeout = 20 * kSecond;

    auto r = bench::run_scenario(cfg);
    REQUIRE(r.ok());
    for (const auto& run : r.value().runs) {
        CAPTURE(run.connection);
        CAPTURE(run.error);
        CHECK(!run.failed);
    }
    REQUIRE(r.value().resources.size() == 1);
    CHECK(r.value().resources[0].protocol == "mqtt");
    CHECK(!r.value().resources[0].samples.empty());
}

TEST_CASE("realtime interleaved scenario completes end to end") {
    bench::ScenarioConfig cfg;
    cfg.scenario = bench::ScenarioKind::interleaved;
    cfg.protocol = bench::ProtocolChoice::h3;
    cfg.mode = bench::RunMode::realtime;
    cfg.profile = quick_profile();
    cfg.loss_explicit = true;  // keep the quick profile's zero loss
    cfg.publisher_count = 2;
    cfg.stagger = 50 * kMillisecond;
    cfg.repetitions = 1;
    cfg.realtime_timeout = 20 * kSecond;

    auto r = bench::run_scenario(cfg);
    REQUIRE(r.ok());
    REQUIRE(r.value().runs.size() == 3);  // 2 pubs + sub
    for (const auto& run : r.value().runs) {
        CAPTURE(run.connection);
        CAPTURE(run.error);
        CHECK(!run.failed);
    }
}
