#pragma once

#include <atomic>
#include <thread>
#include <vector>

#include "core/sim_time.hpp"

namespace h3ps::bench {

struct ResourceSample {
    SimTime ts = 0;           // since sampling started
    double cpu_fraction = 0;  // cpu-time delta / wall-time delta
};

/// Periodically samples this process's CPU utilization from /proc, the way a
/// `ps` poll would. Wall clock only; virtual-time runs have no meaningful CPU
/// story to tell.
class ResourceSampler {
public:
    ~ResourceSampler();

    static bool supported();

    void start(SimTime period = 100 * kMillisecond);
    std::vector<ResourceSample> stop();

private:
    void loop(SimTime period);

    std::thread thread_;
    std::atomic<bool> running_{false};
    std::vector<ResourceSample> samples_;
};

}  // namespace h3ps::bench
