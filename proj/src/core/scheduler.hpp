#pragma once

#include <condition_variable>
#include <cstdint>
#include <functional>
#include <mutex>
#include <queue>
#include <unordered_set>
#include <vector>

#include "core/sim_time.hpp"

namespace h3ps {

/// Event scheduler interface shared by virtual-time and wall-clock execution.
/// Callbacks always run on the scheduler's driving context, one at a time.
class Scheduler {
public:
    using TimerId = std::uint64_t;

    virtual ~Scheduler() = default;

    virtual SimTime now() const = 0;
    virtual TimerId call_at(SimTime when, std::function<void()> fn) = 0;
    virtual void cancel(TimerId id) = 0;

    TimerId call_after(SimTime delay, std::function<void()> fn) {
        return call_at(now() + delay, std::move(fn));
    }
    TimerId post(std::function<void()> fn) { return call_at(now(), std::move(fn)); }
};

/// Deterministic discrete-event scheduler. Time advances only when events
/// run; ties break by insertion order. Single-threaded.
class VirtualScheduler final : public Scheduler {
public:
    SimTime now() const override { return now_; }

    TimerId call_at(SimTime when, std::function<void()> fn) override;
    void cancel(TimerId id) override;

    /// Runs the next pending event. Returns false when the queue is empty.
    bool step();

    /// Runs events until the queue drains or `deadline` would be passed.
    /// Returns the number of events executed.
    std::size_t run(SimTime deadline = INT64_MAX);

    std::size_t pending() const;

private:
    struct Entry {
        SimTime when;
        TimerId id;
        std::function<void()> fn;
        bool operator>(const Entry& o) const {
            return when != o.when ? when > o.when : id > o.id;
        }
    };

    SimTime now_ = 0;
    TimerId next_id_ = 1;
    std::priority_queue<Entry, std::vector<Entry>, std::greater<Entry>> queue_;
    std::unordered_set<TimerId> cancelled_;
};

/// Wall-clock scheduler with a thread-safe event queue. `run()` executes
/// events on the calling thread until `stop()`; other threads may post.
class RealtimeScheduler final : public Scheduler {
public:
    RealtimeScheduler();

    SimTime now() const override;

    TimerId call_at(SimTime when, std::function<void()> fn) override;
    void cancel(TimerId id) override;

    void run();
    void stop();

private:
    struct Entry {
        SimTime when;
        TimerId id;
        std::function<void()> fn;
        bool operator>(const Entry& o) const {
            return when != o.when ? when > o.when : id > o.id;
        }
    };

    SimTime epoch_;
    mutable std::mutex mu_;
    std::condition_variable cv_;
    TimerId next_id_ = 1;
    bool stopped_ = false;
    std::priority_queue<Entry, std::vector<Entry>, std::greater<Entry>> queue_;
    std::unordered_set<TimerId> cancelled_;
};

}  // namespace h3ps
