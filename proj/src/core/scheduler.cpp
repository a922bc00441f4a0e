#include "core/scheduler.hpp"

#include <chrono>

namespace h3ps {

Scheduler::TimerId VirtualScheduler::call_at(SimTime when, std::function<void()> fn) {
    if (when < now_) when = now_;
    const TimerId id = next_id_++;
    queue_.push(Entry{when, id, std::move(fn)});
    return id;
}

void VirtualScheduler::cancel(TimerId id) {
    cancelled_.insert(id);
}

bool VirtualScheduler::step() {
    while (!queue_.empty()) {
        Entry e = queue_.top();
        queue_.pop();
        if (auto it = cancelled_.find(e.id); it != cancelled_.end()) {
            cancelled_.erase(it);
            continue;
        }
        now_ = e.when;
        e.fn();
        return true;
    }
    return false;
}

std::size_t VirtualScheduler::run(SimTime deadline) {
    std::size_t executed = 0;
    while (!queue_.empty()) {
        if (queue_.top().when > deadline) break;
        if (step()) ++executed;
    }
    return executed;
}

std::size_t VirtualScheduler::pending() const {
    return queue_.size() - cancelled_.size();
}

namespace {
SimTime steady_ns() {
    return std::chrono::duration_cast<std::chrono::nanoseconds>(
               std::chrono::steady_clock::now().time_since_epoch())
        .count();
}
}  // namespace

RealtimeScheduler::RealtimeScheduler() : epoch_(steady_ns()) {}

SimTime RealtimeScheduler::now() const {
    return steady_ns() - epoch_;
}

Scheduler::TimerId RealtimeScheduler::call_at(SimTime when, std::function<void()> fn) {
    std::lock_guard lock(mu_);
    const TimerId id = next_id_++;
    queue_.push(Entry{when, id, std::move(fn)});
    cv_.notify_all();
    return id;
}

void RealtimeScheduler::cancel(TimerId id) {
    std::lock_guard lock(mu_);
    cancelled_.insert(id);
}

void RealtimeScheduler::run() {
    std::unique_lock lock(mu_);
    stopped_ = false;
    while (!stopped_) {
        if (queue_.empty()) {
            cv_.wait(lock, [&] { return stopped_ || !queue_.empty(); });
            continue;
        }
        const SimTime due = queue_.top().when;
        const SimTime current = now();
        if (due > current) {
            cv_.wait_for(lock, std::chrono::nanoseconds(due - current));
            continue;
        }
        Entry e = queue_.top();
        queue_.pop();
        if (auto it = cancelled_.find(e.id); it != cancelled_.end()) {
            cancelled_.erase(it);
            continue;
        }
        lock.unlock();
        e.fn();
        lock.lock();
    }
}

void RealtimeScheduler::stop() {
    std::lock_guard lock(mu_);
    stopped_ = true;
    cv_.notify_all();
}

}  // namespace h3ps
