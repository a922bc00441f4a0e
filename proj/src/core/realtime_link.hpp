#pragma once

#include <condition_variable>
#include <deque>
#include <memory>
#include <mutex>
#include <thread>

#include "core/netsim.hpp"
#include "core/scheduler.hpp"

namespace h3ps::net {

/// Wall-clock counterpart of VirtualLink: shapes real UDP datagrams on a
/// loopback socket pair with the same egress rules (seeded drop at entry,
/// serialization at the configured rate, rtt/2 hold) so both protocol stacks
/// are conditioned identically. Drop decisions use the same per-direction
/// seeded draw as virtual mode, so the delivered/dropped sequence matches for
/// the same send schedule; only timestamps pick up scheduling jitter.
///
/// Receive callbacks are posted to the RealtimeScheduler, so protocol code
/// runs single-threaded exactly as it does under the virtual clock.
class RealtimeLink {
public:
    RealtimeLink(const NetworkProfile& profile, RealtimeScheduler& sched,
                 std::uint32_t flow_id = 0);
    ~RealtimeLink();

    RealtimeLink(const RealtimeLink&) = delete;
    RealtimeLink& operator=(const RealtimeLink&) = delete;

    DatagramPipe& a();
    DatagramPipe& b();

    Trace snapshot_trace() const;
    std::uint32_t flow_id() const { return flow_; }

private:
    class Endpoint;
    friend class Endpoint;

    void record(TraceEvent ev);
    std::size_t record_pending(TraceEvent ev);
    void mark_delivered(std::size_t slot, SimTime at);

    NetworkProfile profile_;
    RealtimeScheduler& sched_;
    std::uint32_t flow_;
    mutable std::mutex trace_mu_;
    Trace trace_;
    std::unique_ptr<Endpoint> a_;
    std::unique_ptr<Endpoint> b_;
};

}  // namespace h3ps::net
