#include "core/netsim.hpp"

#include <cmath>
#include <sstream>

namespace h3ps::net {

Result<Unit, ProfileError> NetworkProfile::validate() const {
    if (!(downlink_bps > 0) || !(uplink_bps > 0)) return ProfileError::bad_rate;
    if (!(loss_probability >= 0.0 && loss_probability <= 1.0)) return ProfileError::bad_loss;
    if (rtt < 0) return ProfileError::bad_rtt;
    return Unit{};
}

CaptureStats capture_stats(const Trace& trace) {
    CaptureStats s;
    for (const TraceEvent& ev : trace.events) {
        if (ev.disposition == Disposition::dropped) {
            ++s.dropped;
            continue;
        }
        if (ev.dir == Direction::up) {
            s.up_bytes += ev.size_bytes;
            ++s.up_packets;
        } else {
            s.down_bytes += ev.size_bytes;
            ++s.down_packets;
        }
    }
    return s;
}

const char* to_string(Direction d) {
    return d == Direction::up ? "up" : "down";
}

const char* to_string(Disposition d) {
    return d == Disposition::delivered ? "delivered" : "dropped";
}

std::string trace_to_csv(const Trace& trace) {
    std::ostringstream out;
    out << "ts_us,direction,size_bytes,disposition,flow\n";
    for (const TraceEvent& ev : trace.events) {
        out << ev.ts / kMicrosecond << ',' << to_string(ev.dir) << ',' << ev.size_bytes << ','
            << to_string(ev.disposition) << ',' << ev.flow << '\n';
    }
    return out.str();
}

namespace detail {

std::uint64_t direction_seed(std::uint64_t base, Direction dir) {
    return base ^ (dir == Direction::up ? 0x55aa55aa55aa55aaull : 0xaa55aa55aa55aa55ull);
}

SimTime serialization_ns(std::size_t bytes, double rate_bps) {
    if (std::isinf(rate_bps)) return 0;
    const double bits = static_cast<double>(bytes) * 8.0;
    return static_cast<SimTime>(std::llround(bits * 1e9 / rate_bps));
}

}  // namespace detail

class VirtualLink::Endpoint final : public DatagramPipe {
public:
    Endpoint(VirtualLink& link, Direction dir, double rate_bps)
        : link_(link),
          dir_(dir),
          rate_bps_(rate_bps),
          rng_(detail::direction_seed(link.profile_.seed, dir)) {}

    Result<Unit, SendError> send(std::span<const std::uint8_t> payload,
                                 const DgramMeta& meta) override {
        if (payload.size() > mtu()) return SendError::oversized;
        const SimTime now = link_.sched_.now();

        TraceEvent ev;
        ev.ts = now;
        ev.dir = dir_;
        ev.size_bytes = static_cast<std::uint32_t>(payload.size());
        ev.flow = link_.flow_;
        ev.kind = meta.kind;
        ev.app_data = meta.app_data;
        ev.payload.assign(payload.begin(), payload.end());

        if (rng_.next() < link_.profile_.loss_probability) {
            ev.disposition = Disposition::dropped;
            ev.delivered_ts = -1;
            ++counters_.dropped;
            link_.trace_.events.push_back(std::move(ev));
            return Unit{};
        }

        const SimTime start = std::max(now, free_at_);
        const SimTime done = start + detail::serialization_ns(payload.size(), rate_bps_);
        free_at_ = done;
        const SimTime deliver_at = done + link_.profile_.one_way_delay();

        ev.disposition = Disposition::delivered;
        ev.delivered_ts = deliver_at;
        counters_.bytes += payload.size();
        ++counters_.packets;
        link_.trace_.events.push_back(ev);

        Endpoint* peer = peer_;
        std::weak_ptr<Unit> alive = link_.alive_;
        std::vector<std::uint8_t> bytes(payload.begin(), payload.end());
        link_.sched_.call_at(deliver_at, [peer, alive, bytes = std::move(bytes)]() {
            if (alive.expired()) return;  // link torn down with datagrams in flight
            if (peer->receiver_) peer->receiver_(bytes);
        });
        return Unit{};
    }

    void set_receiver(Receiver fn) override { receiver_ = std::move(fn); }

    const EndpointCounters& counters() const { return counters_; }

    Endpoint* peer_ = nullptr;

private:
    VirtualLink& link_;
    Direction dir_;
    double rate_bps_;
    detail::UniformRng rng_;
    SimTime free_at_ = 0;
    EndpointCounters counters_;
    Receiver receiver_;
};

VirtualLink::VirtualLink(const NetworkProfile& profile, Scheduler& sched, std::uint32_t flow_id)
    : profile_(profile), sched_(sched), flow_(flow_id), alive_(std::make_shared<Unit>()) {
    a_ = std::make_unique<Endpoint>(*this, Direction::up, profile_.uplink_bps);
    b_ = std::make_unique<Endpoint>(*this, Direction::down, profile_.downlink_bps);
    a_->peer_ = b_.get();
    b_->peer_ = a_.get();
}

VirtualLink::~VirtualLink() = default;

DatagramPipe& VirtualLink::a() {
    return *a_;
}

DatagramPipe& VirtualLink::b() {
    return *b_;
}

EndpointCounters VirtualLink::counters(Direction dir) const {
    return dir == Direction::up ? a_->counters() : b_->counters();
}

}  // namespace h3ps::net
