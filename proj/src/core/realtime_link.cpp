#include "core/realtime_link.hpp"

#include <arpa/inet.h>
#include <netinet/in.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cstring>
#include <stdexcept>
#include <vector>

namespace h3ps::net {

namespace {
int make_udp_socket(sockaddr_in& bound) {
    int fd = ::socket(AF_INET, SOCK_DGRAM, 0);
    if (fd < 0) throw std::runtime_error("socket() failed");
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
    addr.sin_port = 0;
    if (::bind(fd, reinterpret_cast<sockaddr*>(&addr), sizeof addr) != 0) {
        ::close(fd);
        throw std::runtime_error("bind() failed");
    }
    socklen_t len = sizeof bound;
    ::getsockname(fd, reinterpret_cast<sockaddr*>(&bound), &len);
    return fd;
}
}  // namespace

class RealtimeLink::Endpoint final : public DatagramPipe {
public:
    Endpoint(RealtimeLink& link, Direction dir, double rate_bps)
        : link_(link),
          dir_(dir),
          rate_bps_(rate_bps),
          rng_(detail::direction_seed(link.profile_.seed, dir)) {
        fd_ = make_udp_socket(self_addr_);
    }

    ~Endpoint() override { stop(); }

    void start(const sockaddr_in& peer_addr, Endpoint* peer) {
        peer_addr_ = peer_addr;
        peer_ = peer;
        shaper_ = std::thread([this] { shaper_loop(); });
        rx_ = std::thread([this] { rx_loop(); });
    }

    void stop() {
        {
            std::lock_guard lock(mu_);
            if (stopping_) return;
            stopping_ = true;
            cv_.notify_all();
        }
        ::shutdown(fd_, SHUT_RDWR);
        if (shaper_.joinable()) shaper_.join();
        if (rx_.joinable()) rx_.join();
        ::close(fd_);
    }

    Result<Unit, SendError> send(std::span<const std::uint8_t> payload,
                                 const DgramMeta& meta) override {
        if (payload.size() > mtu()) return SendError::oversized;
        std::lock_guard lock(mu_);
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
            link_.record(std::move(ev));
            return Unit{};
        }

        const SimTime start = std::max(now, free_at_);
        const SimTime done = start + detail::serialization_ns(payload.size(), rate_bps_);
        free_at_ = done;
        const SimTime release_at = done + link_.profile_.one_way_delay();

        const std::size_t trace_slot = link_.record_pending(std::move(ev));
        queue_.push_back(Pending{release_at, trace_slot,
                                 std::vector<std::uint8_t>(payload.begin(), payload.end())});
        cv_.notify_all();
        return Unit{};
    }

    void set_receiver(Receiver fn) override {
        std::lock_guard lock(mu_);
        receiver_ = std::move(fn);
    }

    const sockaddr_in& self_addr() const { return self_addr_; }

private:
    struct Pending {
        SimTime release_at;
        std::size_t trace_slot;
        std::vector<std::uint8_t> bytes;
    };

    // Holds each datagram until its computed arrival time, then pushes it
    // through the real socket (the loopback hop itself is ~instant).
    void shaper_loop() {
        std::unique_lock lock(mu_);
        while (!stopping_) {
            if (queue_.empty()) {
                cv_.wait(lock, [&] { return stopping_ || !queue_.empty(); });
                continue;
            }
            const SimTime due = queue_.front().release_at;
            const SimTime now = link_.sched_.now();
            if (due > now) {
                cv_.wait_for(lock, std::chrono::nanoseconds(due - now));
                continue;
            }
            Pending p = std::move(queue_.front());
            queue_.pop_front();
            lock.unlock();
            link_.mark_delivered(p.trace_slot, link_.sched_.now());
            ::sendto(fd_, p.bytes.data(), p.bytes.size(), 0,
                     reinterpret_cast<const sockaddr*>(&peer_addr_), sizeof peer_addr_);
            lock.lock();
        }
    }

    void rx_loop() {
        std::vector<std::uint8_t> buf(kMaxDatagram + 64);
        for (;;) {
            const ssize_t n = ::recv(fd_, buf.data(), buf.size(), 0);
            {
                std::lock_guard lock(mu_);
                if (stopping_) return;
            }
            if (n < 0) return;
            if (n == 0) continue;
            std::vector<std::uint8_t> dgram(buf.begin(), buf.begin() + n);
            // Hand off to the scheduler thread; protocol code is not
            // thread-safe by design.
            link_.sched_.post([this, dgram = std::move(dgram)] {
                Receiver r;
                {
                    std::lock_guard lock(mu_);
                    r = receiver_;
                }
                if (r) r(dgram);
            });
        }
    }

    RealtimeLink& link_;
    Direction dir_;
    double rate_bps_;
    detail::UniformRng rng_;
    SimTime free_at_ = 0;
    int fd_ = -1;
    sockaddr_in self_addr_{};
    sockaddr_in peer_addr_{};
    Endpoint* peer_ = nullptr;
    std::mutex mu_;
    std::condition_variable cv_;
    std::deque<Pending> queue_;
    bool stopping_ = false;
    std::thread shaper_;
    std::thread rx_;
    Receiver receiver_;

    friend class RealtimeLink;
};

RealtimeLink::RealtimeLink(const NetworkProfile& profile, RealtimeScheduler& sched,
                           std::uint32_t flow_id)
    : profile_(profile), sched_(sched), flow_(flow_id) {
    a_ = std::make_unique<Endpoint>(*this, Direction::up, profile_.uplink_bps);
    b_ = std::make_unique<Endpoint>(*this, Direction::down, profile_.downlink_bps);
    a_->start(b_->self_addr(), b_.get());
    b_->start(a_->self_addr(), a_.get());
}

RealtimeLink::~RealtimeLink() {
    a_->stop();
    b_->stop();
}

DatagramPipe& RealtimeLink::a() {
    return *a_;
}

DatagramPipe& RealtimeLink::b() {
    return *b_;
}

Trace RealtimeLink::snapshot_trace() const {
    std::lock_guard lock(trace_mu_);
    return trace_;
}

void RealtimeLink::record(TraceEvent ev) {
    std::lock_guard lock(trace_mu_);
    trace_.events.push_back(std::move(ev));
}

std::size_t RealtimeLink::record_pending(TraceEvent ev) {
    std::lock_guard lock(trace_mu_);
    ev.disposition = Disposition::delivered;
    trace_.events.push_back(std::move(ev));
    return trace_.events.size() - 1;
}

void RealtimeLink::mark_delivered(std::size_t slot, SimTime at) {
    std::lock_guard lock(trace_mu_);
    trace_.events[slot].delivered_ts = at;
}

}  // namespace h3ps::net
