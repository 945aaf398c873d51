#pragma once

#include <cstdint>
#include <deque>
#include <optional>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "lowpan/packet.hpp"
#include "lowpan/sim.hpp"

namespace lowpan {

/// Hop-level delivery constants shared by every protocol so that
/// comparisons isolate the routing policy.
struct MacParams {
    double ack_timeout_s = 0.05;
    int max_retries = 3; // transmission attempts per next hop
    std::uint8_t max_hops = 16;
};

/// A routing protocol instance covering every node of one run.
class Protocol {
public:
    virtual ~Protocol() = default;
    virtual std::string_view name() const = 0;
    virtual void start(Network& net) = 0;
    /// A freshly generated application packet at `source`.
    virtual void originate(Network& net, NodeIndex source, DataPacket packet) = 0;
    virtual void on_frame(Network& net, const FrameDelivery& frame) = 0;
    virtual void on_timer(Network& net, const TimerFire& timer) = 0;
};

struct TrafficPlan {
    std::vector<NodeIndex> sources;
    NodeAddress sink;
    double rate_pps = 5.0;
    std::size_t payload_bytes = 81;
    double start_s = 1.0;
    double stop_s = 500.0;
    std::uint8_t max_hops = 16;
};

/// Constant-bit-rate sources. Each source starts at start_s plus a phase
/// drawn from the traffic stream, so the schedule is independent of the
/// protocol under test.
class TrafficGenerator {
public:
    TrafficGenerator(TrafficPlan plan, std::uint64_t traffic_seed);

    void schedule_initial(Network& net);
    /// Builds the next packet for `source`, logs its generation and schedules the following tick.
    DataPacket tick(Network& net, NodeIndex source);

    const TrafficPlan& plan() const { return plan_; }

private:
    TrafficPlan plan_;
    std::vector<SimTime> first_tick_;
    std::vector<std::uint16_t> next_seq_;
    std::vector<std::uint8_t> payload_;
};

/// Glues a protocol and a traffic generator into one dispatcher.
class RunDispatcher : public Dispatcher {
public:
    RunDispatcher(Protocol& protocol, TrafficGenerator& traffic) : protocol_(protocol), traffic_(traffic) {}

    void on_frame(Network& net, const FrameDelivery& frame) override { protocol_.on_frame(net, frame); }
    void on_timer(Network& net, const TimerFire& timer) override { protocol_.on_timer(net, timer); }
    void on_traffic(Network& net, const TrafficTick& tick) override;

private:
    Protocol& protocol_;
    TrafficGenerator& traffic_;
};

/// A data packet waiting at, or being sent by, one node.
struct Outbound {
    DataPacket packet;
    NodeIndex next = kNoNode;
    NodeIndex upstream = kNoNode; // previous hop, kNoNode at the originator
    bool rediscovered = false;
    std::vector<NodeIndex> excluded; // next hops that already failed for this packet
    int attempts = 0;
};

/// Stop-and-wait DATA/ACK forwarding shared by ELBRP and LOAD.
///
/// Each node sends one DATA frame at a time and waits ack_timeout for the
/// ACK, retrying up to max_retries attempts before calling on_hop_failed().
/// Receivers always ACK, drop duplicates by (originator, seq), decrement
/// hops_left and either deliver (at the sink) or call relay().
class ForwardingProtocol : public Protocol {
public:
    ForwardingProtocol(std::size_t node_count, MacParams mac);

    void on_timer(Network& net, const TimerFire& timer) override;

    const MacParams& mac() const { return mac_; }

protected:
    static constexpr std::uint32_t kTimerAck = 1;

    virtual void relay(Network& net, NodeIndex self, Outbound ob) = 0;
    virtual void on_hop_failed(Network& net, NodeIndex self, Outbound ob) = 0;
    virtual void on_hop_done(Network&, NodeIndex, const Outbound&) {}
    virtual void on_protocol_timer(Network& net, const TimerFire& timer) = 0;

    /// Queues ob for transmission to ob.next.
    void enqueue(Network& net, NodeIndex self, Outbound ob);
    void handle_data(Network& net, const FrameDelivery& frame, const DataPacket& data);
    void handle_ack(Network& net, const FrameDelivery& frame, const AckPacket& ack);
    /// True while the node has a frame in flight or queued.
    bool busy(NodeIndex self) const;
    void drop(Network& net, NodeIndex self, const DataPacket& packet, Reason reason, NodeIndex peer = kNoNode);

    static std::uint64_t packet_key(const DataPacket& p) { return (p.mesh.orig.value << 16) | p.seq; }

private:
    struct LinkState {
        std::deque<Outbound> queue;
        std::optional<Outbound> inflight;
        std::uint64_t token = 0;
        std::unordered_set<std::uint64_t> seen;
    };

    void pump(Network& net, NodeIndex self);
    void attempt(Network& net, NodeIndex self);
    void fail_inflight(Network& net, NodeIndex self);

    MacParams mac_;
    std::vector<LinkState> links_;
};

} // namespace lowpan
