#pragma once

#include <compare>
#include <deque>
#include <map>
#include <optional>
#include <utility>
#include <vector>

#include "lowpan/protocol.hpp"

namespace lowpan {

struct LoadParams {
    int weak_threshold = 64; // LQI below this counts as a weak link
    double route_lifetime_s = 30.0;
    double discovery_lifetime_s = 1.0;
    bool hello = false;
    double hello_period_s = 1.0;
    int allowed_hello_loss = 2;
};

/// Lexicographic: fewer weak links first, then fewer hops.
struct RouteCost {
    std::uint32_t weak_links = 0;
    std::uint32_t hops = 0;

    friend auto operator<=>(const RouteCost&, const RouteCost&) = default;
};

/// Cost after crossing one more link observed at `lqi`.
RouteCost extend_cost(RouteCost cost, LqiValue lqi, int weak_threshold);

struct LoadRouteEntry {
    NodeAddress dest;
    NodeAddress next_hop;
    RouteCost cost;
    SimTime valid_until = 0;
    bool valid = false;

    bool usable(SimTime now) const { return valid && now < valid_until; }
};

struct RouteRequestEntry {
    NodeAddress originator;
    std::uint16_t rreq_id = 0;
    RouteCost best_cost_seen;
    NodeIndex reverse_hop = kNoNode;
    SimTime expires = 0;
};

/// AODV-derived on-demand routing without sequence numbers or precursors.
///
/// Sources flood an RREQ; relays rebroadcast only copies whose accumulated
/// cost strictly improves on what they have seen for that request. Only the
/// destination replies, once per improvement, and the RREP retraces the
/// reverse path installing forward routes. Data hops use the shared ACK and
/// retry policy; an exhausted hop invalidates the route and sends an RERR to
/// the source, which rediscovers. Optional periodic hellos (RREP frames with
/// responder == originator, as in AODV) maintain one-hop liveness.
class LoadProtocol : public ForwardingProtocol {
public:
    LoadProtocol(const std::vector<NodeState>& nodes, MacParams mac, LoadParams params);

    std::string_view name() const override { return params_.hello ? "load+hello" : "load"; }
    void start(Network& net) override;
    void originate(Network& net, NodeIndex source, DataPacket packet) override;
    void on_frame(Network& net, const FrameDelivery& frame) override;

    const LoadParams& params() const { return params_; }
    std::optional<LoadRouteEntry> route_to(NodeIndex node, const NodeAddress& dest) const;
    bool discovering(NodeIndex node) const { return nodes_.at(node).discovering; }

protected:
    void relay(Network& net, NodeIndex self, Outbound ob) override;
    void on_hop_failed(Network& net, NodeIndex self, Outbound ob) override;
    void on_hop_done(Network& net, NodeIndex self, const Outbound& ob) override;
    void on_protocol_timer(Network& net, const TimerFire& timer) override;

private:
    static constexpr std::uint32_t kTimerDiscovery = 20;
    static constexpr std::uint32_t kTimerHello = 21;

    using RreqKey = std::pair<std::uint64_t, std::uint16_t>;

    struct NodeCtx {
        std::map<NodeAddress, LoadRouteEntry> routes;
        std::map<RreqKey, RouteRequestEntry> rreqs;
        std::deque<Outbound> pending;
        bool discovering = false;
        std::uint64_t discovery_token = 0;
        std::uint16_t next_rreq_id = 0;
        std::map<NodeIndex, SimTime> last_heard;
        std::map<std::uint64_t, NodeIndex> upstream; // originator -> last data hop, carries RERRs back
    };

    LoadRouteEntry* usable_route(NodeIndex self, const NodeAddress& dest, SimTime now);
    /// Installs unless a usable entry with a strictly better or equal cost via another hop exists.
    void offer_route(NodeIndex self, const NodeAddress& dest, const NodeAddress& next, RouteCost cost, SimTime now);
    void invalidate_via(NodeIndex self, const NodeAddress& next);
    void forward(Network& net, NodeIndex self, Outbound ob);
    void start_discovery(Network& net, NodeIndex self, const NodeAddress& dest);
    void send_rerr(Network& net, NodeIndex self, const NodeAddress& unreachable, const NodeAddress& orig, std::uint16_t seq);
    void send_hello(Network& net, NodeIndex self);

    void on_rreq(Network& net, const FrameDelivery& frame, const RreqPacket& rreq);
    void on_rrep(Network& net, const FrameDelivery& frame, const RrepPacket& rrep);
    void on_rerr(Network& net, const FrameDelivery& frame, const RerrPacket& rerr);

    LoadParams params_;
    std::vector<NodeCtx> nodes_;
};

} // namespace lowpan
