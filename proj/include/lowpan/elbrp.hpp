#pragma once

#include <deque>
#include <map>
#include <optional>
#include <span>
#include <vector>

#include "lowpan/protocol.hpp"

namespace lowpan {

struct ElbrpParams {
    double collect_window_s = 0.1;
    double sleep_window_s = 0.5;
    double staleness_s = 5.0;
};

/// What every node knows about the sink after the ER announcement, plus the
/// most recent route-request originator it heard.
struct RoutingTableEntry {
    NodeAddress er_address;
    Location er_location;
    std::optional<NodeAddress> source_address;
    std::optional<Location> source_location;
};

struct NeighborTableEntry {
    NodeAddress ler_address;
    Location ler_location;
    LqiValue lqi;
    SimTime learned_at = 0;
};

/// LER replies collected during discovery; one entry per address, newest wins.
class NeighborTable {
public:
    void upsert(const NeighborTableEntry& e) { entries_[e.ler_address] = e; }
    bool erase(const NodeAddress& addr) { return entries_.erase(addr) > 0; }
    /// Entries learned no earlier than now - staleness, ordered by address.
    std::vector<NeighborTableEntry> fresh(SimTime now, SimTime staleness) const;
    const std::map<NodeAddress, NeighborTableEntry>& entries() const { return entries_; }
    std::size_t size() const { return entries_.size(); }

private:
    std::map<NodeAddress, NeighborTableEntry> entries_;
};

struct SelectionContext {
    Location self;
    NodeAddress er_address;
    Location er_location;
    double radio_range = 0.0;
    SimTime now = 0;
    SimTime staleness = 0;
};

struct NextHop {
    NodeAddress address;
    double metric = 0.0;
    bool direct_to_er = false;
};

/// Picks the forwarding neighbor with the largest progress-times-LQI weight.
///
/// The ER wins outright when it is within radio range. Otherwise only fresh
/// entries that make strictly positive progress toward the ER compete; equal
/// weights go to the lowest address. nullopt means a local void.
std::optional<NextHop> select_next_hop(const SelectionContext& ctx, const NeighborTable& table, std::span<const NodeAddress> excluded = {});

/// Location-based routing toward a single edge router.
///
/// The ER floods its position once at start. A node holding data and no
/// fresh forward candidate broadcasts a one-hop RREQ; only LERs (and the ER)
/// answer with a unicast RREP carrying the LQI they observed, while idle RFDs
/// that overhear the request sleep for sleep_window. When the collect window
/// closes, select_next_hop() picks the relay. A failed hop falls back to the
/// next best neighbor, then to one re-discovery, then to a drop with an RERR
/// back along the data path.
class ElbrpProtocol : public ForwardingProtocol {
public:
    ElbrpProtocol(const std::vector<NodeState>& nodes, MacParams mac, ElbrpParams params);

    std::string_view name() const override { return "elbrp"; }
    void start(Network& net) override;
    void originate(Network& net, NodeIndex source, DataPacket packet) override;
    void on_frame(Network& net, const FrameDelivery& frame) override;

    const ElbrpParams& params() const { return params_; }
    const std::optional<RoutingTableEntry>& routing_table(NodeIndex n) const { return nodes_.at(n).routing; }
    const NeighborTable& neighbor_table(NodeIndex n) const { return nodes_.at(n).neighbors; }
    bool discovery_active(NodeIndex n) const { return nodes_.at(n).discovery.has_value(); }

protected:
    void relay(Network& net, NodeIndex self, Outbound ob) override;
    void on_hop_failed(Network& net, NodeIndex self, Outbound ob) override;
    void on_protocol_timer(Network& net, const TimerFire& timer) override;

private:
    static constexpr std::uint32_t kTimerDiscovery = 10;
    static constexpr std::uint32_t kTimerWake = 11;

    struct Discovery {
        SimTime collect_deadline = 0;
        std::deque<Outbound> pending;
        std::uint64_t token = 0;
    };

    struct NodeCtx {
        std::optional<RoutingTableEntry> routing;
        NeighborTable neighbors;
        std::optional<Discovery> discovery;
        std::map<std::uint64_t, NodeIndex> upstream; // originator -> previous hop
        std::uint64_t discovery_token = 0;
        std::uint64_t sleep_token = 0;
    };

    void route(Network& net, NodeIndex self, Outbound ob);
    std::optional<NextHop> choose(const Network& net, NodeIndex self, const Outbound& ob) const;
    void send_to(Network& net, NodeIndex self, Outbound ob, const NextHop& hop);
    void start_discovery(Network& net, NodeIndex self, std::deque<Outbound> pending);
    void finish_discovery(Network& net, NodeIndex self);
    void give_up(Network& net, NodeIndex self, const Outbound& ob);

    void on_beacon(Network& net, const FrameDelivery& frame, const ErBeaconPacket& beacon);
    void on_rreq(Network& net, const FrameDelivery& frame, const RreqPacket& rreq);
    void on_rrep(Network& net, const FrameDelivery& frame, const RrepPacket& rrep);
    void on_rerr(Network& net, const FrameDelivery& frame, const RerrPacket& rerr);

    ElbrpParams params_;
    std::vector<NodeCtx> nodes_;
    std::vector<NodeRole> roles_;
    NodeIndex er_ = kNoNode;
};

} // namespace lowpan
