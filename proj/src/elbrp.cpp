#include "lowpan/elbrp.hpp"

#include <algorithm>

namespace lowpan {

std::vector<NeighborTableEntry> NeighborTable::fresh(SimTime now, SimTime staleness) const
{
    std::vector<NeighborTableEntry> out;
    for (const auto& [addr, e] : entries_)
        if (now - e.learned_at <= staleness)
            out.push_back(e);
    return out;
}

std::optional<NextHop> select_next_hop(const SelectionContext& ctx, const NeighborTable& table, std::span<const NodeAddress> excluded)
{
    const auto is_excluded = [&](const NodeAddress& a) { return std::find(excluded.begin(), excluded.end(), a) != excluded.end(); };

    if (euclidean_distance(ctx.self, ctx.er_location) <= ctx.radio_range && !is_excluded(ctx.er_address))
        return NextHop{ctx.er_address, 1.0, true};

    std::optional<NextHop> best;
    // fresh() is ordered by address, so a strict '>' keeps the lowest address on ties
    for (const auto& e : table.fresh(ctx.now, ctx.staleness)) {
        if (is_excluded(e.ler_address))
            continue;
        const double progress = progress_toward(ctx.self, e.ler_location, ctx.er_location);
        if (!(progress > 0.0))
            continue;
        const double metric = route_metric(progress, ctx.radio_range, e.lqi);
        if (!best || metric > best->metric)
            best = NextHop{e.ler_address, metric, false};
    }
    return best;
}

ElbrpProtocol::ElbrpProtocol(const std::vector<NodeState>& nodes, MacParams mac, ElbrpParams params)
    : ForwardingProtocol(nodes.size(), mac), params_(params), nodes_(nodes.size())
{
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        roles_.push_back(nodes[i].role);
        if (nodes[i].role == NodeRole::EdgeRouter) {
            if (er_ != kNoNode)
                throw ConfigError("elbrp: more than one edge router");
            er_ = static_cast<NodeIndex>(i);
        }
    }
    if (er_ == kNoNode)
        throw ConfigError("elbrp: no edge router");
}

void ElbrpProtocol::start(Network& net)
{
    const NodeState& er = net.node(er_);
    nodes_[er_].routing = RoutingTableEntry{er.address, WireLocation::from(er.location).to_location(), {}, {}};
    ErBeaconPacket beacon;
    beacon.flags = AddressFlags{er.address.is_extended(), false, 0};
    beacon.er_addr = er.address;
    beacon.er_loc = WireLocation::from(er.location);
    net.broadcast(er_, encode(beacon), TxInfo{TraceKind::ErBeacon, Reason::Beacon, er.address.value, 0});
}

void ElbrpProtocol::originate(Network& net, NodeIndex source, DataPacket packet)
{
    // sensing an event wakes a sleeping node
    ++nodes_[source].sleep_token;
    net.set_awake(source, true);
    Outbound ob;
    ob.packet = std::move(packet);
    route(net, source, std::move(ob));
}

void ElbrpProtocol::relay(Network& net, NodeIndex self, Outbound ob)
{
    nodes_[self].upstream[ob.packet.mesh.orig.value] = ob.upstream;
    route(net, self, std::move(ob));
}

std::optional<NextHop> ElbrpProtocol::choose(const Network& net, NodeIndex self, const Outbound& ob) const
{
    const NodeCtx& ctx = nodes_[self];
    SelectionContext sel;
    sel.self = WireLocation::from(net.node(self).location).to_location();
    sel.er_address = ctx.routing->er_address;
    sel.er_location = ctx.routing->er_location;
    sel.radio_range = net.radio().radio_range_m;
    sel.now = net.now();
    sel.staleness = from_seconds(params_.staleness_s);
    std::vector<NodeAddress> excluded;
    for (NodeIndex n : ob.excluded)
        excluded.push_back(net.node(n).address);
    // the direct-to-ER shortcut uses the true geometry: the radio is unit-disk
    if (net.in_range(self, er_) && std::find(ob.excluded.begin(), ob.excluded.end(), er_) == ob.excluded.end())
        return NextHop{ctx.routing->er_address, 1.0, true};
    // out of true range, so keep the rounded wire position from re-admitting the ER
    excluded.push_back(sel.er_address);
    return select_next_hop(sel, ctx.neighbors, excluded);
}

void ElbrpProtocol::send_to(Network& net, NodeIndex self, Outbound ob, const NextHop& hop)
{
    const auto next = net.index_of(hop.address);
    if (!next) {
        give_up(net, self, ob);
        return;
    }
    ob.next = *next;
    enqueue(net, self, std::move(ob));
}

void ElbrpProtocol::route(Network& net, NodeIndex self, Outbound ob)
{
    NodeCtx& ctx = nodes_[self];
    if (!ctx.routing) {
        drop(net, self, ob.packet, Reason::NoRoute);
        return;
    }
    if (ctx.discovery) {
        ctx.discovery->pending.push_back(std::move(ob));
        return;
    }
    if (auto hop = choose(net, self, ob)) {
        send_to(net, self, std::move(ob), *hop);
        return;
    }
    std::deque<Outbound> pending;
    pending.push_back(std::move(ob));
    start_discovery(net, self, std::move(pending));
}

void ElbrpProtocol::start_discovery(Network& net, NodeIndex self, std::deque<Outbound> pending)
{
    NodeCtx& ctx = nodes_[self];
    const NodeState& me = net.node(self);
    net.set_awake(self, true);

    RreqPacket rreq;
    rreq.dest_addr = ctx.routing->er_address;
    rreq.dest_loc = WireLocation::from(ctx.routing->er_location);
    rreq.orig_addr = me.address;
    rreq.orig_loc = WireLocation::from(me.location);
    rreq.flags = AddressFlags::for_addresses(rreq.dest_addr, rreq.orig_addr);
    const SendStatus st = net.broadcast(self, encode(rreq), TxInfo{TraceKind::Rreq, Reason::Rreq, me.address.value, 0});
    if (st != SendStatus::Sent) {
        for (const auto& ob : pending)
            drop(net, self, ob.packet, Reason::Depleted);
        return;
    }
    Discovery d;
    d.collect_deadline = net.now() + from_seconds(params_.collect_window_s);
    d.pending = std::move(pending);
    d.token = ++ctx.discovery_token;
    ctx.discovery = std::move(d);
    net.set_timer(self, from_seconds(params_.collect_window_s), kTimerDiscovery, ctx.discovery_token);
}

void ElbrpProtocol::finish_discovery(Network& net, NodeIndex self)
{
    NodeCtx& ctx = nodes_[self];
    std::deque<Outbound> pending = std::move(ctx.discovery->pending);
    ctx.discovery.reset();

    std::deque<Outbound> again;
    for (auto& ob : pending) {
        if (auto hop = choose(net, self, ob)) {
            send_to(net, self, std::move(ob), *hop);
        } else if (!ob.rediscovered) {
            ob.rediscovered = true;
            again.push_back(std::move(ob));
        } else {
            give_up(net, self, ob);
        }
    }
    if (!again.empty())
        start_discovery(net, self, std::move(again));
}

void ElbrpProtocol::on_hop_failed(Network& net, NodeIndex self, Outbound ob)
{
    NodeCtx& ctx = nodes_[self];
    const NodeIndex failed = ob.next;
    ctx.neighbors.erase(net.node(failed).address);
    ob.excluded.push_back(failed);
    ob.next = kNoNode;

    if (auto hop = choose(net, self, ob)) {
        send_to(net, self, std::move(ob), *hop);
        return;
    }
    if (ob.rediscovered) {
        give_up(net, self, ob);
        return;
    }
    ob.rediscovered = true;
    if (ctx.discovery) {
        ctx.discovery->pending.push_back(std::move(ob));
        return;
    }
    std::deque<Outbound> pending;
    pending.push_back(std::move(ob));
    start_discovery(net, self, std::move(pending));
}

void ElbrpProtocol::give_up(Network& net, NodeIndex self, const Outbound& ob)
{
    drop(net, self, ob.packet, Reason::Void);
    if (ob.upstream == kNoNode)
        return;
    RerrPacket rerr;
    rerr.unreachable_addr = ob.packet.mesh.final_dest;
    rerr.orig_addr = ob.packet.mesh.orig;
    rerr.flags = AddressFlags::for_addresses(rerr.unreachable_addr, rerr.orig_addr);
    net.unicast(self, ob.upstream, encode(rerr), TxInfo{TraceKind::Rerr, Reason::Rerr, rerr.orig_addr.value, ob.packet.seq});
}

void ElbrpProtocol::on_protocol_timer(Network& net, const TimerFire& timer)
{
    NodeCtx& ctx = nodes_[timer.node];
    if (timer.timer_id == kTimerDiscovery) {
        if (ctx.discovery && ctx.discovery->token == timer.token)
            finish_discovery(net, timer.node);
    } else if (timer.timer_id == kTimerWake) {
        if (timer.token == ctx.sleep_token)
            net.set_awake(timer.node, true);
    }
}

void ElbrpProtocol::on_frame(Network& net, const FrameDelivery& frame)
{
    Packet packet;
    try {
        packet = decode(frame.bytes);
    } catch (const CodecError&) {
        return;
    }
    std::visit(
        [&](const auto& p) {
            using T = std::decay_t<decltype(p)>;
            if constexpr (std::is_same_v<T, ErBeaconPacket>)
                on_beacon(net, frame, p);
            else if constexpr (std::is_same_v<T, RreqPacket>)
                on_rreq(net, frame, p);
            else if constexpr (std::is_same_v<T, RrepPacket>)
                on_rrep(net, frame, p);
            else if constexpr (std::is_same_v<T, RerrPacket>)
                on_rerr(net, frame, p);
            else if constexpr (std::is_same_v<T, DataPacket>)
                handle_data(net, frame, p);
            else
                handle_ack(net, frame, p);
        },
        packet);
}

void ElbrpProtocol::on_beacon(Network& net, const FrameDelivery& frame, const ErBeaconPacket& beacon)
{
    NodeCtx& ctx = nodes_[frame.target];
    if (ctx.routing)
        return;
    ctx.routing = RoutingTableEntry{beacon.er_addr, beacon.er_loc.to_location(), {}, {}};
    net.broadcast(frame.target, encode(beacon), TxInfo{TraceKind::ErBeacon, Reason::Beacon, beacon.er_addr.value, 0});
}

void ElbrpProtocol::on_rreq(Network& net, const FrameDelivery& frame, const RreqPacket& rreq)
{
    const NodeIndex self = frame.target;
    NodeCtx& ctx = nodes_[self];
    // every request names the ER, so it also teaches a node that missed the beacon
    if (!ctx.routing)
        ctx.routing = RoutingTableEntry{rreq.dest_addr, rreq.dest_loc.to_location(), {}, {}};
    ctx.routing->source_address = rreq.orig_addr;
    ctx.routing->source_location = rreq.orig_loc.to_location();

    if (roles_[self] == NodeRole::ReducedFunctionDevice) {
        // only idle RFDs sleep; one with its own discovery or data in flight stays up
        if (!busy(self) && !ctx.discovery) {
            net.set_awake(self, false);
            net.set_timer(self, from_seconds(params_.sleep_window_s), kTimerWake, ++ctx.sleep_token);
        }
        return;
    }

    const NodeState& me = net.node(self);
    RrepPacket rrep;
    rrep.responder_addr = me.address;
    rrep.responder_loc = WireLocation::from(me.location);
    rrep.link_lqi = frame.lqi;
    rrep.orig_addr = rreq.orig_addr;
    rrep.flags = AddressFlags::for_addresses(rrep.responder_addr, rrep.orig_addr);
    net.unicast(self, frame.sender, encode(rrep), TxInfo{TraceKind::Rrep, Reason::Rrep, rreq.orig_addr.value, 0});
}

void ElbrpProtocol::on_rrep(Network& net, const FrameDelivery& frame, const RrepPacket& rrep)
{
    const NodeIndex self = frame.target;
    if (rrep.orig_addr != net.node(self).address || rrep.responder_addr == net.node(self).address)
        return;
    nodes_[self].neighbors.upsert(NeighborTableEntry{rrep.responder_addr, rrep.responder_loc.to_location(), rrep.link_lqi, net.now()});
}

void ElbrpProtocol::on_rerr(Network& net, const FrameDelivery& frame, const RerrPacket& rerr)
{
    const NodeIndex self = frame.target;
    NodeCtx& ctx = nodes_[self];
    ctx.neighbors.erase(net.node(frame.sender).address);
    if (rerr.orig_addr == net.node(self).address)
        return;
    const auto up = ctx.upstream.find(rerr.orig_addr.value);
    if (up == ctx.upstream.end() || up->second == kNoNode)
        return;
    net.unicast(self, up->second, encode(rerr), TxInfo{TraceKind::Rerr, Reason::Rerr, rerr.orig_addr.value, frame.info.seq});
}

} // namespace lowpan
