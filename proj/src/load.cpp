#include "lowpan/load.hpp"

namespace lowpan {

RouteCost extend_cost(RouteCost cost, LqiValue lqi, int weak_threshold)
{
    if (static_cast<int>(lqi.raw) < weak_threshold)
        ++cost.weak_links;
    ++cost.hops;
    return cost;
}

LoadProtocol::LoadProtocol(const std::vector<NodeState>& nodes, MacParams mac, LoadParams params)
    : ForwardingProtocol(nodes.size(), mac), params_(params), nodes_(nodes.size())
{
    if (params_.hello && !(params_.hello_period_s > 0.0))
        throw ConfigError("load: hello period must be positive");
}

void LoadProtocol::start(Network& net)
{
    if (!params_.hello)
        return;
    // stagger the hello phases across the period by node index
    const double n = static_cast<double>(net.size());
    for (NodeIndex i = 0; i < net.size(); ++i)
        net.set_timer(i, from_seconds(params_.hello_period_s * static_cast<double>(i) / n), kTimerHello, 0);
}

std::optional<LoadRouteEntry> LoadProtocol::route_to(NodeIndex node, const NodeAddress& dest) const
{
    const auto& routes = nodes_.at(node).routes;
    const auto it = routes.find(dest);
    if (it == routes.end())
        return std::nullopt;
    return it->second;
}

LoadRouteEntry* LoadProtocol::usable_route(NodeIndex self, const NodeAddress& dest, SimTime now)
{
    auto& routes = nodes_[self].routes;
    const auto it = routes.find(dest);
    if (it == routes.end() || !it->second.usable(now))
        return nullptr;
    return &it->second;
}

void LoadProtocol::offer_route(NodeIndex self, const NodeAddress& dest, const NodeAddress& next, RouteCost cost, SimTime now)
{
    auto& routes = nodes_[self].routes;
    auto it = routes.find(dest);
    const SimTime until = now + from_seconds(params_.route_lifetime_s);
    if (it == routes.end()) {
        routes.emplace(dest, LoadRouteEntry{dest, next, cost, until, true});
        return;
    }
    LoadRouteEntry& e = it->second;
    if (!e.usable(now) || cost < e.cost || e.next_hop == next)
        e = LoadRouteEntry{dest, next, cost, until, true};
}

void LoadProtocol::invalidate_via(NodeIndex self, const NodeAddress& next)
{
    for (auto& [dest, e] : nodes_[self].routes)
        if (e.next_hop == next)
            e.valid = false;
}

void LoadProtocol::originate(Network& net, NodeIndex source, DataPacket packet)
{
    Outbound ob;
    ob.packet = std::move(packet);
    forward(net, source, std::move(ob));
}

void LoadProtocol::relay(Network& net, NodeIndex self, Outbound ob)
{
    nodes_[self].upstream[ob.packet.mesh.orig.value] = ob.upstream;
    // data flowing along the reverse path keeps it alive for RERRs
    if (auto* back = usable_route(self, ob.packet.mesh.orig, net.now()))
        back->valid_until = net.now() + from_seconds(params_.route_lifetime_s);
    forward(net, self, std::move(ob));
}

void LoadProtocol::forward(Network& net, NodeIndex self, Outbound ob)
{
    const NodeAddress dest = ob.packet.mesh.final_dest;
    if (auto* r = usable_route(self, dest, net.now())) {
        if (auto next = net.index_of(r->next_hop)) {
            ob.next = *next;
            enqueue(net, self, std::move(ob));
            return;
        }
    }
    if (ob.upstream != kNoNode) {
        drop(net, self, ob.packet, Reason::NoRoute);
        send_rerr(net, self, dest, ob.packet.mesh.orig, ob.packet.seq);
        return;
    }
    NodeCtx& ctx = nodes_[self];
    ctx.pending.push_back(std::move(ob));
    if (!ctx.discovering)
        start_discovery(net, self, dest);
}

void LoadProtocol::start_discovery(Network& net, NodeIndex self, const NodeAddress& dest)
{
    NodeCtx& ctx = nodes_[self];
    const NodeState& me = net.node(self);
    const std::uint16_t id = ++ctx.next_rreq_id;

    RreqPacket rreq;
    rreq.dest_addr = dest;
    rreq.dest_loc = WireLocation{}; // LOAD does not use positions
    rreq.orig_addr = me.address;
    rreq.orig_loc = WireLocation::from(me.location);
    rreq.flags = AddressFlags::for_addresses(rreq.dest_addr, rreq.orig_addr);
    rreq.ext = RouteExt{id, 0, 0};
    ctx.rreqs[{me.address.value, id}] = RouteRequestEntry{me.address, id, RouteCost{}, kNoNode, net.now() + from_seconds(params_.discovery_lifetime_s)};

    const SendStatus st = net.broadcast(self, encode(rreq), TxInfo{TraceKind::Rreq, Reason::Rreq, me.address.value, id});
    if (st != SendStatus::Sent) {
        for (const auto& ob : ctx.pending)
            drop(net, self, ob.packet, Reason::Depleted);
        ctx.pending.clear();
        return;
    }
    ctx.discovering = true;
    net.set_timer(self, from_seconds(params_.discovery_lifetime_s), kTimerDiscovery, ++ctx.discovery_token);
}

void LoadProtocol::on_hop_done(Network& net, NodeIndex self, const Outbound& ob)
{
    if (auto* r = usable_route(self, ob.packet.mesh.final_dest, net.now()))
        if (r->next_hop == net.node(ob.next).address)
            r->valid_until = net.now() + from_seconds(params_.route_lifetime_s);
}

void LoadProtocol::on_hop_failed(Network& net, NodeIndex self, Outbound ob)
{
    invalidate_via(self, net.node(ob.next).address);
    const NodeAddress dest = ob.packet.mesh.final_dest;
    if (ob.upstream != kNoNode) {
        drop(net, self, ob.packet, Reason::NoRoute, ob.next);
        send_rerr(net, self, dest, ob.packet.mesh.orig, ob.packet.seq);
        return;
    }
    // the source retries each packet through one fresh discovery
    if (ob.rediscovered) {
        drop(net, self, ob.packet, Reason::NoRoute, ob.next);
        return;
    }
    ob.rediscovered = true;
    ob.next = kNoNode;
    NodeCtx& ctx = nodes_[self];
    ctx.pending.push_back(std::move(ob));
    if (!ctx.discovering)
        start_discovery(net, self, dest);
}

void LoadProtocol::send_rerr(Network& net, NodeIndex self, const NodeAddress& unreachable, const NodeAddress& orig, std::uint16_t seq)
{
    if (net.node(self).address == orig)
        return;
    // back along the hop the data came from; the RREQ reverse route may differ
    std::optional<NodeIndex> next;
    const auto& up = nodes_[self].upstream;
    if (const auto it = up.find(orig.value); it != up.end())
        next = it->second;
    else if (auto* back = usable_route(self, orig, net.now()))
        next = net.index_of(back->next_hop);
    if (!next)
        return;
    RerrPacket rerr;
    rerr.unreachable_addr = unreachable;
    rerr.orig_addr = orig;
    rerr.flags = AddressFlags::for_addresses(unreachable, orig);
    net.unicast(self, *next, encode(rerr), TxInfo{TraceKind::Rerr, Reason::Rerr, orig.value, seq});
}

void LoadProtocol::send_hello(Network& net, NodeIndex self)
{
    const NodeState& me = net.node(self);
    RrepPacket hello;
    hello.responder_addr = me.address;
    hello.responder_loc = WireLocation::from(me.location);
    hello.link_lqi = LqiValue{255};
    hello.orig_addr = me.address;
    hello.flags = AddressFlags::for_addresses(me.address, me.address);
    net.broadcast(self, encode(hello), TxInfo{TraceKind::Hello, Reason::Hello, me.address.value, 0});
}

void LoadProtocol::on_protocol_timer(Network& net, const TimerFire& timer)
{
    const NodeIndex self = timer.node;
    NodeCtx& ctx = nodes_[self];
    if (timer.timer_id == kTimerDiscovery) {
        if (!ctx.discovering || timer.token != ctx.discovery_token)
            return;
        ctx.discovering = false;
        for (const auto& ob : ctx.pending)
            drop(net, self, ob.packet, Reason::Timeout);
        ctx.pending.clear();
    } else if (timer.timer_id == kTimerHello) {
        if (!net.node(self).alive())
            return;
        send_hello(net, self);
        const SimTime silence = from_seconds(params_.hello_period_s * (params_.allowed_hello_loss + 1));
        for (auto& [dest, e] : ctx.routes) {
            if (!e.usable(net.now()))
                continue;
            const auto next = net.index_of(e.next_hop);
            if (!next)
                continue;
            const auto heard = ctx.last_heard.find(*next);
            if (heard != ctx.last_heard.end() && net.now() - heard->second > silence)
                e.valid = false;
        }
        net.set_timer(self, from_seconds(params_.hello_period_s), kTimerHello, 0);
    }
}

void LoadProtocol::on_frame(Network& net, const FrameDelivery& frame)
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
            if constexpr (std::is_same_v<T, RreqPacket>)
                on_rreq(net, frame, p);
            else if constexpr (std::is_same_v<T, RrepPacket>)
                on_rrep(net, frame, p);
            else if constexpr (std::is_same_v<T, RerrPacket>)
                on_rerr(net, frame, p);
            else if constexpr (std::is_same_v<T, DataPacket>)
                handle_data(net, frame, p);
            else if constexpr (std::is_same_v<T, AckPacket>)
                handle_ack(net, frame, p);
        },
        packet);
}

void LoadProtocol::on_rreq(Network& net, const FrameDelivery& frame, const RreqPacket& rreq)
{
    const NodeIndex self = frame.target;
    const NodeState& me = net.node(self);
    if (!rreq.ext || rreq.orig_addr == me.address)
        return;
    NodeCtx& ctx = nodes_[self];
    const RouteCost cost = extend_cost(RouteCost{rreq.ext->weak_links, rreq.ext->hops}, frame.lqi, params_.weak_threshold);
    const RreqKey key{rreq.orig_addr.value, rreq.ext->rreq_id};

    auto it = ctx.rreqs.find(key);
    if (it != ctx.rreqs.end() && it->second.expires > net.now() && !(cost < it->second.best_cost_seen))
        return;
    ctx.rreqs[key] = RouteRequestEntry{rreq.orig_addr, rreq.ext->rreq_id, cost, frame.sender, net.now() + from_seconds(params_.discovery_lifetime_s)};
    offer_route(self, rreq.orig_addr, net.node(frame.sender).address, cost, net.now());

    if (rreq.dest_addr == me.address) {
        RrepPacket rrep;
        rrep.responder_addr = me.address;
        rrep.responder_loc = WireLocation::from(me.location);
        rrep.link_lqi = frame.lqi;
        rrep.orig_addr = rreq.orig_addr;
        rrep.flags = AddressFlags::for_addresses(rrep.responder_addr, rrep.orig_addr);
        rrep.ext = RouteExt{rreq.ext->rreq_id, 0, 0};
        net.unicast(self, frame.sender, encode(rrep), TxInfo{TraceKind::Rrep, Reason::Rrep, rreq.orig_addr.value, rreq.ext->rreq_id});
        return;
    }
    RreqPacket fwd = rreq;
    fwd.ext = RouteExt{rreq.ext->rreq_id, static_cast<std::uint8_t>(std::min<std::uint32_t>(cost.weak_links, 255)),
                       static_cast<std::uint8_t>(std::min<std::uint32_t>(cost.hops, 255))};
    net.broadcast(self, encode(fwd), TxInfo{TraceKind::Rreq, Reason::Rreq, rreq.orig_addr.value, rreq.ext->rreq_id});
}

void LoadProtocol::on_rrep(Network& net, const FrameDelivery& frame, const RrepPacket& rrep)
{
    const NodeIndex self = frame.target;
    NodeCtx& ctx = nodes_[self];
    const NodeAddress sender = net.node(frame.sender).address;

    if (!rrep.ext) {
        // hello
        ctx.last_heard[frame.sender] = net.now();
        offer_route(self, sender, sender, extend_cost(RouteCost{}, frame.lqi, params_.weak_threshold), net.now());
        return;
    }

    const RouteCost cost = extend_cost(RouteCost{rrep.ext->weak_links, rrep.ext->hops}, frame.lqi, params_.weak_threshold);
    offer_route(self, rrep.responder_addr, sender, cost, net.now());

    if (rrep.orig_addr == net.node(self).address) {
        auto* r = usable_route(self, rrep.responder_addr, net.now());
        if (!r || !ctx.discovering)
            return;
        ctx.discovering = false;
        ++ctx.discovery_token;
        std::deque<Outbound> pending = std::move(ctx.pending);
        ctx.pending.clear();
        for (auto& ob : pending)
            forward(net, self, std::move(ob));
        return;
    }

    const auto it = ctx.rreqs.find({rrep.orig_addr.value, rrep.ext->rreq_id});
    if (it == ctx.rreqs.end() || it->second.reverse_hop == kNoNode) {
        LogRecord r;
        r.at = net.now();
        r.event = LogEvent::Drop;
        r.node = self;
        r.kind = TraceKind::Rrep;
        r.reason = Reason::NoRoute;
        r.orig = rrep.orig_addr.value;
        r.seq = rrep.ext->rreq_id;
        net.record(r);
        return;
    }
    RrepPacket fwd = rrep;
    fwd.ext = RouteExt{rrep.ext->rreq_id, static_cast<std::uint8_t>(std::min<std::uint32_t>(cost.weak_links, 255)),
                       static_cast<std::uint8_t>(std::min<std::uint32_t>(cost.hops, 255))};
    net.unicast(self, it->second.reverse_hop, encode(fwd), TxInfo{TraceKind::Rrep, Reason::RrepForward, rrep.orig_addr.value, rrep.ext->rreq_id});
}

void LoadProtocol::on_rerr(Network& net, const FrameDelivery& frame, const RerrPacket& rerr)
{
    const NodeIndex self = frame.target;
    const bool at_origin = rerr.orig_addr == net.node(self).address;
    auto& routes = nodes_[self].routes;
    const auto it = routes.find(rerr.unreachable_addr);
    if (it != routes.end() && (at_origin || it->second.next_hop == net.node(frame.sender).address))
        it->second.valid = false;
    if (!at_origin)
        send_rerr(net, self, rerr.unreachable_addr, rerr.orig_addr, frame.info.seq);
}

} // namespace lowpan
