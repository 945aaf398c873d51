#include "lowpan/protocol.hpp"

#include <cmath>

namespace lowpan {

TrafficGenerator::TrafficGenerator(TrafficPlan plan, std::uint64_t traffic_seed)
    : plan_(std::move(plan)), next_seq_(plan_.sources.size(), 0)
{
    if (plan_.payload_bytes > kMaxPayload)
        throw ConfigError("traffic payload exceeds 81 bytes");
    if (!(plan_.rate_pps > 0.0))
        throw ConfigError("traffic rate must be positive");
    Rng rng(traffic_seed);
    const double period = 1.0 / plan_.rate_pps;
    for (std::size_t i = 0; i < plan_.sources.size(); ++i)
        first_tick_.push_back(from_seconds(plan_.start_s + rng.uniform01() * period));
    payload_.resize(plan_.payload_bytes);
    for (auto& b : payload_)
        b = static_cast<std::uint8_t>(rng.next());
}

void TrafficGenerator::schedule_initial(Network& net)
{
    const SimTime stop = from_seconds(plan_.stop_s);
    for (std::size_t i = 0; i < plan_.sources.size(); ++i)
        if (first_tick_[i] < stop)
            net.schedule_traffic(plan_.sources[i], first_tick_[i]);
}

DataPacket TrafficGenerator::tick(Network& net, NodeIndex source)
{
    std::size_t slot = 0;
    while (slot < plan_.sources.size() && plan_.sources[slot] != source)
        ++slot;
    if (slot == plan_.sources.size())
        throw std::logic_error("traffic tick for a node that is not a source");

    DataPacket p;
    p.mesh.orig = net.node(source).address;
    p.mesh.final_dest = plan_.sink;
    p.mesh.hops_left = plan_.max_hops;
    p.flags = AddressFlags::for_addresses(p.mesh.final_dest, p.mesh.orig);
    p.seq = next_seq_[slot]++;
    p.payload = payload_;

    LogRecord r;
    r.at = net.now();
    r.event = LogEvent::Generate;
    r.node = source;
    r.kind = TraceKind::Data;
    r.bytes = static_cast<std::uint16_t>(p.payload.size());
    r.reason = Reason::Generate;
    r.orig = p.mesh.orig.value;
    r.seq = p.seq;
    net.record(r);

    // tick times derive from the sequence number, so no drift accumulates
    const SimTime period = from_seconds(1.0 / plan_.rate_pps);
    const SimTime next = first_tick_[slot] + period * static_cast<SimTime>(p.seq + 1);
    if (next < from_seconds(plan_.stop_s))
        net.schedule_traffic(source, next);
    return p;
}

void RunDispatcher::on_traffic(Network& net, const TrafficTick& tick)
{
    protocol_.originate(net, tick.source, traffic_.tick(net, tick.source));
}

ForwardingProtocol::ForwardingProtocol(std::size_t node_count, MacParams mac) : mac_(mac), links_(node_count)
{
    if (mac_.max_retries < 1)
        throw ConfigError("max_retries must be at least 1");
}

void ForwardingProtocol::enqueue(Network& net, NodeIndex self, Outbound ob)
{
    if (!net.node(self).alive()) {
        drop(net, self, ob.packet, Reason::Depleted);
        return;
    }
    ob.attempts = 0;
    links_[self].queue.push_back(std::move(ob));
    pump(net, self);
}

bool ForwardingProtocol::busy(NodeIndex self) const
{
    return links_[self].inflight.has_value() || !links_[self].queue.empty();
}

void ForwardingProtocol::pump(Network& net, NodeIndex self)
{
    LinkState& ls = links_[self];
    if (ls.inflight || ls.queue.empty())
        return;
    ls.inflight = std::move(ls.queue.front());
    ls.queue.pop_front();
    attempt(net, self);
}

void ForwardingProtocol::attempt(Network& net, NodeIndex self)
{
    LinkState& ls = links_[self];
    Outbound& ob = *ls.inflight;
    if (!net.node(self).alive()) {
        drop(net, self, ob.packet, Reason::Depleted);
        ls.inflight.reset();
        while (!ls.queue.empty()) {
            drop(net, self, ls.queue.front().packet, Reason::Depleted);
            ls.queue.pop_front();
        }
        return;
    }
    // a node with traffic to send is awake
    net.set_awake(self, true);

    const Reason reason = ob.attempts == 0 ? (ob.upstream == kNoNode ? Reason::Select : Reason::Forward) : Reason::Retry;
    ++ob.attempts;
    TxInfo info{TraceKind::Data, reason, ob.packet.mesh.orig.value, ob.packet.seq};
    const SendStatus st = net.unicast(self, ob.next, encode(ob.packet), info);
    if (st == SendStatus::LinkBreak) {
        ob.attempts = mac_.max_retries;
        fail_inflight(net, self);
        return;
    }
    net.set_timer(self, from_seconds(mac_.ack_timeout_s), kTimerAck, ++ls.token);
}

void ForwardingProtocol::fail_inflight(Network& net, NodeIndex self)
{
    LinkState& ls = links_[self];
    Outbound ob = std::move(*ls.inflight);
    ls.inflight.reset();
    ++ls.token;
    on_hop_failed(net, self, std::move(ob));
    pump(net, self);
}

void ForwardingProtocol::on_timer(Network& net, const TimerFire& timer)
{
    if (timer.timer_id != kTimerAck) {
        on_protocol_timer(net, timer);
        return;
    }
    LinkState& ls = links_[timer.node];
    if (!ls.inflight || timer.token != ls.token)
        return;
    if (ls.inflight->attempts < mac_.max_retries)
        attempt(net, timer.node);
    else
        fail_inflight(net, timer.node);
}

void ForwardingProtocol::handle_ack(Network& net, const FrameDelivery& frame, const AckPacket& ack)
{
    LinkState& ls = links_[frame.target];
    if (!ls.inflight || ls.inflight->next != frame.sender || ls.inflight->packet.seq != ack.seq)
        return;
    Outbound done = std::move(*ls.inflight);
    ls.inflight.reset();
    ++ls.token;
    on_hop_done(net, frame.target, done);
    pump(net, frame.target);
}

void ForwardingProtocol::handle_data(Network& net, const FrameDelivery& frame, const DataPacket& data)
{
    const NodeIndex self = frame.target;
    AckPacket ack;
    ack.seq = data.seq;
    net.unicast(self, frame.sender, encode(ack), TxInfo{TraceKind::Ack, Reason::Ack, data.mesh.orig.value, data.seq});

    LinkState& ls = links_[self];
    if (!ls.seen.insert(packet_key(data)).second)
        return;

    DataPacket p = data;
    const bool at_sink = net.node(self).address == p.mesh.final_dest;
    if (p.mesh.hops_left == 0) {
        drop(net, self, p, Reason::Ttl, frame.sender);
        return;
    }
    --p.mesh.hops_left;
    if (at_sink) {
        LogRecord r;
        r.at = net.now();
        r.event = LogEvent::Deliver;
        r.node = self;
        r.kind = TraceKind::Data;
        r.bytes = static_cast<std::uint16_t>(p.payload.size());
        r.reason = Reason::Deliver;
        r.peer = frame.sender;
        r.orig = p.mesh.orig.value;
        r.seq = p.seq;
        r.hops = static_cast<std::uint8_t>(mac_.max_hops - p.mesh.hops_left);
        net.record(r);
        return;
    }
    if (p.mesh.hops_left == 0) {
        drop(net, self, p, Reason::Ttl, frame.sender);
        return;
    }
    Outbound ob;
    ob.packet = std::move(p);
    ob.upstream = frame.sender;
    relay(net, self, std::move(ob));
}

void ForwardingProtocol::drop(Network& net, NodeIndex self, const DataPacket& packet, Reason reason, NodeIndex peer)
{
    LogRecord r;
    r.at = net.now();
    r.event = LogEvent::Drop;
    r.node = self;
    r.kind = TraceKind::Data;
    r.bytes = static_cast<std::uint16_t>(packet.payload.size());
    r.reason = reason;
    r.peer = peer;
    r.orig = packet.mesh.orig.value;
    r.seq = packet.seq;
    net.record(r);
}

} // namespace lowpan
