#include "lowpan/sim.hpp"

#include <algorithm>

namespace lowpan {

namespace {

struct Later {
    bool operator()(const SimEvent& a, const SimEvent& b) const
    {
        if (a.at != b.at)
            return a.at > b.at;
        return a.seq > b.seq;
    }
};

} // namespace

std::uint64_t EventQueue::schedule(SimTime at, EventKind kind)
{
    if (at < now_)
        throw SchedulingError("schedule: event at " + std::to_string(at) + " ns precedes current time " + std::to_string(now_) + " ns");
    const std::uint64_t seq = next_seq_++;
    heap_.push_back(SimEvent{at, seq, std::move(kind)});
    std::push_heap(heap_.begin(), heap_.end(), Later{});
    return seq;
}

SimEvent EventQueue::pop()
{
    std::pop_heap(heap_.begin(), heap_.end(), Later{});
    SimEvent ev = std::move(heap_.back());
    heap_.pop_back();
    now_ = ev.at;
    return ev;
}

Network::Network(std::vector<NodeState> nodes, RadioModel radio, EnergyModel energy, std::uint64_t channel_seed, std::string protocol)
    : nodes_(std::move(nodes)), radio_(radio), energy_(energy), channel_(channel_seed), log_(std::move(protocol)), debits_(nodes_.size(), 0.0)
{
    if (!(radio_.bitrate_bps > 0.0))
        throw ConfigError("radio bitrate must be positive");
    if (!(radio_.radio_range_m > 0.0))
        throw ConfigError("radio range must be positive");
}

std::optional<NodeIndex> Network::index_of(const NodeAddress& addr) const
{
    // deployments assign short address == index; fall back to a scan otherwise
    if (!addr.is_extended() && addr.value < nodes_.size() && nodes_[addr.value].address == addr)
        return static_cast<NodeIndex>(addr.value);
    for (std::size_t i = 0; i < nodes_.size(); ++i)
        if (nodes_[i].address == addr)
            return static_cast<NodeIndex>(i);
    return std::nullopt;
}

double Network::distance(NodeIndex a, NodeIndex b) const
{
    return euclidean_distance(nodes_.at(a).location, nodes_.at(b).location);
}

bool Network::in_range(NodeIndex a, NodeIndex b) const
{
    return distance(a, b) <= radio_.radio_range_m;
}

double Network::airtime_seconds(std::size_t bytes) const
{
    return static_cast<double>(bytes) * 8.0 / radio_.bitrate_bps;
}

SimTime Network::airtime(std::size_t bytes) const
{
    return from_seconds(airtime_seconds(bytes));
}

double Network::debit(NodeIndex node, double joules)
{
    NodeState& n = nodes_[node];
    const double taken = std::min(joules, n.energy_j);
    n.energy_j -= taken;
    if (n.energy_j <= 0.0)
        n.energy_j = 0.0;
    debits_[node] += taken;
    return taken;
}

SendStatus Network::broadcast(NodeIndex sender, std::vector<std::uint8_t> bytes, const TxInfo& info)
{
    return transmit(sender, std::nullopt, std::move(bytes), info);
}

SendStatus Network::unicast(NodeIndex sender, NodeIndex target, std::vector<std::uint8_t> bytes, const TxInfo& info)
{
    if (target >= nodes_.size() || target == sender || !in_range(sender, target))
        return SendStatus::LinkBreak;
    return transmit(sender, target, std::move(bytes), info);
}

SendStatus Network::transmit(NodeIndex sender, std::optional<NodeIndex> target, std::vector<std::uint8_t> bytes, const TxInfo& info)
{
    const NodeState& s = nodes_.at(sender);
    const auto nbytes = static_cast<std::uint16_t>(bytes.size());
    if (!s.alive() || !s.awake) {
        ++send_failures_;
        LogRecord r;
        r.at = now();
        r.event = LogEvent::Drop;
        r.node = sender;
        r.kind = info.kind;
        r.bytes = nbytes;
        r.reason = s.alive() ? Reason::Asleep : Reason::Depleted;
        r.peer = target.value_or(kNoNode);
        r.orig = info.orig;
        r.seq = info.seq;
        log_.append(r);
        return SendStatus::Suppressed;
    }

    const double air_s = airtime_seconds(bytes.size());
    const SimTime arrive = now() + airtime(bytes.size()) + from_seconds(radio_.proc_delay_s);

    LogRecord tx;
    tx.at = now();
    tx.event = LogEvent::Tx;
    tx.node = sender;
    tx.kind = info.kind;
    tx.bytes = nbytes;
    tx.energy_j = debit(sender, energy_.tx_power_w * air_s);
    tx.reason = info.reason;
    tx.peer = target.value_or(kNoNode);
    tx.orig = info.orig;
    tx.seq = info.seq;
    log_.append(tx);

    const auto offer = [&](NodeIndex r) {
        const NodeState& rn = nodes_[r];
        if (!rn.awake || !rn.alive())
            return;
        const double d = euclidean_distance(s.location, rn.location);
        if (d > radio_.radio_range_m)
            return;
        if (channel_.bernoulli(radio_.loss_probability)) {
            if (target) {
                LogRecord drop;
                drop.at = now();
                drop.event = LogEvent::Drop;
                drop.node = r;
                drop.kind = info.kind;
                drop.bytes = nbytes;
                drop.reason = Reason::Loss;
                drop.peer = sender;
                drop.orig = info.orig;
                drop.seq = info.seq;
                log_.append(drop);
            }
            return;
        }
        const LqiValue lqi = link_lqi(d, radio_.radio_range_m, radio_.noise_amplitude, channel_);
        queue_.schedule(arrive, FrameDelivery{r, sender, bytes, lqi, info});
    };

    if (target) {
        offer(*target);
    } else {
        for (NodeIndex r = 0; r < nodes_.size(); ++r)
            if (r != sender)
                offer(r);
    }
    return SendStatus::Sent;
}

bool Network::deliverable(const FrameDelivery& frame)
{
    const NodeState& rn = nodes_[frame.target];
    if (rn.awake && rn.alive())
        return true;
    LogRecord drop;
    drop.at = now();
    drop.event = LogEvent::Drop;
    drop.node = frame.target;
    drop.kind = frame.info.kind;
    drop.bytes = static_cast<std::uint16_t>(frame.bytes.size());
    drop.reason = rn.alive() ? Reason::Asleep : Reason::Depleted;
    drop.peer = frame.sender;
    drop.orig = frame.info.orig;
    drop.seq = frame.info.seq;
    log_.append(drop);
    return false;
}

void Network::set_timer(NodeIndex node, SimTime delay, std::uint32_t timer_id, std::uint64_t token)
{
    queue_.schedule(now() + delay, TimerFire{node, timer_id, token});
}

void Network::schedule_traffic(NodeIndex source, SimTime at)
{
    queue_.schedule(at, TrafficTick{source});
}

void Network::set_awake(NodeIndex node, bool awake)
{
    nodes_.at(node).awake = awake;
}

void Network::run_until(SimTime end_time, Dispatcher& dispatcher)
{
    while (!queue_.empty() && queue_.top().at <= end_time) {
        SimEvent ev = queue_.pop();
        ++dispatched_;
        if (auto* frame = std::get_if<FrameDelivery>(&ev.kind)) {
            if (!deliverable(*frame))
                continue;
            LogRecord rx;
            rx.at = now();
            rx.event = LogEvent::Rx;
            rx.node = frame->target;
            rx.kind = frame->info.kind;
            rx.bytes = static_cast<std::uint16_t>(frame->bytes.size());
            rx.energy_j = debit(frame->target, energy_.rx_power_w * airtime_seconds(frame->bytes.size()));
            rx.reason = frame->info.reason;
            rx.peer = frame->sender;
            rx.orig = frame->info.orig;
            rx.seq = frame->info.seq;
            log_.append(rx);
            dispatcher.on_frame(*this, *frame);
        } else if (auto* timer = std::get_if<TimerFire>(&ev.kind)) {
            dispatcher.on_timer(*this, *timer);
        } else {
            dispatcher.on_traffic(*this, std::get<TrafficTick>(ev.kind));
        }
    }
}

} // namespace lowpan
