#pragma once

#include <functional>
#include <map>
#include <memory>
#include <vector>

#include "lowpan/scenario.hpp"

namespace testing {

using namespace lowpan;

inline NodeState node(std::uint16_t addr, NodeRole role, double x, double y, double energy = 1.0)
{
    NodeState n;
    n.address = NodeAddress::short_addr(addr);
    n.role = role;
    n.location = {x, y};
    n.energy_j = energy;
    return n;
}

/// Config for hand-built topologies: lossless, noiseless, one packet per second.
inline ScenarioConfig small_config(double duration_s = 10.0)
{
    ScenarioConfig cfg;
    cfg.terrain = {200.0, 200.0};
    cfg.radio.loss_probability = 0.0;
    cfg.radio.noise_amplitude = 0;
    cfg.duration_s = duration_s;
    cfg.traffic.rate_pps = 1.0;
    cfg.traffic.start_s = 1.0;
    cfg.traffic.stop_s = duration_s;
    return cfg;
}

inline std::size_t count(const PacketLog& log, LogEvent ev, TraceKind kind, int node = -1)
{
    std::size_t n = 0;
    for (const auto& r : log.records())
        if (r.event == ev && r.kind == kind && (node < 0 || r.node == static_cast<NodeIndex>(node)))
            ++n;
    return n;
}

inline std::size_t count_reason(const PacketLog& log, LogEvent ev, Reason reason)
{
    std::size_t n = 0;
    for (const auto& r : log.records())
        if (r.event == ev && r.reason == reason)
            ++n;
    return n;
}

/// Hop sequence of each delivered DATA packet, keyed (orig << 16) | seq,
/// from the originator to the sink. Walks back from the delivery through the
/// sender of each node's first copy, which is the copy it forwarded.
inline std::map<std::uint64_t, std::vector<NodeIndex>> delivered_paths(const PacketLog& log)
{
    std::map<std::pair<std::uint64_t, NodeIndex>, NodeIndex> first_from;
    std::map<std::uint64_t, NodeIndex> origin;
    std::map<std::uint64_t, std::vector<NodeIndex>> out;
    for (const auto& r : log.records()) {
        if (r.kind != TraceKind::Data)
            continue;
        const std::uint64_t key = (r.orig << 16) | r.seq;
        if (r.event == LogEvent::Generate) {
            origin[key] = r.node;
        } else if (r.event == LogEvent::Rx) {
            first_from.emplace(std::make_pair(key, r.node), r.peer);
        } else if (r.event == LogEvent::Deliver) {
            std::vector<NodeIndex> path{r.node};
            NodeIndex at = r.node;
            while (at != origin.at(key) && path.size() < 1000) {
                at = first_from.at({key, at});
                path.push_back(at);
            }
            out[key] = std::vector<NodeIndex>(path.rbegin(), path.rend());
        }
    }
    return out;
}

/// A run assembled by hand so a test can step time and intervene between events.
struct Harness : Dispatcher {
    ScenarioConfig cfg;
    std::unique_ptr<ForwardingProtocol> proto;
    Network net;
    TrafficGenerator traffic;
    std::function<void(Network&, const FrameDelivery&)> after_frame;

    Harness(ScenarioConfig c, const std::string& protocol, const std::vector<NodeState>& nodes, std::vector<NodeIndex> sources,
            std::uint64_t seed = 1)
        : cfg(std::move(c)), proto(make_protocol(protocol, nodes, cfg)),
          net(nodes, cfg.radio, cfg.energy, derive_seed(seed, streams::kChannel), protocol),
          traffic(plan(cfg, nodes, std::move(sources)), derive_seed(seed, streams::kTraffic))
    {
        proto->start(net);
        traffic.schedule_initial(net);
    }

    static TrafficPlan plan(const ScenarioConfig& cfg, const std::vector<NodeState>& nodes, std::vector<NodeIndex> sources)
    {
        TrafficPlan p;
        p.sources = std::move(sources);
        p.sink = nodes[0].address;
        p.rate_pps = cfg.traffic.rate_pps;
        p.payload_bytes = cfg.traffic.payload_bytes;
        p.start_s = cfg.traffic.start_s;
        p.stop_s = std::min(cfg.traffic.stop_s, cfg.duration_s);
        p.max_hops = cfg.mac.max_hops;
        return p;
    }

    void run(double until_s) { net.run_until(from_seconds(until_s), *this); }

    void on_frame(Network& n, const FrameDelivery& f) override
    {
        proto->on_frame(n, f);
        if (after_frame)
            after_frame(n, f);
    }
    void on_timer(Network& n, const TimerFire& t) override { proto->on_timer(n, t); }
    void on_traffic(Network& n, const TrafficTick& t) override { proto->originate(n, t.source, traffic.tick(n, t.source)); }
};

} // namespace testing
