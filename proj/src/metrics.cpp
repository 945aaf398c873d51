#include "lowpan/metrics.hpp"

#include <cmath>
#include <cstdio>
#include <map>
#include <ostream>
#include <stdexcept>

namespace lowpan {

namespace {

std::uint64_t key(const LogRecord& r) { return (r.orig << 16) | r.seq; }

std::string fmt(double v)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string fmt(const std::optional<double>& v) { return v ? fmt(*v) : std::string("NA"); }

struct Stat {
    double mean = 0.0;
    double stddev = 0.0;
    std::size_t n = 0;
};

Stat stat(const std::vector<double>& xs)
{
    Stat s;
    s.n = xs.size();
    if (xs.empty())
        return s;
    double sum = 0.0;
    for (double x : xs)
        sum += x;
    s.mean = sum / static_cast<double>(xs.size());
    if (xs.size() > 1) {
        double ss = 0.0;
        for (double x : xs)
            ss += (x - s.mean) * (x - s.mean);
        s.stddev = std::sqrt(ss / static_cast<double>(xs.size() - 1));
    }
    return s;
}

nlohmann::json to_json(const Stat& s)
{
    if (s.n == 0)
        return {{"mean", nullptr}, {"std", nullptr}, {"n", 0}};
    return {{"mean", s.mean}, {"std", s.stddev}, {"n", s.n}};
}

} // namespace

PdrResult compute_pdr(const PacketLog& log)
{
    PdrResult r;
    for (const auto& rec : log.records()) {
        if (rec.event == LogEvent::Generate)
            ++r.sent;
        else if (rec.event == LogEvent::Deliver)
            ++r.delivered;
    }
    if (r.sent > 0)
        r.pdr = static_cast<double>(r.delivered) / static_cast<double>(r.sent);
    return r;
}

DelayHops compute_delay_and_hops(const PacketLog& log)
{
    std::map<std::uint64_t, SimTime> born;
    double delay_sum = 0.0;
    double hop_sum = 0.0;
    std::uint64_t n = 0;
    for (const auto& rec : log.records()) {
        if (rec.event == LogEvent::Generate) {
            born.emplace(key(rec), rec.at);
        } else if (rec.event == LogEvent::Deliver) {
            const auto it = born.find(key(rec));
            if (it == born.end())
                throw std::logic_error("delivery without a matching generation");
            delay_sum += to_seconds(rec.at - it->second);
            hop_sum += rec.hops;
            ++n;
        }
    }
    DelayHops out;
    if (n > 0) {
        out.avg_delay_s = delay_sum / static_cast<double>(n);
        out.avg_hops = hop_sum / static_cast<double>(n);
    }
    return out;
}

bool is_control(TraceKind kind, OverheadPolicy policy)
{
    switch (kind) {
    case TraceKind::Rreq:
    case TraceKind::Rrep: return true;
    case TraceKind::Rerr: return policy.count_rerr;
    case TraceKind::ErBeacon: return policy.count_beacon;
    case TraceKind::Hello: return policy.count_hello;
    case TraceKind::Data:
    case TraceKind::Ack: return false;
    }
    return false;
}

OverheadThroughputEnergy compute_overhead_throughput_energy(const PacketLog& log, double duration_s, const std::vector<double>& initial_energy_j,
                                                            const std::vector<NodeState>& final_nodes, OverheadPolicy policy)
{
    if (!(duration_s > 0.0))
        throw std::invalid_argument("duration must be positive");
    if (initial_energy_j.size() != final_nodes.size())
        throw std::invalid_argument("initial and final node counts differ");

    OverheadThroughputEnergy out;
    std::uint64_t payload_bytes = 0;
    for (const auto& rec : log.records()) {
        if (rec.event == LogEvent::Tx && is_control(rec.kind, policy))
            ++out.control;
        else if (rec.event == LogEvent::Deliver)
            payload_bytes += rec.bytes;
    }
    out.throughput_bps = static_cast<double>(payload_bytes) * 8.0 / duration_s;
    for (std::size_t i = 0; i < final_nodes.size(); ++i)
        out.energy_j += initial_energy_j[i] - final_nodes[i].energy_j;
    return out;
}

RunMetrics compute_metrics(const PacketLog& log, std::uint64_t seed, double duration_s, const std::vector<double>& initial_energy_j,
                           const std::vector<NodeState>& final_nodes, OverheadPolicy policy)
{
    RunMetrics m;
    m.protocol = log.protocol();
    m.seed = seed;
    const PdrResult p = compute_pdr(log);
    m.sent = p.sent;
    m.delivered = p.delivered;
    m.pdr = p.pdr;
    const DelayHops dh = compute_delay_and_hops(log);
    m.avg_e2e_delay_s = dh.avg_delay_s;
    m.avg_hopcount = dh.avg_hops;
    const auto ote = compute_overhead_throughput_energy(log, duration_s, initial_energy_j, final_nodes, policy);
    m.control_overhead = ote.control;
    m.throughput_bps = ote.throughput_bps;
    m.energy_consumed_j = ote.energy_j;
    return m;
}

void write_metrics_csv_header(std::ostream& os)
{
    os << "protocol,seed,pdr,avg_e2e_delay_s,throughput_bps,control_overhead,avg_hopcount,energy_consumed_j,sent,delivered\n";
}

void write_metrics_csv_row(std::ostream& os, const RunMetrics& m)
{
    os << m.protocol << ',' << m.seed << ',' << fmt(m.pdr) << ',' << fmt(m.avg_e2e_delay_s) << ',' << fmt(m.throughput_bps) << ','
       << m.control_overhead << ',' << fmt(m.avg_hopcount) << ',' << fmt(m.energy_consumed_j) << ',' << m.sent << ',' << m.delivered << '\n';
}

nlohmann::json summarize(const std::vector<RunMetrics>& runs)
{
    struct Columns {
        std::vector<double> pdr, delay, throughput, overhead, hops, energy, sent, delivered;
    };
    std::map<std::string, Columns> by_protocol;
    for (const auto& m : runs) {
        Columns& c = by_protocol[m.protocol];
        if (m.pdr)
            c.pdr.push_back(*m.pdr);
        if (m.avg_e2e_delay_s)
            c.delay.push_back(*m.avg_e2e_delay_s);
        if (m.avg_hopcount)
            c.hops.push_back(*m.avg_hopcount);
        c.throughput.push_back(m.throughput_bps);
        c.overhead.push_back(static_cast<double>(m.control_overhead));
        c.energy.push_back(m.energy_consumed_j);
        c.sent.push_back(static_cast<double>(m.sent));
        c.delivered.push_back(static_cast<double>(m.delivered));
    }

    nlohmann::json out;
    out["protocols"] = nlohmann::json::object();
    for (const auto& [name, c] : by_protocol) {
        out["protocols"][name] = {
            {"runs", c.overhead.size()},
            {"pdr", to_json(stat(c.pdr))},
            {"avg_e2e_delay_s", to_json(stat(c.delay))},
            {"throughput_bps", to_json(stat(c.throughput))},
            {"control_overhead", to_json(stat(c.overhead))},
            {"avg_hopcount", to_json(stat(c.hops))},
            {"energy_consumed_j", to_json(stat(c.energy))},
            {"sent", to_json(stat(c.sent))},
            {"delivered", to_json(stat(c.delivered))},
        };
    }

    // elbrp against every other protocol present
    const auto elbrp = by_protocol.find("elbrp");
    if (elbrp != by_protocol.end()) {
        const double own = stat(elbrp->second.overhead).mean;
        for (const auto& [name, c] : by_protocol) {
            if (name == "elbrp")
                continue;
            const double other = stat(c.overhead).mean;
            out["overhead_ratio"]["elbrp/" + name] = other > 0.0 ? nlohmann::json(own / other) : nlohmann::json(nullptr);
        }
    }
    return out;
}

} // namespace lowpan
