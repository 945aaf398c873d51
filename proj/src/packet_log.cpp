#include "lowpan/packet_log.hpp"

#include <cmath>
#include <cstdio>
#include <ostream>

namespace lowpan {

SimTime from_seconds(double seconds)
{
    return static_cast<SimTime>(std::llround(seconds * static_cast<double>(kTicksPerSecond)));
}

double to_seconds(SimTime t)
{
    return static_cast<double>(t) / static_cast<double>(kTicksPerSecond);
}

const char* to_string(LogEvent e)
{
    switch (e) {
    case LogEvent::Tx:
        return "tx";
    case LogEvent::Rx:
        return "rx";
    case LogEvent::Drop:
        return "drop";
    case LogEvent::Generate:
        return "gen";
    case LogEvent::Deliver:
        return "deliver";
    }
    return "?";
}

const char* to_string(TraceKind k)
{
    switch (k) {
    case TraceKind::Rreq:
        return "rreq";
    case TraceKind::Rrep:
        return "rrep";
    case TraceKind::Rerr:
        return "rerr";
    case TraceKind::Data:
        return "data";
    case TraceKind::ErBeacon:
        return "beacon";
    case TraceKind::Ack:
        return "ack";
    case TraceKind::Hello:
        return "hello";
    }
    return "?";
}

const char* to_string(Reason r)
{
    switch (r) {
    case Reason::None:
        return "";
    case Reason::Beacon:
        return "beacon";
    case Reason::Rreq:
        return "rreq";
    case Reason::Rrep:
        return "rrep";
    case Reason::RrepForward:
        return "rrep-fwd";
    case Reason::Select:
        return "select";
    case Reason::Forward:
        return "forward";
    case Reason::Retry:
        return "retry";
    case Reason::Void:
        return "void";
    case Reason::Rerr:
        return "rerr";
    case Reason::Ack:
        return "ack";
    case Reason::Hello:
        return "hello";
    case Reason::Loss:
        return "loss";
    case Reason::Asleep:
        return "asleep";
    case Reason::Depleted:
        return "depleted";
    case Reason::Ttl:
        return "ttl";
    case Reason::NoRoute:
        return "noroute";
    case Reason::Timeout:
        return "timeout";
    case Reason::Generate:
        return "gen";
    case Reason::Deliver:
        return "deliver";
    }
    return "?";
}

void PacketLog::write_csv(std::ostream& os) const
{
    os << "time_s,event,node,packet_type,bytes,energy_j_debit,protocol,reason,peer,orig,seq,hops\n";
    char buf[256];
    for (const auto& r : records_) {
        const long long peer = r.peer == kNoNode ? -1 : static_cast<long long>(r.peer);
        std::snprintf(buf, sizeof buf, "%.9f,%s,%u,%s,%u,%.17g,%s,%s,%lld,%llu,%u,%u\n", to_seconds(r.at), to_string(r.event), r.node,
                      to_string(r.kind), r.bytes, r.energy_j, protocol_.c_str(), to_string(r.reason), peer,
                      static_cast<unsigned long long>(r.orig), r.seq, r.hops);
        os << buf;
    }
}

} // namespace lowpan
