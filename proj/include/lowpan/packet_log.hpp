#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace lowpan {

/// Integer nanoseconds; exact comparisons and a stable event order.
using SimTime = std::int64_t;

inline constexpr SimTime kTicksPerSecond = 1'000'000'000;

SimTime from_seconds(double seconds);
double to_seconds(SimTime t);

using NodeIndex = std::uint32_t;
inline constexpr NodeIndex kNoNode = 0xFFFFFFFF;

enum class LogEvent : std::uint8_t { Tx, Rx, Drop, Generate, Deliver };

/// Traced frame category. Hello frames travel as RREP on the wire but are
/// traced separately so route replies and link beacons can be told apart.
enum class TraceKind : std::uint8_t { Rreq, Rrep, Rerr, Data, ErBeacon, Ack, Hello };

enum class Reason : std::uint8_t {
    None,
    Beacon,
    Rreq,
    Rrep,
    RrepForward,
    Select,
    Forward,
    Retry,
    Void,
    Rerr,
    Ack,
    Hello,
    Loss,
    Asleep,
    Depleted,
    Ttl,
    NoRoute,
    Timeout,
    Generate,
    Deliver,
};

const char* to_string(LogEvent e);
const char* to_string(TraceKind k);
const char* to_string(Reason r);

struct LogRecord {
    SimTime at = 0;
    LogEvent event = LogEvent::Tx;
    NodeIndex node = 0;
    TraceKind kind = TraceKind::Data;
    std::uint16_t bytes = 0;
    double energy_j = 0.0;
    Reason reason = Reason::None;
    NodeIndex peer = kNoNode; // unicast target on tx, sender on rx
    std::uint64_t orig = 0;   // originator address of DATA/RREQ/RERR traffic
    std::uint16_t seq = 0;    // DATA sequence number or LOAD rreq id
    std::uint8_t hops = 0;    // hop count on Deliver

    friend bool operator==(const LogRecord&, const LogRecord&) = default;
};

/// Append-only trace of one run. For Generate and Deliver records `bytes`
/// is the application payload length.
class PacketLog {
public:
    explicit PacketLog(std::string protocol = {}) : protocol_(std::move(protocol)) {}

    void append(const LogRecord& r) { records_.push_back(r); }
    const std::vector<LogRecord>& records() const { return records_; }
    const std::string& protocol() const { return protocol_; }
    std::size_t size() const { return records_.size(); }

    /// time_s,event,node,packet_type,bytes,energy_j_debit,protocol,reason,peer,orig,seq,hops
    void write_csv(std::ostream& os) const;

    friend bool operator==(const PacketLog&, const PacketLog&) = default;

private:
    std::string protocol_;
    std::vector<LogRecord> records_;
};

} // namespace lowpan
