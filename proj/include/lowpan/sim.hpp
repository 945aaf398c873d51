#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "lowpan/core_model.hpp"
#include "lowpan/packet_log.hpp"
#include "lowpan/rng.hpp"

namespace lowpan {

/// Thrown when an event is scheduled before the current time.
class SchedulingError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

/// Metadata the sender attaches to a transmission for tracing.
struct TxInfo {
    TraceKind kind = TraceKind::Data;
    Reason reason = Reason::None;
    std::uint64_t orig = 0;
    std::uint16_t seq = 0;
};

struct FrameDelivery {
    NodeIndex target = 0;
    NodeIndex sender = 0;
    std::vector<std::uint8_t> bytes;
    LqiValue lqi;
    TxInfo info;
};

struct TimerFire {
    NodeIndex node = 0;
    std::uint32_t timer_id = 0;
    std::uint64_t token = 0;
};

struct TrafficTick {
    NodeIndex source = 0;
};

using EventKind = std::variant<FrameDelivery, TimerFire, TrafficTick>;

struct SimEvent {
    SimTime at = 0;
    std::uint64_t seq = 0;
    EventKind kind;
};

/// Min-queue on (at, seq). Events at equal times pop in insertion order.
class EventQueue {
public:
    SimTime now() const { return now_; }
    bool empty() const { return heap_.empty(); }
    std::size_t size() const { return heap_.size(); }

    /// Returns the assigned sequence number; throws SchedulingError if at < now().
    std::uint64_t schedule(SimTime at, EventKind kind);

    const SimEvent& top() const { return heap_.front(); }

    /// Removes the earliest event and advances now() to its time.
    SimEvent pop();

private:
    std::vector<SimEvent> heap_;
    std::uint64_t next_seq_ = 0;
    SimTime now_ = 0;
};

struct RadioModel {
    double radio_range_m = 40.0;
    double loss_probability = 0.0;
    double bitrate_bps = 250'000.0;
    double proc_delay_s = 0.002;
    int noise_amplitude = 0;
};

struct EnergyModel {
    double tx_power_w = 0.02;
    double rx_power_w = 0.01;
    double initial_j = 1.0;
};

enum class SendStatus { Sent, LinkBreak, Suppressed };

class Network;

/// Protocol-side handler invoked by Network::run_until for every event.
class Dispatcher {
public:
    virtual ~Dispatcher() = default;
    virtual void on_frame(Network& net, const FrameDelivery& frame) = 0;
    virtual void on_timer(Network& net, const TimerFire& timer) = 0;
    virtual void on_traffic(Network& net, const TrafficTick& tick) = 0;
};

/// The shared radio medium plus every node's physical state.
///
/// A frame reaches each other node that is awake, alive and within range,
/// minus an independent Bernoulli loss per receiver. Reception happens
/// airtime + processing delay after the send. Transmit energy is charged at
/// send time and receive energy at delivery time; both appear in the log.
class Network {
public:
    Network(std::vector<NodeState> nodes, RadioModel radio, EnergyModel energy, std::uint64_t channel_seed, std::string protocol = {});

    SimTime now() const { return queue_.now(); }
    std::size_t size() const { return nodes_.size(); }
    const NodeState& node(NodeIndex i) const { return nodes_.at(i); }
    const std::vector<NodeState>& nodes() const { return nodes_; }
    const RadioModel& radio() const { return radio_; }
    const EnergyModel& energy() const { return energy_; }

    /// Index of the node owning `addr`, if any.
    std::optional<NodeIndex> index_of(const NodeAddress& addr) const;

    bool in_range(NodeIndex a, NodeIndex b) const;
    double distance(NodeIndex a, NodeIndex b) const;

    SimTime airtime(std::size_t bytes) const;
    double airtime_seconds(std::size_t bytes) const;

    SendStatus broadcast(NodeIndex sender, std::vector<std::uint8_t> bytes, const TxInfo& info);
    /// LinkBreak when the target is out of range (nothing is sent).
    SendStatus unicast(NodeIndex sender, NodeIndex target, std::vector<std::uint8_t> bytes, const TxInfo& info);

    void set_timer(NodeIndex node, SimTime delay, std::uint32_t timer_id, std::uint64_t token);
    void schedule_traffic(NodeIndex source, SimTime at);
    void set_awake(NodeIndex node, bool awake);

    /// Protocol-level trace entry (drops, generation, delivery).
    void record(const LogRecord& r) { log_.append(r); }

    const PacketLog& log() const { return log_; }
    PacketLog take_log() { return std::move(log_); }

    /// Energy-accounting path independent of the log: total debited per node.
    const std::vector<double>& debits() const { return debits_; }
    std::uint64_t send_failures() const { return send_failures_; }
    std::uint64_t events_dispatched() const { return dispatched_; }

    /// Dispatches events in (at, seq) order until the queue is empty or the
    /// next event lies beyond end_time.
    void run_until(SimTime end_time, Dispatcher& dispatcher);

private:
    SendStatus transmit(NodeIndex sender, std::optional<NodeIndex> target, std::vector<std::uint8_t> bytes, const TxInfo& info);
    double debit(NodeIndex node, double joules);
    bool deliverable(const FrameDelivery& frame);

    std::vector<NodeState> nodes_;
    RadioModel radio_;
    EnergyModel energy_;
    Rng channel_;
    EventQueue queue_;
    PacketLog log_;
    std::vector<double> debits_;
    std::uint64_t send_failures_ = 0;
    std::uint64_t dispatched_ = 0;
};

} // namespace lowpan
