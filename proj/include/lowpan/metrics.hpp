#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "lowpan/core_model.hpp"
#include "lowpan/packet_log.hpp"

namespace lowpan {

/// Which transmissions count as control overhead. RREQ and RREP always do;
/// ACK and DATA never do.
struct OverheadPolicy {
    bool count_rerr = true;
    bool count_beacon = true;
    bool count_hello = true;
};

struct RunMetrics {
    std::string protocol;
    std::uint64_t seed = 0;
    std::optional<double> pdr; // nullopt when nothing was sent
    std::optional<double> avg_e2e_delay_s;
    double throughput_bps = 0.0;
    std::uint64_t control_overhead = 0;
    std::optional<double> avg_hopcount;
    double energy_consumed_j = 0.0;
    std::uint64_t sent = 0;
    std::uint64_t delivered = 0;
};

struct PdrResult {
    std::uint64_t sent = 0;
    std::uint64_t delivered = 0;
    std::optional<double> pdr;
};

struct DelayHops {
    std::optional<double> avg_delay_s;
    std::optional<double> avg_hops;
};

struct OverheadThroughputEnergy {
    std::uint64_t control = 0;
    double throughput_bps = 0.0;
    double energy_j = 0.0;
};

PdrResult compute_pdr(const PacketLog& log);
DelayHops compute_delay_and_hops(const PacketLog& log);

/// Energy is the sum over nodes of initial minus final energy.
OverheadThroughputEnergy compute_overhead_throughput_energy(const PacketLog& log, double duration_s, const std::vector<double>& initial_energy_j,
                                                            const std::vector<NodeState>& final_nodes, OverheadPolicy policy = {});

bool is_control(TraceKind kind, OverheadPolicy policy);

RunMetrics compute_metrics(const PacketLog& log, std::uint64_t seed, double duration_s, const std::vector<double>& initial_energy_j,
                           const std::vector<NodeState>& final_nodes, OverheadPolicy policy = {});

void write_metrics_csv_header(std::ostream& os);
void write_metrics_csv_row(std::ostream& os, const RunMetrics& m);

/// Per-protocol means and sample standard deviations across seeds, plus
/// elbrp/load ratios when both protocols are present.
nlohmann::json summarize(const std::vector<RunMetrics>& runs);

} // namespace lowpan
