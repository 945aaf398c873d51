#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "lowpan/elbrp.hpp"
#include "lowpan/load.hpp"
#include "lowpan/metrics.hpp"

namespace lowpan {

struct TrafficConfig {
    std::size_t sources = 3;
    double rate_pps = 5.0;
    std::size_t payload_bytes = 81;
    double start_s = 1.0;
    double stop_s = 500.0;
};

struct ScenarioConfig {
    std::string name = "default";
    Terrain terrain{200.0, 200.0};
    std::optional<Location> er_position;
    std::size_t node_count = 50;
    double ler_fraction = 0.9;
    double duration_s = 500.0;
    RadioModel radio{40.0, 0.1, 250'000.0, 0.002, 0};
    EnergyModel energy;
    TrafficConfig traffic;
    MacParams mac;
    ElbrpParams elbrp;
    LoadParams load;
    OverheadPolicy overhead;
    std::vector<std::string> protocols{"elbrp", "load"};
    std::vector<std::uint64_t> seeds{1};
};

/// Sweeps one "section.key" over a list of values; each value is one cell.
struct Sweep {
    std::string parameter;
    std::vector<std::string> values;
};

struct ExperimentMatrix {
    ScenarioConfig base;
    std::optional<Sweep> sweep;
};

/// Sets "section.key" from text; throws ConfigError naming the field.
void set_field(ScenarioConfig& cfg, const std::string& field, const std::string& value);

/// Throws ConfigError naming the first offending field.
void validate(const ScenarioConfig& cfg);

/// INI text: [section] blocks of key = value. Unknown keys are errors.
ExperimentMatrix parse_config(std::istream& in, const std::string& source_name = "<config>");
ExperimentMatrix load_config(const std::filesystem::path& path);

/// One materialized cell of a matrix.
struct Cell {
    std::string name;
    ScenarioConfig config;
};

std::vector<Cell> expand(const ExperimentMatrix& matrix);

struct Topology {
    std::vector<NodeState> nodes;
    std::vector<NodeIndex> sources;
};

/// The seeded deployment plus its traffic sources.
Topology build_topology(const ScenarioConfig& cfg, std::uint64_t seed);

/// Nodes with a multi-hop unit-disk path to node 0.
std::vector<bool> connected_to_er(const std::vector<NodeState>& nodes, double radio_range);

/// Farthest-from-ER first, preferring RFDs that can reach the ER, then other
/// connected nodes, then disconnected ones. Ties go to the lower index.
std::vector<NodeIndex> pick_sources(const std::vector<NodeState>& nodes, std::size_t count, double radio_range);

std::unique_ptr<ForwardingProtocol> make_protocol(const std::string& name, const std::vector<NodeState>& nodes, const ScenarioConfig& cfg);

struct RunResult {
    RunMetrics metrics;
    PacketLog log;
    std::vector<NodeState> final_nodes;
    std::vector<double> debits;
    std::uint64_t events = 0;
};

/// Runs one protocol over an explicit topology. Node 0 must be the ER.
RunResult run_on_topology(const ScenarioConfig& cfg, const std::string& protocol, const Topology& topo, std::uint64_t seed);
RunResult run_scenario(const ScenarioConfig& cfg, const std::string& protocol, std::uint64_t seed);

struct MatrixOptions {
    std::optional<std::filesystem::path> out_dir;
    bool log_packets = false;
    unsigned parallel = 1;
    std::optional<std::vector<std::uint64_t>> seed_override;
};

struct CellResult {
    std::string name;
    std::vector<RunMetrics> runs; // protocol-major, then seed order
    nlohmann::json summary;
    std::vector<std::string> errors;
};

/// Runs every (cell, protocol, seed) and, with an out_dir, writes
/// <cell>/metrics.csv, <cell>/summary.json and optional packet logs, each
/// atomically. Failing runs are reported in CellResult::errors.
std::vector<CellResult> run_matrix(const ExperimentMatrix& matrix, const MatrixOptions& options);

/// Writes via a temporary file and rename.
void write_file_atomic(const std::filesystem::path& path, const std::string& contents);

} // namespace lowpan
