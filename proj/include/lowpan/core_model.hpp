#pragma once

#include <compare>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "lowpan/rng.hpp"

namespace lowpan {

/// Invalid scenario or deployment parameters.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A link was requested between nodes farther apart than the radio range.
class OutOfRangeError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// Position in meters on the deployment field.
struct Location {
    double x = 0.0;
    double y = 0.0;

    friend bool operator==(const Location&, const Location&) = default;
};

struct Terrain {
    double width = 0.0;
    double height = 0.0;

    bool contains(Location loc) const
    {
        return loc.x >= 0.0 && loc.y >= 0.0 && loc.x <= width && loc.y <= height;
    }
    Location center() const { return {width / 2.0, height / 2.0}; }
};

enum class AddressMode : std::uint8_t { Short16, Extended64 };

/// Link-layer address, either 16-bit short or 64-bit extended.
/// Short address 0 belongs to the edge router.
struct NodeAddress {
    AddressMode mode = AddressMode::Short16;
    std::uint64_t value = 0;

    static NodeAddress short_addr(std::uint16_t v) { return {AddressMode::Short16, v}; }
    static NodeAddress extended(std::uint64_t v) { return {AddressMode::Extended64, v}; }

    bool valid() const { return mode == AddressMode::Extended64 || value <= 0xFFFF; }
    bool is_extended() const { return mode == AddressMode::Extended64; }

    friend auto operator<=>(const NodeAddress&, const NodeAddress&) = default;
};

std::string to_string(const NodeAddress& addr);

enum class NodeRole : std::uint8_t { EdgeRouter, LocalEdgeRouter, ReducedFunctionDevice };

const char* to_string(NodeRole role);

struct LqiValue {
    std::uint8_t raw = 0;

    friend auto operator<=>(const LqiValue&, const LqiValue&) = default;
};

/// Physical state of one node. Protocol tables live with the protocol agents.
struct NodeState {
    NodeAddress address;
    NodeRole role = NodeRole::ReducedFunctionDevice;
    Location location;
    double energy_j = 0.0;
    bool awake = true;

    bool alive() const { return energy_j > 0.0; }
};

/// Rounds x to the nearest integer, halves away from negative infinity.
std::int64_t round_half_up(double x);

double euclidean_distance(Location a, Location b);

/// Scatters `count` nodes uniformly over the terrain. Node 0 is the edge
/// router at `er_position` (terrain center by default); ceil(ler_fraction *
/// (count - 1)) of the others are local edge routers picked by seeded draw.
std::vector<NodeState> deploy_nodes(std::size_t count, Terrain terrain, double ler_fraction, std::uint64_t seed,
                                    std::optional<Location> er_position = std::nullopt, double initial_energy_j = 1.0);

/// Number of LERs deploy_nodes assigns for the given parameters.
std::size_t ler_count(std::size_t count, double ler_fraction);

/// Distance-linear LQI with symmetric integer noise, clamped to [0, 255].
/// Throws OutOfRangeError when distance exceeds radio_range.
LqiValue link_lqi(double distance, double radio_range, int noise_amplitude, Rng& rng);

/// How much closer `candidate` is to `destination` than `current` (negative if farther).
double progress_toward(Location current, Location candidate, Location destination);

/// Forwarding weight: normalized progress times normalized LQI, in [0, 1].
double route_metric(double progress, double radio_range, LqiValue lqi);

} // namespace lowpan
