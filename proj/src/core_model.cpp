#include "lowpan/core_model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace lowpan {

std::string to_string(const NodeAddress& addr)
{
    std::ostringstream os;
    if (addr.is_extended())
        os << "ext:" << std::hex << addr.value;
    else
        os << addr.value;
    return os.str();
}

const char* to_string(NodeRole role)
{
    switch (role) {
    case NodeRole::EdgeRouter:
        return "ER";
    case NodeRole::LocalEdgeRouter:
        return "LER";
    case NodeRole::ReducedFunctionDevice:
        return "RFD";
    }
    return "?";
}

std::int64_t round_half_up(double x)
{
    return static_cast<std::int64_t>(std::floor(x + 0.5));
}

double euclidean_distance(Location a, Location b)
{
    return std::hypot(a.x - b.x, a.y - b.y);
}

std::size_t ler_count(std::size_t count, double ler_fraction)
{
    if (count < 2)
        return 0;
    // 0.3 * 50 evaluates to 15.000000000000002; do not round that up to 16
    const double exact = ler_fraction * static_cast<double>(count - 1);
    const auto n = static_cast<std::size_t>(std::ceil(exact - 1e-9));
    return std::min(n, count - 1);
}

std::vector<NodeState> deploy_nodes(std::size_t count, Terrain terrain, double ler_fraction, std::uint64_t seed,
                                    std::optional<Location> er_position, double initial_energy_j)
{
    if (count < 2)
        throw ConfigError("deploy_nodes: node count must be at least 2");
    if (!(terrain.width > 0.0) || !(terrain.height > 0.0))
        throw ConfigError("deploy_nodes: terrain dimensions must be positive");
    if (!(ler_fraction >= 0.0 && ler_fraction <= 1.0))
        throw ConfigError("deploy_nodes: ler_fraction must lie in [0, 1]");
    if (count - 1 > 0xFFFF)
        throw ConfigError("deploy_nodes: too many nodes for 16-bit addressing");
    const Location er_loc = er_position.value_or(terrain.center());
    if (!terrain.contains(er_loc))
        throw ConfigError("deploy_nodes: edge router position lies outside the terrain");

    Rng rng(seed);
    std::vector<NodeState> nodes(count);
    for (std::size_t i = 0; i < count; ++i) {
        NodeState& n = nodes[i];
        n.address = NodeAddress::short_addr(static_cast<std::uint16_t>(i));
        n.energy_j = initial_energy_j;
        n.awake = true;
        if (i == 0) {
            n.role = NodeRole::EdgeRouter;
            n.location = er_loc;
        } else {
            n.role = NodeRole::ReducedFunctionDevice;
            const double x = rng.uniform01() * terrain.width;
            const double y = rng.uniform01() * terrain.height;
            n.location = {x, y};
        }
    }

    // partial Fisher-Yates over indices 1..count-1
    std::vector<std::size_t> pool(count - 1);
    std::iota(pool.begin(), pool.end(), std::size_t{1});
    const std::size_t lers = ler_count(count, ler_fraction);
    for (std::size_t k = 0; k < lers; ++k) {
        const auto j = static_cast<std::size_t>(rng.uniform_int(static_cast<std::int64_t>(k), static_cast<std::int64_t>(pool.size() - 1)));
        std::swap(pool[k], pool[j]);
        nodes[pool[k]].role = NodeRole::LocalEdgeRouter;
    }
    return nodes;
}

LqiValue link_lqi(double distance, double radio_range, int noise_amplitude, Rng& rng)
{
    if (distance > radio_range)
        throw OutOfRangeError("link_lqi: distance exceeds radio range");
    const double d = std::max(distance, 0.0);
    std::int64_t value = round_half_up(255.0 * (1.0 - d / radio_range));
    if (noise_amplitude > 0)
        value += rng.uniform_int(-noise_amplitude, noise_amplitude);
    return LqiValue{static_cast<std::uint8_t>(std::clamp<std::int64_t>(value, 0, 255))};
}

double progress_toward(Location current, Location candidate, Location destination)
{
    return euclidean_distance(current, destination) - euclidean_distance(candidate, destination);
}

double route_metric(double progress, double radio_range, LqiValue lqi)
{
    const double p = std::clamp(progress, 0.0, radio_range) / radio_range;
    return p * (static_cast<double>(lqi.raw) / 255.0);
}

} // namespace lowpan
