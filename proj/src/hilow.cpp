#include "lowpan/hilow.hpp"

#include <string>

namespace lowpan::hilow {

namespace {

void check_config(HilowConfig cfg)
{
    if (cfg.mc == 0)
        throw std::invalid_argument("hilow: mc must be at least 1");
}

} // namespace

Address allocate_child(Address ap, std::uint32_t n, HilowConfig cfg)
{
    check_config(cfg);
    if (n == 0 || n > cfg.mc)
        throw ChildIndexError("hilow: child index " + std::to_string(n) + " outside 1.." + std::to_string(cfg.mc));
    const std::uint64_t c = static_cast<std::uint64_t>(cfg.mc) * ap + n;
    if (ap > kMaxAddress || c > kMaxAddress)
        throw AddressSpaceExhausted("hilow: child of " + std::to_string(ap) + " does not fit in 16 bits");
    return static_cast<Address>(c);
}

Address parent_of(Address ac, HilowConfig cfg)
{
    check_config(cfg);
    if (ac == 0)
        throw NoParent("hilow: the coordinator has no parent");
    return (ac - 1) / cfg.mc;
}

std::uint32_t depth_of(Address a, HilowConfig cfg)
{
    check_config(cfg);
    std::uint32_t d = 0;
    while (a != 0) {
        a = (a - 1) / cfg.mc;
        ++d;
    }
    return d;
}

Address ascendant_at(Address k, std::uint32_t d, HilowConfig cfg)
{
    std::uint32_t dk = depth_of(k, cfg);
    if (d > dk)
        throw std::invalid_argument("hilow: requested depth below the node");
    for (; dk > d; --dk)
        k = parent_of(k, cfg);
    return k;
}

bool is_ascendant(Address candidate, Address of, HilowConfig cfg)
{
    const std::uint32_t dc = depth_of(candidate, cfg);
    const std::uint32_t dk = depth_of(of, cfg);
    return dc < dk && ascendant_at(of, dc, cfg) == candidate;
}

std::optional<Address> next_hop(const HilowNode& current, Address dest, std::uint32_t dest_depth, HilowConfig cfg)
{
    check_config(cfg);
    if (dest > kMaxAddress)
        throw InvalidDestination("hilow: destination " + std::to_string(dest) + " outside the 16-bit space");
    if (depth_of(dest, cfg) != dest_depth)
        throw InvalidDestination("hilow: destination " + std::to_string(dest) + " is not at depth " + std::to_string(dest_depth));
    if (current.address == dest)
        return std::nullopt;
    if (current.depth < dest_depth && ascendant_at(dest, current.depth, cfg) == current.address)
        return ascendant_at(dest, current.depth + 1, cfg);
    // descendant or unrelated: both move up one level
    return parent_of(current.address, cfg);
}

std::vector<Address> route(Address current, Address dest, HilowConfig cfg)
{
    const std::uint32_t dd = depth_of(dest, cfg);
    std::vector<Address> hops;
    HilowNode at{current, depth_of(current, cfg), 0};
    while (auto nh = next_hop(at, dest, dd, cfg)) {
        hops.push_back(*nh);
        at = HilowNode{*nh, depth_of(*nh, cfg), 0};
    }
    return hops;
}

} // namespace lowpan::hilow
