#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <vector>

namespace lowpan::hilow {

// HiLow tree addressing: a parent with address AP gives its N-th child
// (1 <= N <= MC) the address MC*AP + N. Address 0 is the coordinator.

class ChildIndexError : public std::out_of_range {
public:
    using std::out_of_range::out_of_range;
};

class AddressSpaceExhausted : public std::overflow_error {
public:
    using std::overflow_error::overflow_error;
};

class NoParent : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

class InvalidDestination : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

using Address = std::uint32_t; // holds 16-bit addresses; wider values are rejected

inline constexpr Address kMaxAddress = 0xFFFF;

struct HilowConfig {
    std::uint32_t mc = 4;
};

struct HilowNode {
    Address address = 0;
    std::uint32_t depth = 0;
    std::uint32_t children_count = 0;
};

Address allocate_child(Address ap, std::uint32_t n, HilowConfig cfg);
Address parent_of(Address ac, HilowConfig cfg);

/// Number of parent_of steps from `a` to the coordinator.
std::uint32_t depth_of(Address a, HilowConfig cfg);

/// Ascendant of k at depth d; k itself when d == depth(k).
Address ascendant_at(Address k, std::uint32_t d, HilowConfig cfg);

bool is_ascendant(Address candidate, Address of, HilowConfig cfg);

/// One tree-routing step. nullopt when current == dest (deliver locally).
/// Goes down toward dest when current is one of its ascendants, else up.
std::optional<Address> next_hop(const HilowNode& current, Address dest, std::uint32_t dest_depth, HilowConfig cfg);

/// Full hop sequence from current to dest, excluding current.
std::vector<Address> route(Address current, Address dest, HilowConfig cfg);

} // namespace lowpan::hilow
