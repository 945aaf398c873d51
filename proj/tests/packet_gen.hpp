#pragma once

#include "lowpan/packet.hpp"

namespace testing {

using namespace lowpan;

inline NodeAddress random_address(Rng& rng, bool extended)
{
    return extended ? NodeAddress::extended(rng.next()) : NodeAddress::short_addr(static_cast<std::uint16_t>(rng.next()));
}

inline WireLocation random_wire_location(Rng& rng)
{
    return {static_cast<std::uint16_t>(rng.next()), static_cast<std::uint16_t>(rng.next())};
}

inline std::optional<RouteExt> random_ext(Rng& rng)
{
    if (!rng.bernoulli(0.5))
        return std::nullopt;
    return RouteExt{static_cast<std::uint16_t>(rng.next()), static_cast<std::uint8_t>(rng.next()), static_cast<std::uint8_t>(rng.next())};
}

/// A uniformly chosen valid packet of any type, both address widths.
inline Packet random_packet(Rng& rng)
{
    const bool d = rng.bernoulli(0.5);
    const bool o = rng.bernoulli(0.5);
    switch (rng.uniform_int(0, 5)) {
    case 0: {
        RreqPacket p;
        p.flags = {d, o, 0};
        p.dest_addr = random_address(rng, d);
        p.dest_loc = random_wire_location(rng);
        p.orig_addr = random_address(rng, o);
        p.orig_loc = random_wire_location(rng);
        p.ext = random_ext(rng);
        return p;
    }
    case 1: {
        RrepPacket p;
        p.flags = {d, o, 0};
        p.responder_addr = random_address(rng, d);
        p.responder_loc = random_wire_location(rng);
        p.link_lqi = LqiValue{static_cast<std::uint8_t>(rng.next())};
        p.orig_addr = random_address(rng, o);
        p.ext = random_ext(rng);
        return p;
    }
    case 2: {
        RerrPacket p;
        p.flags = {d, o, 0};
        p.unreachable_addr = random_address(rng, d);
        p.orig_addr = random_address(rng, o);
        return p;
    }
    case 3: {
        DataPacket p;
        p.flags = {d, o, 0};
        p.mesh.hops_left = static_cast<std::uint8_t>(rng.next());
        p.mesh.final_dest = random_address(rng, d);
        p.mesh.orig = random_address(rng, o);
        p.seq = static_cast<std::uint16_t>(rng.next());
        p.payload.resize(static_cast<std::size_t>(rng.uniform_int(0, 81)));
        for (auto& b : p.payload)
            b = static_cast<std::uint8_t>(rng.next());
        return p;
    }
    case 4: {
        ErBeaconPacket p;
        p.flags = {d, false, 0};
        p.er_addr = random_address(rng, d);
        p.er_loc = random_wire_location(rng);
        return p;
    }
    default: {
        AckPacket p;
        p.seq = static_cast<std::uint16_t>(rng.next());
        return p;
    }
    }
}

/// Exact decode outcome: a packet or a typed codec error. Anything else escapes.
inline bool decodes_cleanly(std::span<const std::uint8_t> bytes)
{
    try {
        (void)decode(bytes);
        return true;
    } catch (const CodecError&) {
        return true;
    }
}

} // namespace testing
